//! Exact per-pair Voronoi facets on bisectors, computed by half-space clipping.
//!
//! A pair (X1, X2) owns a facet: the set of points equidistant from both
//! members and no closer to any third point. In 2D the facet is an interval of
//! the bisector line, in 3D a convex polygon of the bisector plane. Both are
//! computed by clipping an initial window-derived span with one half-space per
//! third point, consuming candidates in increasing distance from the chord
//! midpoint C and stopping once no remaining candidate can cut the current
//! facet: a point farther than 2 max R from C, where R(s) = sqrt(s^2 + (r/2)^2)
//! is the distance of a facet point at offset s to the pair members, cannot be
//! closer to any facet point than the pair members are.

use serde::{Deserialize, Serialize};

use super::{dot, norm, OrderedPair, Point};

/// The 1D facet of a planar pair: offsets s in [lo, hi] along the bisector
/// direction n measured from the midpoint C. Empty when lo > hi.
#[derive(Clone, Debug)]
pub struct FacetInterval {
    pair: OrderedPair<2>,
    center: Point<2>,
    direction: [f64; 2],
    lo: f64,
    hi: f64,
}

impl FacetInterval {
    pub fn pair(&self) -> &OrderedPair<2> {
        &self.pair
    }

    pub fn center(&self) -> &Point<2> {
        &self.center
    }

    pub fn direction(&self) -> &[f64; 2] {
        &self.direction
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi
    }

    pub fn contains(&self, s: f64) -> bool {
        self.lo <= s && s <= self.hi
    }

    /// Ambient point C + s n.
    pub fn point_at(&self, s: f64) -> Point<2> {
        Point([
            self.center.0[0] + s * self.direction[0],
            self.center.0[1] + s * self.direction[1],
        ])
    }

    /// Distance from the facet point at offset s to either pair member.
    pub fn ball_radius_at(&self, s: f64) -> f64 {
        let half_r = 0.5 * self.pair.separation();
        (s * s + half_r * half_r).sqrt()
    }
}

/// Computes the facet interval of `pair` against the given third points,
/// starting from the span [-half_span, half_span]. Third points coinciding
/// with a pair member are skipped.
pub fn facet_interval_2d(
    pair: &OrderedPair<2>,
    others: &[Point<2>],
    half_span: f64,
) -> FacetInterval {
    let center = pair.midpoint();
    let direction = pair.bisector_direction();
    let half_r = 0.5 * pair.separation();

    let mut lo = -half_span;
    let mut hi = half_span;

    let mut sorted: Vec<(f64, usize)> = others
        .iter()
        .enumerate()
        .filter(|(_, y)| **y != *pair.first() && **y != *pair.second())
        .map(|(i, y)| (y.dist_sq(&center), i))
        .collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    for (dist_sq, idx) in sorted {
        if lo > hi {
            break;
        }
        let reach = 2.0 * (lo.abs().max(hi.abs()).powi(2) + half_r * half_r).sqrt();
        if dist_sq.sqrt() > reach {
            break;
        }
        let y = &others[idx];
        let w = y.sub(&center);
        let a = dot(&direction, &w);
        // Equidistance-to-first vs distance-to-y reduces to 2 s a <= q.
        let q = dot(&w, &w) - half_r * half_r;
        if a.abs() <= 1e-12 * norm(&w) {
            if q < 0.0 {
                lo = f64::INFINITY;
                hi = f64::NEG_INFINITY;
            }
            continue;
        }
        let bound = q / (2.0 * a);
        if a > 0.0 {
            hi = hi.min(bound);
        } else {
            lo = lo.max(bound);
        }
    }

    FacetInterval {
        pair: *pair,
        center,
        direction,
        lo,
        hi,
    }
}

/// A closed half-plane `normal . x <= offset` in bisector-plane coordinates.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Cut {
    pub normal: [f64; 2],
    pub offset: f64,
}

impl Cut {
    pub fn admits(&self, p: [f64; 2]) -> bool {
        self.normal[0] * p[0] + self.normal[1] * p[1] <= self.offset
    }
}

/// The 2D facet of a spatial pair: a convex polygon in an orthonormal basis
/// (u, v) of the bisector plane centered at the midpoint C. The polygon equals
/// the intersection of all retained cuts (including the initial bounding
/// square), which is what the circle-arc computation evaluates.
#[derive(Clone, Debug)]
pub struct FacetPolygon {
    pair: OrderedPair<3>,
    center: Point<3>,
    basis: [[f64; 3]; 2],
    vertices: Vec<[f64; 2]>,
    cuts: Vec<Cut>,
}

impl FacetPolygon {
    pub fn pair(&self) -> &OrderedPair<3> {
        &self.pair
    }

    pub fn center(&self) -> &Point<3> {
        &self.center
    }

    pub fn basis(&self) -> &[[f64; 3]; 2] {
        &self.basis
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn cuts(&self) -> &[Cut] {
        &self.cuts
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn contains_plane_point(&self, p: [f64; 2]) -> bool {
        !self.is_empty() && self.cuts.iter().all(|c| c.admits(p))
    }

    /// Ambient point C + a u + b v.
    pub fn to_ambient(&self, p: [f64; 2]) -> Point<3> {
        let [u, v] = &self.basis;
        Point(std::array::from_fn(|d| {
            self.center.0[d] + p[0] * u[d] + p[1] * v[d]
        }))
    }

    /// Distance from a facet point at plane coordinates p to either pair member.
    pub fn ball_radius_at(&self, p: [f64; 2]) -> f64 {
        let half_r = 0.5 * self.pair.separation();
        (p[0] * p[0] + p[1] * p[1] + half_r * half_r).sqrt()
    }
}

/// Orthonormal basis of the plane orthogonal to `axis` (unit vector).
fn plane_basis(axis: [f64; 3]) -> [[f64; 3]; 2] {
    // Seed with the coordinate axis least aligned with the pair axis.
    let mut k = 0;
    for d in 1..3 {
        if axis[d].abs() < axis[k].abs() {
            k = d;
        }
    }
    let mut u = [0.0; 3];
    u[k] = 1.0;
    let proj = dot(&u, &axis);
    for d in 0..3 {
        u[d] -= proj * axis[d];
    }
    let nu = norm(&u);
    for c in u.iter_mut() {
        *c /= nu;
    }
    let v = [
        axis[1] * u[2] - axis[2] * u[1],
        axis[2] * u[0] - axis[0] * u[2],
        axis[0] * u[1] - axis[1] * u[0],
    ];
    [u, v]
}

/// Clips a convex polygon by a half-plane, Sutherland-Hodgman style.
fn clip_polygon(vertices: &[[f64; 2]], cut: &Cut) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(vertices.len() + 1);
    let n = vertices.len();
    for i in 0..n {
        let cur = vertices[i];
        let next = vertices[(i + 1) % n];
        let c_in = cut.admits(cur);
        let n_in = cut.admits(next);
        if c_in {
            out.push(cur);
        }
        if c_in != n_in {
            let fc = cut.normal[0] * cur[0] + cut.normal[1] * cur[1] - cut.offset;
            let fn_ = cut.normal[0] * next[0] + cut.normal[1] * next[1] - cut.offset;
            let t = fc / (fc - fn_);
            out.push([
                cur[0] + t * (next[0] - cur[0]),
                cur[1] + t * (next[1] - cur[1]),
            ]);
        }
    }
    out
}

/// Computes the facet polygon of a spatial pair against the given third
/// points, starting from the square [-half_span, half_span]^2 in the bisector
/// plane.
pub fn facet_polygon_3d(
    pair: &OrderedPair<3>,
    others: &[Point<3>],
    half_span: f64,
) -> FacetPolygon {
    let center = pair.midpoint();
    let r = pair.separation();
    let half_r = 0.5 * r;
    let axis_vec = pair.second().sub(pair.first());
    let axis = std::array::from_fn(|d| axis_vec[d] / r);
    let basis = plane_basis(axis);

    let h = half_span;
    let mut vertices = vec![[-h, -h], [h, -h], [h, h], [-h, h]];
    let mut cuts = vec![
        Cut {
            normal: [1.0, 0.0],
            offset: h,
        },
        Cut {
            normal: [-1.0, 0.0],
            offset: h,
        },
        Cut {
            normal: [0.0, 1.0],
            offset: h,
        },
        Cut {
            normal: [0.0, -1.0],
            offset: h,
        },
    ];

    let mut sorted: Vec<(f64, usize)> = others
        .iter()
        .enumerate()
        .filter(|(_, y)| **y != *pair.first() && **y != *pair.second())
        .map(|(i, y)| (y.dist_sq(&center), i))
        .collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    for (dist_sq, idx) in sorted {
        if vertices.is_empty() {
            break;
        }
        let max_off_sq = vertices
            .iter()
            .map(|v| v[0] * v[0] + v[1] * v[1])
            .fold(0.0, f64::max);
        let reach = 2.0 * (max_off_sq + half_r * half_r).sqrt();
        if dist_sq.sqrt() > reach {
            break;
        }
        let y = &others[idx];
        let w = y.sub(&center);
        let alpha = dot(&basis[0], &w);
        let beta = dot(&basis[1], &w);
        let q = dot(&w, &w) - half_r * half_r;
        let len = (alpha * alpha + beta * beta).sqrt();
        if len <= 1e-12 * norm(&w) {
            if q < 0.0 {
                vertices.clear();
            }
            continue;
        }
        // 2(alpha a + beta b) <= q, normalized.
        let cut = Cut {
            normal: [2.0 * alpha / (2.0 * len), 2.0 * beta / (2.0 * len)],
            offset: q / (2.0 * len),
        };
        vertices = clip_polygon(&vertices, &cut);
        cuts.push(cut);
    }

    FacetPolygon {
        pair: *pair,
        center,
        basis,
        vertices,
        cuts,
    }
}

/// Angular measure in [0, 2pi] of the directions t for which the point
/// (rho cos t, rho sin t) satisfies every cut. Exact up to floating point:
/// each cut admits a single arc of directions; elementary arcs between cut
/// boundary angles are classified by their midpoint.
pub fn circle_cuts_arc_measure(cuts: &[Cut], rho: f64) -> f64 {
    let tau = super::TAU;
    let mut events: Vec<f64> = Vec::new();
    for cut in cuts {
        let len = norm(&cut.normal);
        if len == 0.0 {
            if cut.offset < 0.0 {
                return 0.0;
            }
            continue;
        }
        let k = cut.offset / (rho * len);
        if k >= 1.0 {
            continue;
        }
        if k <= -1.0 {
            return 0.0;
        }
        let phi = cut.normal[1].atan2(cut.normal[0]);
        let delta = k.acos();
        events.push((phi + delta).rem_euclid(tau));
        events.push((phi - delta).rem_euclid(tau));
    }

    let admits = |t: f64| {
        let p = [rho * t.cos(), rho * t.sin()];
        cuts.iter().all(|c| {
            c.normal[0] * p[0] + c.normal[1] * p[1] <= c.offset + 1e-12 * (1.0 + c.offset.abs())
        })
    };

    if events.is_empty() {
        return if admits(0.0) { tau } else { 0.0 };
    }

    events.sort_by(|a, b| a.total_cmp(b));
    let mut total = 0.0;
    let n = events.len();
    for i in 0..n {
        let a = events[i];
        let b = if i + 1 < n {
            events[i + 1]
        } else {
            events[0] + tau
        };
        let mid = 0.5 * (a + b);
        if admits(mid.rem_euclid(tau)) {
            total += b - a;
        }
    }
    total
}

/// Length of the intersection of the circle of radius `rho` centered at C (in
/// the facet plane) with the facet polygon. Zero for an empty polygon.
pub fn circle_polygon_arclength(poly: &FacetPolygon, rho: f64) -> f64 {
    if poly.is_empty() || !(rho.is_finite() && rho > 0.0) {
        return 0.0;
    }
    rho * circle_cuts_arc_measure(&poly.cuts, rho)
}
