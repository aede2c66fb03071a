//! Exact geometric primitives: points, ordered pairs, angle conventions,
//! the bisector point seeing a pair at a prescribed angle, and chord geometry.
//!
//! Conventions used throughout the crate:
//!
//! * Pairs of distinct points carry an intrinsic order: lexicographic on
//!   coordinates (first coordinate, then second, then third).
//! * The oriented angle at which a point `z` sees an ordered pair is measured
//!   clockwise from the ray `z -> first` to the ray `z -> second` and lives in
//!   the open interval (0, 2pi).
//! * In dimension three no orientation is fixed; only the unoriented angle in
//!   (0, pi] is meaningful there.

pub mod facet;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TAU: f64 = 2.0 * std::f64::consts::PI;

/// A point of the ambient space (`D` = 2 or 3). Coordinates are unit-free lengths.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point<const D: usize>(pub [f64; D]);

pub type Point2 = Point<2>;
pub type Point3 = Point<3>;

impl<const D: usize> Point<D> {
    pub fn new(coords: [f64; D]) -> Self {
        Point(coords)
    }

    pub fn origin() -> Self {
        Point([0.0; D])
    }

    pub fn coords(&self) -> &[f64; D] {
        &self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    pub fn dist_sq(&self, other: &Self) -> f64 {
        let mut acc = 0.0;
        for d in 0..D {
            let diff = self.0[d] - other.0[d];
            acc += diff * diff;
        }
        acc
    }

    pub fn dist(&self, other: &Self) -> f64 {
        self.dist_sq(other).sqrt()
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|c| c * c).sum()
    }

    /// Componentwise difference `self - other`.
    pub fn sub(&self, other: &Self) -> [f64; D] {
        std::array::from_fn(|d| self.0[d] - other.0[d])
    }

    /// Lexicographic comparison by coordinate 0, then 1, then 2.
    pub fn lex_cmp(&self, other: &Self) -> Ordering {
        for d in 0..D {
            match self.0[d].partial_cmp(&other.0[d]) {
                Some(Ordering::Equal) => continue,
                Some(ord) => return ord,
                // NaN coordinates never enter via the public constructors of
                // samples; treat as equal to keep the order total.
                None => continue,
            }
        }
        Ordering::Equal
    }
}

pub(crate) fn dot<const D: usize>(a: &[f64; D], b: &[f64; D]) -> f64 {
    let mut acc = 0.0;
    for d in 0..D {
        acc += a[d] * b[d];
    }
    acc
}

pub(crate) fn norm<const D: usize>(a: &[f64; D]) -> f64 {
    dot(a, a).sqrt()
}

/// A pair of distinct points in intrinsic (lexicographic) order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrderedPair<const D: usize> {
    first: Point<D>,
    second: Point<D>,
}

impl<const D: usize> OrderedPair<D> {
    /// Orders `p` and `q` lexicographically. Fails on coincident points.
    pub fn lex_order(p: Point<D>, q: Point<D>) -> Result<Self> {
        match p.lex_cmp(&q) {
            Ordering::Less => Ok(OrderedPair {
                first: p,
                second: q,
            }),
            Ordering::Greater => Ok(OrderedPair {
                first: q,
                second: p,
            }),
            Ordering::Equal => Err(Error::DegeneratePair),
        }
    }

    pub fn first(&self) -> &Point<D> {
        &self.first
    }

    pub fn second(&self) -> &Point<D> {
        &self.second
    }

    /// Distance r between the two pair members.
    pub fn separation(&self) -> f64 {
        self.first.dist(&self.second)
    }

    /// Midpoint C of the segment joining the pair.
    pub fn midpoint(&self) -> Point<D> {
        Point(std::array::from_fn(|d| {
            0.5 * (self.first.0[d] + self.second.0[d])
        }))
    }
}

impl OrderedPair<2> {
    /// Unit vector along the bisector line: the first->second unit direction
    /// rotated 90 degrees clockwise. This fixes the sign of bisector offsets
    /// and makes the angle round trip with [`z_theta_2d`] exact.
    pub fn bisector_direction(&self) -> [f64; 2] {
        let r = self.separation();
        let u = self.second.sub(&self.first);
        [u[1] / r, -u[0] / r]
    }
}

/// An oriented (clockwise) angle in the open interval (0, 2pi).
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct OrientedAngle(f64);

impl OrientedAngle {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value > 0.0 && value < TAU {
            Ok(OrientedAngle(value))
        } else {
            Err(Error::InvalidParameter(format!(
                "oriented angle must lie in (0, 2pi), got {value}"
            )))
        }
    }

    pub fn radians(&self) -> f64 {
        self.0
    }

    /// Folds to the unoriented angle min(theta, 2pi - theta) in (0, pi].
    pub fn fold(&self) -> UnorientedAngle {
        UnorientedAngle(self.0.min(TAU - self.0))
    }
}

/// An unoriented angle in (0, pi].
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct UnorientedAngle(f64);

impl UnorientedAngle {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value > 0.0 && value <= std::f64::consts::PI {
            Ok(UnorientedAngle(value))
        } else {
            Err(Error::InvalidParameter(format!(
                "unoriented angle must lie in (0, pi], got {value}"
            )))
        }
    }

    pub fn radians(&self) -> f64 {
        self.0
    }
}

/// Clockwise angle in (0, 2pi) from the ray `z -> pair.first` to the ray
/// `z -> pair.second`. Fails when `z` coincides with a pair member or sees
/// the two members in the same direction (collinear, outside the segment).
pub fn oriented_angle_2d(pair: &OrderedPair<2>, z: &Point<2>) -> Result<OrientedAngle> {
    let v1 = pair.first.sub(z);
    let v2 = pair.second.sub(z);
    if (v1[0] == 0.0 && v1[1] == 0.0) || (v2[0] == 0.0 && v2[1] == 0.0) {
        return Err(Error::AngleUndefined);
    }
    let a1 = v1[1].atan2(v1[0]);
    let a2 = v2[1].atan2(v2[0]);
    let mut angle = (a1 - a2).rem_euclid(TAU);
    if angle >= TAU {
        angle -= TAU;
    }
    if angle == 0.0 {
        return Err(Error::AngleUndefined);
    }
    OrientedAngle::new(angle)
}

/// Unoriented angle in (0, pi] at which `z` sees the segment [x1, x2],
/// measured in the plane spanned by the three points. When `z` is equidistant
/// from both members at distance R this equals 2 asin(r / 2R) with
/// r = |x1 - x2|.
pub fn unoriented_angle<const D: usize>(
    x1: &Point<D>,
    x2: &Point<D>,
    z: &Point<D>,
) -> Result<UnorientedAngle> {
    let v1 = x1.sub(z);
    let v2 = x2.sub(z);
    let n1 = norm(&v1);
    let n2 = norm(&v2);
    if n1 == 0.0 || n2 == 0.0 {
        return Err(Error::AngleUndefined);
    }
    let c = (dot(&v1, &v2) / (n1 * n2)).clamp(-1.0, 1.0);
    let angle = c.acos();
    if angle == 0.0 {
        return Err(Error::AngleUndefined);
    }
    UnorientedAngle::new(angle)
}

/// The unique point of the pair's bisector line that sees the ordered pair at
/// clockwise angle `theta`: C + (r/2) cot(theta/2) n with n the bisector
/// direction of the pair.
pub fn z_theta_2d(pair: &OrderedPair<2>, theta: OrientedAngle) -> Point<2> {
    let c = pair.midpoint();
    let r = pair.separation();
    let n = pair.bisector_direction();
    let half = 0.5 * theta.radians();
    let s = 0.5 * r * (half.cos() / half.sin());
    Point([c.0[0] + s * n[0], c.0[1] + s * n[1]])
}

/// For a chord of length `r` seen at angle `theta`: the circumradius
/// R = r / (2 |sin(theta/2)|) and the distance rho = (r/2) |cot(theta/2)|
/// from the chord midpoint to the viewing point. R^2 = rho^2 + (r/2)^2.
pub fn chord_geometry(r: f64, theta: OrientedAngle) -> Result<(f64, f64)> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "chord length must be positive, got {r}"
        )));
    }
    let half = 0.5 * theta.radians();
    let s = half.sin().abs();
    let radius = r / (2.0 * s);
    let rho = 0.5 * r * (half.cos() / half.sin()).abs();
    Ok((radius, rho))
}

/// First coordinate of the intersection of the bisector (line in 2D, plane in
/// 3D) of [u1, u2] with the first coordinate axis:
/// (|u2|^2 - |u1|^2) / (2 (x2 - x1)). Returns `None` when the first
/// coordinates agree (bisector parallel to the axis) or the result is not
/// finite.
pub fn axis_crossing_point<const D: usize>(u1: &Point<D>, u2: &Point<D>) -> Option<f64> {
    let dx = u2.0[0] - u1.0[0];
    if dx == 0.0 {
        return None;
    }
    let x = (u2.norm_sq() - u1.norm_sq()) / (2.0 * dx);
    x.is_finite().then_some(x)
}
