//! Event-driven scan of the cell-boundary crossings along the first
//! coordinate axis.
//!
//! The walk tracks the nucleus owning the current axis position. The next
//! crossing is the smallest axis intersection of the bisector of the current
//! nucleus with any candidate nucleus; every emitted crossing is certified by
//! a fresh nearest query at the crossing point. Candidates are complete by
//! construction: at a crossing the empty ball has radius at most the
//! largest-empty-ball bound B of the sample, so the partner lies within
//! d(current) + 2B of the present axis position.

use crate::error::{Error, Result};
use crate::geom::{
    axis_crossing_point, oriented_angle_2d, unoriented_angle, OrderedPair, OrientedAngle, Point,
    UnorientedAngle,
};
use crate::grid::GridIndex;
use crate::sampling::PointSample;

/// Relative tolerance for certifying that the two pair members are jointly
/// nearest at a crossing.
const CERT_REL_TOL: f64 = 1e-9;

/// A boundary crossing on the scan axis with its angle marks.
#[derive(Clone, Debug)]
pub struct Crossing<const D: usize> {
    /// Position on the scan axis.
    pub x: f64,
    pub pair: OrderedPair<D>,
    /// Oriented mark; only defined in dimension two.
    pub theta: Option<OrientedAngle>,
    pub beta: UnorientedAngle,
    /// Distance from the crossing to either pair member.
    pub ball_radius: f64,
    /// Distance between the pair members.
    pub separation: f64,
}

/// Scan output; `contaminated` is set when some certified empty ball is not
/// contained in the sample window.
#[derive(Clone, Debug)]
pub struct CrossingScan<const D: usize> {
    pub crossings: Vec<Crossing<D>>,
    pub contaminated: bool,
}

fn axis_point<const D: usize>(x: f64) -> Point<D> {
    let mut coords = [0.0; D];
    coords[0] = x;
    Point(coords)
}

/// Walks the axis segment [x_lo, x_hi] and returns the crossings in strictly
/// increasing order. A tessellation vertex on the line (three co-minimal
/// nuclei) aborts with a degenerate-crossing error.
pub fn scan_crossings<const D: usize>(
    sample: &PointSample<D>,
    x_lo: f64,
    x_hi: f64,
) -> Result<CrossingScan<D>> {
    if !(x_lo.is_finite() && x_hi.is_finite() && x_lo < x_hi) {
        return Err(Error::InvalidParameter(format!(
            "need x_lo < x_hi, got {x_lo} >= {x_hi}"
        )));
    }
    let window = sample.window();
    if !window.contains(&axis_point::<D>(x_lo)) || !window.contains(&axis_point::<D>(x_hi)) {
        return Err(Error::InvalidParameter(
            "scan segment is not inside the sample window".into(),
        ));
    }
    let mut scan = CrossingScan {
        crossings: Vec::new(),
        contaminated: false,
    };
    if sample.len() < 2 {
        return Ok(scan);
    }

    let index = GridIndex::build_default(sample)?;
    let bound = index.largest_empty_ball_bound()?;
    let points = sample.points();

    let start = index.nearest(&axis_point::<D>(x_lo), &[])?;
    if start.ties.len() >= 3 {
        return Err(Error::DegenerateCrossing(
            "three co-minimal nuclei at the segment start",
        ));
    }
    let mut current = start.index;
    let mut x = x_lo;

    let expected = (x_hi - x_lo) * sample.lambda().powf(1.0 / D as f64);
    let max_steps = 10_000 + (1_000.0 * expected) as usize;
    let mut steps = 0usize;

    loop {
        steps += 1;
        if steps > max_steps {
            return Err(Error::DegenerateCrossing("scan failed to make progress"));
        }

        let here = axis_point::<D>(x);
        let d_here = here.dist(&points[current as usize]);
        let reach = d_here + 2.0 * bound;

        let mut next: Option<(f64, u32)> = None;
        for (j, _) in index.within(&here, reach) {
            if j == current {
                continue;
            }
            if let Some(xc) = axis_crossing_point(&points[current as usize], &points[j as usize]) {
                if xc > x && next.is_none_or(|(best, _)| xc < best) {
                    next = Some((xc, j));
                }
            }
        }
        let Some((xc, partner)) = next else {
            break;
        };
        if xc > x_hi {
            break;
        }

        let z = axis_point::<D>(xc);
        let hit = index.nearest(&z, &[])?;
        if hit.ties.len() >= 3 {
            return Err(Error::DegenerateCrossing(
                "tessellation vertex on the scan line",
            ));
        }
        let d_cur = z.dist(&points[current as usize]);
        let d_par = z.dist(&points[partner as usize]);
        let certified = d_cur <= hit.distance * (1.0 + CERT_REL_TOL)
            && d_par <= hit.distance * (1.0 + CERT_REL_TOL);
        if !certified {
            // Another nucleus owns this position; restart the walk from it.
            x = xc;
            current = hit.index;
            continue;
        }

        let a = points[current as usize];
        let b = points[partner as usize];
        let pair = OrderedPair::lex_order(a, b)?;
        let radius = 0.5 * (d_cur + d_par);
        let beta = unoriented_angle(pair.first(), pair.second(), &z)?;
        let theta = if D == 2 {
            let flat = OrderedPair::lex_order(
                Point([pair.first().0[0], pair.first().0[1]]),
                Point([pair.second().0[0], pair.second().0[1]]),
            )?;
            Some(oriented_angle_2d(&flat, &Point([z.0[0], z.0[1]]))?)
        } else {
            None
        };
        if !window.contains_ball(&z, radius) {
            scan.contaminated = true;
        }
        scan.crossings.push(Crossing {
            x: xc,
            pair,
            theta,
            beta,
            ball_radius: radius,
            separation: pair.separation(),
        });

        x = xc;
        current = partner;
    }

    Ok(scan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{PointSample, Window};
    use approx::assert_relative_eq;

    fn sample2(points: &[[f64; 2]]) -> PointSample<2> {
        let window = Window::new([-10.0, -10.0], [14.0, 10.0]).unwrap();
        PointSample::from_points(points.iter().map(|c| Point(*c)).collect(), window, 0.05).unwrap()
    }

    #[test]
    fn two_nuclei_single_crossing() {
        let sample = sample2(&[[0.0, 1.0], [4.0, 1.0]]);
        let scan = scan_crossings(&sample, 0.0, 4.0).unwrap();
        assert_eq!(scan.crossings.len(), 1);
        let c = &scan.crossings[0];
        assert_relative_eq!(c.x, 2.0, epsilon = 1e-12);
        assert_relative_eq!(c.ball_radius, 5.0_f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(c.separation, 4.0, epsilon = 1e-12);
        let expected_beta = 2.0 * (2.0 / 5.0_f64.sqrt()).asin();
        assert_relative_eq!(c.beta.radians(), expected_beta, epsilon = 1e-12);
        assert_relative_eq!(c.theta.unwrap().radians(), expected_beta, epsilon = 1e-12);
    }

    #[test]
    fn equally_spaced_nuclei_cross_at_bisectors() {
        let sample = sample2(&[[0.0, 1.0], [2.0, 1.0], [4.0, 1.0]]);
        let scan = scan_crossings(&sample, 0.0, 4.0).unwrap();
        let xs: Vec<f64> = scan.crossings.iter().map(|c| c.x).collect();
        assert_eq!(xs.len(), 2);
        assert_relative_eq!(xs[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(xs[1], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn crossings_strictly_increase_and_marks_are_consistent() {
        use crate::sampling::{sample_poisson, RandomStream};
        let window = Window::new([-5.0, -5.0], [25.0, 5.0]).unwrap();
        for rep in 0..8 {
            let sample = sample_poisson(1.0, &window, &mut RandomStream::derive(400, rep)).unwrap();
            if sample.len() < 2 {
                continue;
            }
            let scan = scan_crossings(&sample, 0.0, 20.0).unwrap();
            let mut prev = f64::NEG_INFINITY;
            for c in &scan.crossings {
                assert!(c.x > prev);
                prev = c.x;
                // sin(beta/2) = r / 2R
                assert_relative_eq!(
                    (0.5 * c.beta.radians()).sin(),
                    c.separation / (2.0 * c.ball_radius),
                    epsilon = 1e-9
                );
                let fold = c.theta.unwrap().fold();
                assert_relative_eq!(fold.radians(), c.beta.radians(), epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn nearest_nucleus_is_constant_between_crossings() {
        use crate::grid::GridIndex;
        use crate::sampling::{sample_poisson, RandomStream};
        let window = Window::new([-5.0, -5.0], [25.0, 5.0]).unwrap();
        let sample = sample_poisson(1.0, &window, &mut RandomStream::derive(401, 2)).unwrap();
        let scan = scan_crossings(&sample, 0.0, 20.0).unwrap();
        let index = GridIndex::build_default(&sample).unwrap();
        let mut boundaries = vec![0.0];
        boundaries.extend(scan.crossings.iter().map(|c| c.x));
        boundaries.push(20.0);
        for w in boundaries.windows(2) {
            let (a, b) = (w[0], w[1]);
            let mut owner = None;
            for k in 1..=10 {
                let x = a + (b - a) * k as f64 / 11.0;
                let hit = index.nearest(&Point([x, 0.0]), &[]).unwrap();
                match owner {
                    None => owner = Some(hit.index),
                    Some(o) => assert_eq!(o, hit.index, "owner changed inside a gap"),
                }
            }
        }
    }

    #[test]
    fn segment_must_be_inside_the_window() {
        let sample = sample2(&[[0.0, 1.0], [4.0, 1.0]]);
        assert!(scan_crossings(&sample, -100.0, 4.0).is_err());
    }
}
