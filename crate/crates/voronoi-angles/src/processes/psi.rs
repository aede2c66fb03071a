//! The planar point process of facet points seeing their pair at a prescribed
//! oriented angle.
//!
//! A candidate point for a pair (X1, X2) is the unique bisector point Z with
//! clockwise angle theta; it belongs to the process exactly when the open ball
//! around Z through the pair members contains no other sample point. Candidate
//! pairs are pruned exactly: an accepted point needs an empty ball of radius
//! R = r / (2 sin(theta/2)) centered inside the window, so r can never exceed
//! 2 sin(theta/2) times the largest-empty-ball bound of the sample.

use crate::error::{Error, Result};
use crate::geom::{chord_geometry, z_theta_2d, OrderedPair, OrientedAngle, Point};
use crate::grid::GridIndex;
use crate::sampling::{PointSample, Window};

/// A point of the prescribed-angle process with its generating pair.
#[derive(Clone, Debug)]
pub struct PsiPoint {
    pub location: Point<2>,
    pub pair: OrderedPair<2>,
    pub theta: OrientedAngle,
    pub ball_radius: f64,
}

/// Extraction output. `contaminated` is set when some accepted ball is not
/// contained in the sample window, i.e. the guard margin was too small for
/// this realization.
#[derive(Clone, Debug)]
pub struct PsiExtraction {
    pub points: Vec<PsiPoint>,
    pub contaminated: bool,
}

/// Extracts all process points falling in `inner`, which must be contained in
/// the sample window. Results are sorted by location.
pub fn extract_psi_theta(
    sample: &PointSample<2>,
    theta: OrientedAngle,
    inner: &Window<2>,
) -> Result<PsiExtraction> {
    if !sample.window().contains_window(inner) {
        return Err(Error::InnerNotContained);
    }
    let mut out = PsiExtraction {
        points: Vec::new(),
        contaminated: false,
    };
    if sample.len() < 2 {
        return Ok(out);
    }

    let index = GridIndex::build_default(sample)?;
    let bound = index.largest_empty_ball_bound()?;
    let sin_half = (0.5 * theta.radians()).sin();
    let r_max = 2.0 * sin_half * bound;

    let points = sample.points();
    for (i, p) in points.iter().enumerate() {
        for (j, r) in index.within(p, r_max) {
            let q = &points[j as usize];
            // each unordered pair once, with p the lexicographic minimum
            if p.lex_cmp(q) != std::cmp::Ordering::Less {
                continue;
            }
            let pair = OrderedPair::lex_order(*p, *q)?;
            let z = z_theta_2d(&pair, theta);
            if !inner.contains(&z) {
                continue;
            }
            let (radius, _) = chord_geometry(r, theta)?;
            if index.ball_empty(&z, radius, &[i as u32, j]) {
                if !sample.window().contains_ball(&z, radius) {
                    out.contaminated = true;
                }
                out.points.push(PsiPoint {
                    location: z,
                    pair,
                    theta,
                    ball_radius: radius,
                });
            }
        }
    }

    out.points.sort_by(|a, b| a.location.lex_cmp(&b.location));
    Ok(out)
}
