//! Palm statistics of the cell at the origin: facet counts, prescribed-angle
//! point counts under both crediting conventions, and (in 3D) the total arc
//! length at which facets see the origin pair at a given angle.
//!
//! The sample must be palm-augmented (origin prepended). Delaunay-neighbor
//! candidates of the origin are complete within twice the largest-empty-ball
//! bound B: a shared facet point is equidistant from the origin and the
//! neighbor with an empty ball of radius at most B, so the neighbor lies
//! within 2B of the origin.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::facet::{
    circle_polygon_arclength, facet_interval_2d, facet_polygon_3d, FacetInterval, FacetPolygon,
};
use crate::geom::{chord_geometry, OrderedPair, OrientedAngle, Point};
use crate::grid::GridIndex;
use crate::sampling::PointSample;

/// Per-replication summary of the origin cell.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TypicalCellStats {
    /// Prescribed-angle points credited to the cell whose nucleus is the
    /// intrinsically first member of the generating pair.
    pub psi_count_ordered: u32,
    /// Prescribed-angle points on any facet of the origin cell (each point is
    /// shared by the two incident cells).
    pub psi_count_closed: u32,
    /// Facets containing the midpoint of their generating segment.
    pub midpoint_facets: u32,
    /// Neighbors with a nonempty shared facet.
    pub total_facets: u32,
    /// 3D only: total length of the facet loci seeing the pair at the angle.
    pub arc_length_total: f64,
    /// 3D only: facets containing the pair midpoint (midpoint process count).
    pub xi_count: u32,
}

/// Statistics for each requested angle plus a shared contamination flag.
#[derive(Clone, Debug)]
pub struct TypicalCellOutcome {
    pub per_theta: Vec<TypicalCellStats>,
    pub contaminated: bool,
}

/// Signed bisector offset of the prescribed-angle point of a pair, in the
/// pair's intrinsic frame.
fn psi_offset(separation: f64, theta: OrientedAngle) -> f64 {
    let half = 0.5 * theta.radians();
    0.5 * separation * (half.cos() / half.sin())
}

fn origin_is_first<const D: usize>(pair: &OrderedPair<D>) -> bool {
    *pair.first() == Point::origin()
}

pub fn typical_cell_stats_2d(
    sample: &PointSample<2>,
    thetas: &[OrientedAngle],
) -> Result<TypicalCellOutcome> {
    if !sample.is_palm() {
        return Err(Error::NotPalmAugmented);
    }
    let index = GridIndex::build_default(sample)?;
    let bound = index.largest_empty_ball_bound()?;
    let points = sample.points();
    let origin = Point::<2>::origin();
    let window = sample.window();
    let half_span = bound;

    let mut contaminated = false;
    let mut facets: Vec<FacetInterval> = Vec::new();
    for (j, _) in index.within(&origin, 2.0 * bound) {
        if j == 0 {
            continue;
        }
        let pair = OrderedPair::lex_order(origin, points[j as usize])?;
        let half_r = 0.5 * pair.separation();
        let clip_reach = 2.0 * (half_span * half_span + half_r * half_r).sqrt();
        let center = pair.midpoint();
        let others: Vec<Point<2>> = index
            .within(&center, clip_reach)
            .into_iter()
            .map(|(k, _)| points[k as usize])
            .collect();
        let facet = facet_interval_2d(&pair, &others, half_span);
        if facet.is_empty() {
            continue;
        }
        for s in [facet.lo(), facet.hi()] {
            if s.abs() >= half_span * (1.0 - 1e-9)
                || !window.contains_ball(&facet.point_at(s), facet.ball_radius_at(s))
            {
                contaminated = true;
            }
        }
        facets.push(facet);
    }

    let per_theta = thetas
        .iter()
        .map(|&theta| {
            let mut stats = TypicalCellStats {
                psi_count_ordered: 0,
                psi_count_closed: 0,
                midpoint_facets: 0,
                total_facets: facets.len() as u32,
                arc_length_total: 0.0,
                xi_count: 0,
            };
            for facet in &facets {
                if facet.contains(0.0) {
                    stats.midpoint_facets += 1;
                }
                let s = psi_offset(facet.pair().separation(), theta);
                if facet.contains(s) {
                    stats.psi_count_closed += 1;
                    if origin_is_first(facet.pair()) {
                        stats.psi_count_ordered += 1;
                    }
                }
            }
            stats.xi_count = stats.midpoint_facets;
            stats
        })
        .collect();

    Ok(TypicalCellOutcome {
        per_theta,
        contaminated,
    })
}

pub fn typical_cell_stats_3d(
    sample: &PointSample<3>,
    thetas: &[OrientedAngle],
) -> Result<TypicalCellOutcome> {
    if !sample.is_palm() {
        return Err(Error::NotPalmAugmented);
    }
    let index = GridIndex::build_default(sample)?;
    let bound = index.largest_empty_ball_bound()?;
    let points = sample.points();
    let origin = Point::<3>::origin();
    let window = sample.window();
    let half_span = bound;

    let mut contaminated = false;
    let mut facets: Vec<FacetPolygon> = Vec::new();
    for (j, _) in index.within(&origin, 2.0 * bound) {
        if j == 0 {
            continue;
        }
        let pair = OrderedPair::lex_order(origin, points[j as usize])?;
        let half_r = 0.5 * pair.separation();
        let clip_reach = 2.0 * (2.0 * half_span * half_span + half_r * half_r).sqrt();
        let center = pair.midpoint();
        let others: Vec<Point<3>> = index
            .within(&center, clip_reach)
            .into_iter()
            .map(|(k, _)| points[k as usize])
            .collect();
        let facet = facet_polygon_3d(&pair, &others, half_span);
        if facet.is_empty() {
            continue;
        }
        for v in facet.vertices() {
            if v[0].abs().max(v[1].abs()) >= half_span * (1.0 - 1e-9)
                || !window.contains_ball(&facet.to_ambient(*v), facet.ball_radius_at(*v))
            {
                contaminated = true;
            }
        }
        facets.push(facet);
    }

    let per_theta = thetas
        .iter()
        .map(|&theta| {
            let mut stats = TypicalCellStats {
                psi_count_ordered: 0,
                psi_count_closed: 0,
                midpoint_facets: 0,
                total_facets: facets.len() as u32,
                arc_length_total: 0.0,
                xi_count: 0,
            };
            for facet in &facets {
                let r = facet.pair().separation();
                if facet.contains_plane_point([0.0, 0.0]) {
                    stats.midpoint_facets += 1;
                }
                let (_, rho) = chord_geometry(r, theta).expect("positive separation");
                let arc = circle_polygon_arclength(facet, rho);
                stats.arc_length_total += arc;
                // In 3D the prescribed-angle locus is a circle, not a point;
                // the counters record facets meeting the locus at all.
                if arc > 0.0 {
                    stats.psi_count_closed += 1;
                    if origin_is_first(facet.pair()) {
                        stats.psi_count_ordered += 1;
                    }
                }
            }
            stats.xi_count = stats.midpoint_facets;
            stats
        })
        .collect();

    Ok(TypicalCellOutcome {
        per_theta,
        contaminated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{palm_augment, sample_poisson, PointSample, RandomStream, Window};
    use std::f64::consts::PI;

    #[test]
    fn requires_palm_augmentation() {
        let window = Window::centered(5.0).unwrap();
        let sample = PointSample::from_points(vec![Point([1.0, 1.0])], window, 1.0).unwrap();
        assert!(matches!(
            typical_cell_stats_2d(&sample, &[OrientedAngle::new(PI).unwrap()]),
            Err(Error::NotPalmAugmented)
        ));
    }

    #[test]
    fn single_neighbor_has_one_midpoint_facet() {
        let window = Window::centered(20.0).unwrap();
        let sample = PointSample::from_points(vec![Point([2.0, 0.0])], window, 0.01).unwrap();
        let palm = palm_augment(&sample).unwrap();
        let out = typical_cell_stats_2d(&palm, &[OrientedAngle::new(PI).unwrap()]).unwrap();
        let s = &out.per_theta[0];
        assert_eq!(s.total_facets, 1);
        assert_eq!(s.midpoint_facets, 1);
        assert_eq!(s.psi_count_closed, 1);
        // origin (0,0) < (2,0): the origin is the intrinsic first member
        assert_eq!(s.psi_count_ordered, 1);
    }

    #[test]
    fn ordered_counts_never_exceed_closed_counts() {
        let window = Window::centered(6.0).unwrap();
        for rep in 0..10 {
            let sample = sample_poisson(1.0, &window, &mut RandomStream::derive(90, rep)).unwrap();
            let palm = palm_augment(&sample).unwrap();
            let thetas = [
                OrientedAngle::new(PI / 2.0).unwrap(),
                OrientedAngle::new(PI).unwrap(),
            ];
            let out = typical_cell_stats_2d(&palm, &thetas).unwrap();
            for s in &out.per_theta {
                assert!(s.psi_count_ordered <= s.psi_count_closed);
                assert!(s.midpoint_facets <= s.total_facets);
            }
        }
    }

    #[test]
    fn closed_count_at_pi_equals_midpoint_facets() {
        let window = Window::centered(6.0).unwrap();
        for rep in 0..10 {
            let sample = sample_poisson(1.0, &window, &mut RandomStream::derive(91, rep)).unwrap();
            let palm = palm_augment(&sample).unwrap();
            let out = typical_cell_stats_2d(&palm, &[OrientedAngle::new(PI).unwrap()]).unwrap();
            let s = &out.per_theta[0];
            assert_eq!(s.psi_count_closed, s.midpoint_facets);
        }
    }

    #[test]
    fn facet_membership_agrees_with_the_empty_ball_test() {
        // Equivalence of the two characterizations: the prescribed-angle
        // point of a pair passes the empty-ball test iff its bisector offset
        // lies inside the pair's facet interval.
        use crate::geom::z_theta_2d;
        use crate::grid::GridIndex;
        let window = Window::centered(6.0).unwrap();
        let mut checked = 0;
        for rep in 0..40 {
            let sample = sample_poisson(1.0, &window, &mut RandomStream::derive(92, rep)).unwrap();
            if sample.len() < 5 {
                continue;
            }
            let index = GridIndex::build_default(&sample).unwrap();
            let points = sample.points();
            let theta = OrientedAngle::new(1.0 + 0.1 * rep as f64 % 5.0).unwrap();
            for i in 0..points.len().min(6) {
                for j in (i + 1)..points.len().min(6) {
                    let pair = OrderedPair::lex_order(points[i], points[j]).unwrap();
                    let z = z_theta_2d(&pair, theta);
                    if !window.contains_ball(&z, z.dist(pair.first())) {
                        continue;
                    }
                    let empty = index.ball_empty(&z, z.dist(pair.first()), &[i as u32, j as u32]);
                    let others: Vec<Point<2>> = points
                        .iter()
                        .enumerate()
                        .filter(|(k, _)| *k != i && *k != j)
                        .map(|(_, p)| *p)
                        .collect();
                    let facet = facet_interval_2d(&pair, &others, 50.0);
                    let s = psi_offset(pair.separation(), theta);
                    let on_facet = !facet.is_empty() && facet.contains(s);
                    assert_eq!(empty, on_facet, "rep {rep} pair ({i},{j})");
                    checked += 1;
                }
            }
        }
        assert!(checked > 100, "exercised only {checked} cases");
    }

    #[test]
    fn three_dimensional_midpoint_and_arcs() {
        let window = Window::<3>::centered(6.0).unwrap();
        let sample = sample_poisson(1.0, &window, &mut RandomStream::derive(93, 0)).unwrap();
        let palm = palm_augment(&sample).unwrap();
        let thetas = [
            OrientedAngle::new(PI / 2.0).unwrap(),
            OrientedAngle::new(PI / 3.0).unwrap(),
        ];
        let out = typical_cell_stats_3d(&palm, &thetas).unwrap();
        for s in &out.per_theta {
            assert!(s.xi_count <= s.total_facets);
            assert!(s.arc_length_total >= 0.0);
        }
        assert_eq!(out.per_theta[0].total_facets, out.per_theta[1].total_facets);
    }
}
