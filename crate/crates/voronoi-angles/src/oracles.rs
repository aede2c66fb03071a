//! Closed-form reference values: process intensities, angle-mark densities
//! and their tail functions, typical-cell constants, and the panel-swap
//! probability, plus the quadrature and tail-probability support used to
//! cross-check them.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma;

use crate::error::{Error, Result};
use crate::geom::{OrientedAngle, TAU};

/// Intensity of the prescribed-angle facet process: 2 lambda sin^2(theta/2).
pub fn psi_intensity(lambda: f64, theta: OrientedAngle) -> f64 {
    let s = (0.5 * theta.radians()).sin();
    2.0 * lambda * s * s
}

/// Density of the oriented angle mark on the scan line in 2D:
/// (1/4) sin(t/2) on (0, 2pi).
pub fn angle_density_2d(t: f64) -> f64 {
    if t <= 0.0 || t >= TAU {
        return 0.0;
    }
    0.25 * (0.5 * t).sin()
}

/// Density of the folded (unoriented) mark in 2D: (1/2) sin(b/2) on (0, pi).
pub fn folded_angle_density_2d(beta: f64) -> f64 {
    if beta <= 0.0 || beta >= PI {
        return 0.0;
    }
    0.5 * (0.5 * beta).sin()
}

/// Upper-tail mass of the oriented 2D mark between t and pi:
/// P(Theta in (t, pi)) = (1/2) cos(t/2) for t in (0, pi).
pub fn angle_ccdf_upper_2d(t: f64) -> f64 {
    0.5 * (0.5 * t).cos()
}

/// Density of the oriented angle mark in 3D:
/// (3/4) |cos(t/2)| sin^2(t/2) on (0, 2pi). Vanishes at t = pi.
pub fn angle_density_3d(t: f64) -> f64 {
    if t <= 0.0 || t >= TAU {
        return 0.0;
    }
    let half = 0.5 * t;
    0.75 * half.cos().abs() * half.sin() * half.sin()
}

/// Density of the folded mark in 3D: (3/2) cos(b/2) sin^2(b/2) on (0, pi).
pub fn folded_angle_density_3d(beta: f64) -> f64 {
    if beta <= 0.0 || beta >= PI {
        return 0.0;
    }
    let half = 0.5 * beta;
    1.5 * half.cos() * half.sin() * half.sin()
}

/// Upper-tail mass of the oriented 3D mark between t and pi:
/// P(Theta in (t, pi)) = (1/2) (1 - sin^3(t/2)) for t in (0, pi).
pub fn angle_ccdf_upper_3d(t: f64) -> f64 {
    0.5 * (1.0 - (0.5 * t).sin().powi(3))
}

/// Linear intensity of cell-boundary crossings along a line:
/// 4 sqrt(lambda) / pi in 2D and (4 pi / 3)^(1/3) Gamma(5/3) lambda^(1/3)
/// in 3D.
pub fn crossing_intensity(lambda: f64, dim: usize) -> Result<f64> {
    match dim {
        2 => Ok(4.0 * lambda.sqrt() / PI),
        3 => Ok((4.0 * PI / 3.0).powf(1.0 / 3.0) * gamma::gamma(5.0 / 3.0) * lambda.cbrt()),
        _ => Err(Error::InvalidParameter(format!(
            "dimension must be 2 or 3, got {dim}"
        ))),
    }
}

/// Mean total length of the loci at which the facets of the origin cell see
/// their pair at the given angle (3D):
/// 4 pi (6 / (pi lambda))^(1/3) Gamma(4/3) |cos(theta/2)| sin^3(theta/2).
/// Undefined at theta = pi, where the locus degenerates to the midpoint
/// process counted by `midpoint_count_3d`.
pub fn mean_arc_length_3d(lambda: f64, theta: OrientedAngle) -> Result<f64> {
    let t = theta.radians();
    if (t - PI).abs() < 1e-12 {
        return Err(Error::ArcLengthAtPi);
    }
    let half = 0.5 * t;
    Ok(4.0
        * PI
        * (6.0 / (PI * lambda)).powf(1.0 / 3.0)
        * gamma::gamma(4.0 / 3.0)
        * half.cos().abs()
        * half.sin().powi(3))
}

/// Probability that an inter-cell handover requires a panel swap for a
/// handset with 2^m equal beams: (2^m / pi) sin(pi / 2^m).
pub fn panel_swap_probability(m: u32) -> f64 {
    let beams = (1u64 << m) as f64;
    beams / PI * (PI / beams).sin()
}

/// The same probability evaluated by integrating the mark density against
/// the geometric swap condition: beams spaced 2 pi / 2^m apart swap for sure
/// when the folded mark exceeds the spacing, and otherwise swap with
/// probability proportional to the mark.
pub fn panel_swap_integral(m: u32) -> f64 {
    let beams = (1u64 << m) as f64;
    let cutoff = TAU / beams; // = pi / 2^(m-1)
    let certain = integrate(&angle_density_2d, cutoff, TAU - cutoff, 1e-12);
    let partial = integrate(&|t: f64| angle_density_2d(t) * t / TAU, 0.0, cutoff, 1e-12);
    2.0 * beams * partial + certain
}

/// Reference constants for typical-cell statistics.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ReferenceConstants {
    /// Volume of the unit ball in dimension three, 4 pi / 3.
    pub unit_ball_volume_3d: f64,
    /// Mean number of facets of the typical planar cell.
    pub mean_facets_2d: f64,
    /// Mean number of planar facets containing their pair midpoint.
    pub midpoint_facets_2d: f64,
    /// Mean number of planar facets not containing their pair midpoint.
    pub non_midpoint_facets_2d: f64,
    /// Mean number of spatial facets containing their pair midpoint.
    pub midpoint_count_3d: f64,
}

pub fn reference_constants() -> ReferenceConstants {
    ReferenceConstants {
        unit_ball_volume_3d: 4.0 * PI / 3.0,
        mean_facets_2d: 6.0,
        midpoint_facets_2d: 4.0,
        non_midpoint_facets_2d: 2.0,
        midpoint_count_3d: 8.0,
    }
}

/// Gamma function (Lanczos-class approximation).
pub fn gamma_fn(x: f64) -> f64 {
    gamma::gamma(x)
}

/// Upper tail of the chi-square distribution with `dof` degrees of freedom,
/// via the regularized upper incomplete gamma function.
pub fn chi_square_sf(x: f64, dof: u32) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    gamma::gamma_ur(0.5 * dof as f64, 0.5 * x)
}

/// Adaptive Simpson quadrature with absolute tolerance `tol` on a bounded
/// interval. Suitable for the bounded, piecewise-smooth integrands used here.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    adaptive(f, a, b, fa, fm, fb, whole, tol, 60)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        adaptive(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + adaptive(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn angle(t: f64) -> OrientedAngle {
        OrientedAngle::new(t).unwrap()
    }

    #[test]
    fn psi_intensity_reference_values() {
        assert_relative_eq!(psi_intensity(1.0, angle(PI)), 2.0, max_relative = 1e-12);
        assert_relative_eq!(
            psi_intensity(1.0, angle(PI / 2.0)),
            1.0,
            max_relative = 1e-12
        );
        assert!(psi_intensity(1.0, angle(1e-8)) < 1e-14);
    }

    #[test]
    fn densities_normalize_to_one() {
        // kink of the 3D density at pi: integrate the halves separately
        let d2 = integrate(&angle_density_2d, 0.0, TAU, 1e-12);
        assert_relative_eq!(d2, 1.0, epsilon = 1e-10);
        let d3 = integrate(&angle_density_3d, 0.0, PI, 1e-12)
            + integrate(&angle_density_3d, PI, TAU, 1e-12);
        assert_relative_eq!(d3, 1.0, epsilon = 1e-10);
        let f2 = integrate(&folded_angle_density_2d, 0.0, PI, 1e-12);
        assert_relative_eq!(f2, 1.0, epsilon = 1e-10);
        let f3 = integrate(&folded_angle_density_3d, 0.0, PI, 1e-12);
        assert_relative_eq!(f3, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn density_point_values() {
        assert_relative_eq!(angle_density_2d(PI), 0.25, max_relative = 1e-12);
        assert!(angle_density_3d(PI).abs() < 1e-15);
    }

    #[test]
    fn ccdfs_match_density_integrals() {
        for k in 1..16 {
            let t = PI * k as f64 / 16.0;
            let tail2 = integrate(&angle_density_2d, t, PI, 1e-12);
            assert_relative_eq!(angle_ccdf_upper_2d(t), tail2, epsilon = 1e-8);
            let tail3 = integrate(&angle_density_3d, t, PI, 1e-12);
            assert_relative_eq!(angle_ccdf_upper_3d(t), tail3, epsilon = 1e-8);
        }
        assert_relative_eq!(
            angle_ccdf_upper_2d(PI / 2.0),
            0.5 * (PI / 4.0).cos(),
            max_relative = 1e-12
        );
        assert_relative_eq!(
            angle_ccdf_upper_3d(PI / 2.0),
            0.5 * (1.0 - (PI / 4.0).sin().powi(3)),
            max_relative = 1e-12
        );
    }

    #[test]
    fn crossing_intensity_values() {
        assert_relative_eq!(
            crossing_intensity(1.0, 2).unwrap(),
            4.0 / PI,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            crossing_intensity(4.0, 2).unwrap(),
            8.0 / PI,
            max_relative = 1e-12
        );
        // (4 pi / 3)^(1/3) Gamma(5/3)
        assert_relative_eq!(crossing_intensity(1.0, 3).unwrap(), 1.4552, epsilon = 1e-4);
        assert!(crossing_intensity(1.0, 4).is_err());
    }

    #[test]
    fn gamma_reflection_recurrence_cross_check() {
        // Gamma(4/3) Gamma(5/3) = (1/3)(2/3) Gamma(1/3) Gamma(2/3)
        //                       = (2/9) pi / sin(pi/3) = 4 pi / (9 sqrt(3))
        let lhs = gamma_fn(4.0 / 3.0) * gamma_fn(5.0 / 3.0);
        let rhs = 4.0 * PI / (9.0 * 3.0_f64.sqrt());
        assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
        // recurrence on (1, 2): Gamma(x + 1) = x Gamma(x)
        for k in 1..20 {
            let x = 1.0 + k as f64 / 20.0;
            assert_relative_eq!(gamma_fn(x + 1.0), x * gamma_fn(x), max_relative = 1e-12);
        }
    }

    #[test]
    fn arc_length_reference_values() {
        let v = mean_arc_length_3d(1.0, angle(PI / 2.0)).unwrap();
        assert_relative_eq!(v, 3.4807, epsilon = 2e-4);
        assert!(mean_arc_length_3d(1.0, angle(PI)).is_err());
        assert!(mean_arc_length_3d(1.0, angle(PI - 1e-7)).unwrap() < 1e-6);
        let ratio = mean_arc_length_3d(2.0, angle(PI / 2.0)).unwrap() / v;
        assert_relative_eq!(ratio, 2.0_f64.powf(-1.0 / 3.0), max_relative = 1e-12);
    }

    #[test]
    fn panel_swap_closed_form() {
        assert_relative_eq!(panel_swap_probability(1), 2.0 / PI, max_relative = 1e-12);
        assert_relative_eq!(
            panel_swap_probability(2),
            4.0 / PI * (PI / 4.0).sin(),
            max_relative = 1e-12
        );
        assert!(panel_swap_probability(20) > 1.0 - 1e-10);
    }

    #[test]
    fn panel_swap_integral_matches_closed_form() {
        for m in 1..=6 {
            assert_relative_eq!(
                panel_swap_integral(m),
                panel_swap_probability(m),
                epsilon = 1e-8
            );
        }
    }

    #[test]
    fn reference_constant_values() {
        let c = reference_constants();
        assert_relative_eq!(c.unit_ball_volume_3d, 4.18879, epsilon = 1e-5);
        assert_eq!(c.mean_facets_2d, 6.0);
        assert_eq!(c.midpoint_facets_2d, 4.0);
        assert_eq!(c.non_midpoint_facets_2d, 2.0);
        assert_eq!(c.midpoint_count_3d, 8.0);
    }

    #[test]
    fn chi_square_tail_reference_points() {
        assert_relative_eq!(chi_square_sf(3.841, 1), 0.05, epsilon = 1e-4);
        assert_relative_eq!(chi_square_sf(18.307, 10), 0.05, epsilon = 1e-4);
        assert_relative_eq!(chi_square_sf(6.635, 1), 0.01, epsilon = 1e-4);
    }

    #[test]
    fn quadrature_handles_smooth_reference_integrals() {
        let v = integrate(&|x: f64| x.sin(), 0.0, PI, 1e-12);
        assert_relative_eq!(v, 2.0, epsilon = 1e-10);
        let v = integrate(&|x: f64| (-x * x).exp(), -6.0, 6.0, 1e-12);
        assert_relative_eq!(v, PI.sqrt(), epsilon = 1e-9);
    }
}
