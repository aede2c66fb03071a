//! Experiment drivers shared by the command-line interface and the
//! validation suite: replication loops, aggregation into reports, and CSV
//! rendering with a fixed 17-significant-digit float format.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{
    density_gof, intensity_estimate, mirrored_symmetry_gof, par_replicate, report_from_outcomes,
    DensityReport, EstimateReport, RepOutcome, SymmetryReport,
};
use crate::geom::{OrientedAngle, TAU};
use crate::oracles;
use crate::processes::{
    extract_psi_theta, scan_crossings, typical_cell_stats_2d, typical_cell_stats_3d,
    TypicalCellStats,
};
use crate::sampling::{palm_augment, sample_poisson, Window};

/// Formats a float with 17 significant digits, stable across runs.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_thetas(thetas: &[f64]) -> Result<Vec<OrientedAngle>> {
    thetas.iter().map(|&t| OrientedAngle::new(t)).collect()
}

// ---------------------------------------------------------------------------
// Prescribed-angle process experiment
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PsiConfig {
    pub lambda: f64,
    /// Side of the square sampling window [0, side]^2.
    pub window_side: f64,
    /// Guard margin in units of lambda^(-1/2) / sin(theta/2).
    pub margin_factor: f64,
    pub thetas: Vec<f64>,
    pub n_replications: u32,
    pub master_seed: u64,
    /// Retain per-point rows for CSV output.
    pub keep_rows: bool,
}

#[derive(Clone, Debug)]
pub struct PsiRow {
    pub rep: u32,
    pub zx: f64,
    pub zy: f64,
    pub theta: f64,
    pub ball_radius: f64,
}

#[derive(Clone, Debug)]
pub struct PsiRun {
    /// One intensity report per requested angle, in request order.
    pub reports: Vec<EstimateReport>,
    pub rows: Vec<PsiRow>,
}

pub fn run_psi(cfg: &PsiConfig) -> Result<PsiRun> {
    let thetas = parse_thetas(&cfg.thetas)?;
    if thetas.is_empty() {
        return Err(Error::InvalidParameter("need at least one theta".into()));
    }
    let window = Window::new([0.0, 0.0], [cfg.window_side, cfg.window_side])?;
    let mut inners = Vec::with_capacity(thetas.len());
    for theta in &thetas {
        let margin = cfg.margin_factor * cfg.lambda.powf(-0.5) / (0.5 * theta.radians()).sin();
        inners.push(window.shrink(margin)?);
    }

    struct Rep {
        per_theta: Vec<std::result::Result<(Vec<PsiRow>, bool), ()>>,
    }

    let reps: Vec<Rep> = par_replicate(cfg.n_replications, cfg.master_seed, |rep, stream| {
        let sample = sample_poisson(cfg.lambda, &window, stream);
        let per_theta = thetas
            .iter()
            .zip(&inners)
            .map(|(theta, inner)| {
                let sample = sample.as_ref().map_err(|_| ())?;
                let extraction = extract_psi_theta(sample, *theta, inner).map_err(|_| ())?;
                let rows = extraction
                    .points
                    .iter()
                    .map(|p| PsiRow {
                        rep,
                        zx: p.location.0[0],
                        zy: p.location.0[1],
                        theta: theta.radians(),
                        ball_radius: p.ball_radius,
                    })
                    .collect();
                Ok((rows, extraction.contaminated))
            })
            .collect();
        Rep { per_theta }
    });

    let mut reports = Vec::with_capacity(thetas.len());
    let mut rows = Vec::new();
    for (ti, theta) in thetas.iter().enumerate() {
        let outcomes: Vec<RepOutcome> = reps
            .iter()
            .map(|r| match &r.per_theta[ti] {
                Ok((rows, contaminated)) => RepOutcome::Value {
                    value: rows.len() as f64,
                    contaminated: *contaminated,
                },
                Err(()) => RepOutcome::Aborted,
            })
            .collect();
        let measure = inners[ti].volume();
        let oracle = oracles::psi_intensity(cfg.lambda, *theta);
        let report = intensity_estimate(
            &format!("psi_intensity(theta={})", theta.radians()),
            Some(oracle),
            &outcomes,
            measure,
        )?;
        reports.push(report);
        if cfg.keep_rows {
            for r in &reps {
                if let Ok((point_rows, _)) = &r.per_theta[ti] {
                    rows.extend(point_rows.iter().cloned());
                }
            }
        }
    }

    Ok(PsiRun { reports, rows })
}

pub fn psi_csv(run: &PsiRun) -> String {
    let mut out = String::from("rep,zx,zy,theta,ball_radius\n");
    for r in &run.rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.rep,
            fmt_f64(r.zx),
            fmt_f64(r.zy),
            fmt_f64(r.theta),
            fmt_f64(r.ball_radius)
        ));
    }
    out
}

// ---------------------------------------------------------------------------
// Line-crossing experiment
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CrossingsConfig {
    pub dim: u8,
    pub lambda: f64,
    pub segment_length: f64,
    /// Guard margin in units of lambda^(-1/dim).
    pub margin_factor: f64,
    pub bins: usize,
    pub n_replications: u32,
    pub master_seed: u64,
}

#[derive(Clone, Debug)]
pub struct CrossingRow {
    pub rep: u32,
    pub x: f64,
    pub theta: Option<f64>,
    pub beta: f64,
    pub separation: f64,
    pub ball_radius: f64,
}

#[derive(Clone, Debug)]
pub struct CrossingsRun {
    pub intensity: EstimateReport,
    /// Oriented marks against the 2D density, or folded marks against the
    /// folded 3D density. `None` when the pooled marks cannot fill the
    /// requested bins (too few marks or an under-populated bin).
    pub gof: Option<DensityReport>,
    /// Mirror symmetry of the oriented marks; 2D only.
    pub symmetry: Option<SymmetryReport>,
    /// Pooled marks in replication order (oriented in 2D, folded in 3D).
    pub marks: Vec<f64>,
    pub rows: Vec<CrossingRow>,
}

fn gof_or_skip(
    marks: &[f64],
    density: &dyn Fn(f64) -> f64,
    bins: usize,
    domain: (f64, f64),
) -> Result<Option<DensityReport>> {
    match density_gof(marks, density, bins, domain) {
        Ok(report) => Ok(Some(report)),
        Err(Error::TooFewMarks { .. } | Error::Rebin { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

fn run_crossings_dim<const D: usize>(cfg: &CrossingsConfig) -> Result<CrossingsRun> {
    let margin = cfg.margin_factor * cfg.lambda.powf(-1.0 / D as f64);
    let mut lo = [-margin; D];
    let mut hi = [margin; D];
    lo[0] = -margin;
    hi[0] = cfg.segment_length + margin;
    let window = Window::<D>::new(lo, hi)?;

    type RepRows = std::result::Result<(Vec<CrossingRow>, bool), ()>;
    let reps: Vec<RepRows> = par_replicate(cfg.n_replications, cfg.master_seed, |rep, stream| {
        let sample = sample_poisson(cfg.lambda, &window, stream).map_err(|_| ())?;
        let scan = scan_crossings(&sample, 0.0, cfg.segment_length).map_err(|_| ())?;
        let rows = scan
            .crossings
            .iter()
            .map(|c| CrossingRow {
                rep,
                x: c.x,
                theta: c.theta.map(|t| t.radians()),
                beta: c.beta.radians(),
                separation: c.separation,
                ball_radius: c.ball_radius,
            })
            .collect();
        Ok((rows, scan.contaminated))
    });

    let outcomes: Vec<RepOutcome> = reps
        .iter()
        .map(|r| match r {
            Ok((rows, contaminated)) => RepOutcome::Value {
                value: rows.len() as f64,
                contaminated: *contaminated,
            },
            Err(()) => RepOutcome::Aborted,
        })
        .collect();
    let oracle = oracles::crossing_intensity(cfg.lambda, D)?;
    let intensity = intensity_estimate(
        &format!("crossing_intensity(dim={D})"),
        Some(oracle),
        &outcomes,
        cfg.segment_length,
    )?;

    let mut rows = Vec::new();
    for rep in reps.iter().flatten() {
        rows.extend(rep.0.iter().cloned());
    }

    let (marks, gof, symmetry) = if D == 2 {
        let marks: Vec<f64> = rows.iter().map(|r| r.theta.expect("2d mark")).collect();
        let gof = gof_or_skip(&marks, &oracles::angle_density_2d, cfg.bins, (0.0, TAU))?;
        let symmetry = Some(mirrored_symmetry_gof(&marks, cfg.bins, (0.0, TAU))?);
        (marks, gof, symmetry)
    } else {
        let marks: Vec<f64> = rows.iter().map(|r| r.beta).collect();
        let gof = gof_or_skip(
            &marks,
            &oracles::folded_angle_density_3d,
            cfg.bins,
            (0.0, std::f64::consts::PI),
        )?;
        (marks, gof, None)
    };

    Ok(CrossingsRun {
        intensity,
        gof,
        symmetry,
        marks,
        rows,
    })
}

pub fn run_crossings(cfg: &CrossingsConfig) -> Result<CrossingsRun> {
    match cfg.dim {
        2 => run_crossings_dim::<2>(cfg),
        3 => run_crossings_dim::<3>(cfg),
        d => Err(Error::InvalidParameter(format!(
            "dimension must be 2 or 3, got {d}"
        ))),
    }
}

pub fn crossings_csv(run: &CrossingsRun, dim: u8) -> String {
    let mut out = String::new();
    if dim == 2 {
        out.push_str("rep,x,theta_oriented,beta,r,R\n");
        for r in &run.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.rep,
                fmt_f64(r.x),
                fmt_f64(r.theta.expect("2d mark")),
                fmt_f64(r.beta),
                fmt_f64(r.separation),
                fmt_f64(r.ball_radius)
            ));
        }
    } else {
        out.push_str("rep,x,beta,r,R\n");
        for r in &run.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.rep,
                fmt_f64(r.x),
                fmt_f64(r.beta),
                fmt_f64(r.separation),
                fmt_f64(r.ball_radius)
            ));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Typical-cell experiment
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TypicalCellConfig {
    pub dim: u8,
    pub lambda: f64,
    /// Side of the centered sampling window [-side/2, side/2]^dim.
    pub window_side: f64,
    pub thetas: Vec<f64>,
    pub n_replications: u32,
    pub master_seed: u64,
}

#[derive(Clone, Debug)]
pub struct TypicalCellRow {
    pub rep: u32,
    pub theta: f64,
    pub stats: TypicalCellStats,
}

/// Estimates of the two prescribed-angle counting conventions at one angle.
/// `ordered` credits each process point to the cell of the intrinsically
/// first pair member (oracle 2 sin^2(theta/2)); `closed` counts points on any
/// facet of the cell (oracle 4 sin^2(theta/2)).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PsiConventionReport {
    pub theta: f64,
    pub ordered: EstimateReport,
    pub closed: EstimateReport,
    pub z_ordered_vs_2sin2: f64,
    pub z_ordered_vs_4sin2: f64,
    pub z_closed_vs_2sin2: f64,
    pub z_closed_vs_4sin2: f64,
    /// Set when exactly the (ordered, 2 sin^2) and (closed, 4 sin^2) pairing
    /// is consistent at |z| < 3.
    pub resolution: Option<String>,
}

#[derive(Clone, Debug)]
pub struct TypicalCellRun {
    pub rows: Vec<TypicalCellRow>,
    pub total_facets: EstimateReport,
    pub midpoint_facets: EstimateReport,
    pub non_midpoint_facets: EstimateReport,
    /// 3D midpoint-process count per cell (oracle 8).
    pub xi_count: Option<EstimateReport>,
    /// 2D only, one entry per angle.
    pub psi_conventions: Vec<PsiConventionReport>,
    /// 3D only, one entry per angle (oracle: mean arc length, where defined).
    pub arc_lengths: Vec<EstimateReport>,
}

fn convention_report(
    theta: f64,
    ordered: EstimateReport,
    closed: EstimateReport,
) -> PsiConventionReport {
    let s = (0.5 * theta).sin();
    let two = 2.0 * s * s;
    let four = 4.0 * s * s;
    let z = |r: &EstimateReport, oracle: f64| {
        if r.stderr > 0.0 {
            (r.mean - oracle) / r.stderr
        } else if r.mean == oracle {
            0.0
        } else {
            f64::INFINITY
        }
    };
    let z_o2 = z(&ordered, two);
    let z_o4 = z(&ordered, four);
    let z_c2 = z(&closed, two);
    let z_c4 = z(&closed, four);
    let resolution = if z_o2.abs() < 3.0 && z_c4.abs() < 3.0 {
        Some(format!(
            "ordered matches 2 sin^2(theta/2) = {two:.6}; closed matches 4 sin^2(theta/2) = {four:.6}"
        ))
    } else {
        None
    };
    PsiConventionReport {
        theta,
        ordered,
        closed,
        z_ordered_vs_2sin2: z_o2,
        z_ordered_vs_4sin2: z_o4,
        z_closed_vs_2sin2: z_c2,
        z_closed_vs_4sin2: z_c4,
        resolution,
    }
}

pub fn run_typical_cell(cfg: &TypicalCellConfig) -> Result<TypicalCellRun> {
    let thetas = parse_thetas(&cfg.thetas)?;
    if thetas.is_empty() {
        return Err(Error::InvalidParameter("need at least one theta".into()));
    }
    let half = 0.5 * cfg.window_side;

    type RepStats = std::result::Result<(Vec<TypicalCellStats>, bool), ()>;
    let reps: Vec<RepStats> = match cfg.dim {
        2 => {
            let window = Window::<2>::centered(half)?;
            let thetas = thetas.clone();
            par_replicate(cfg.n_replications, cfg.master_seed, move |_, stream| {
                let sample = sample_poisson(cfg.lambda, &window, stream).map_err(|_| ())?;
                let palm = palm_augment(&sample).map_err(|_| ())?;
                let out = typical_cell_stats_2d(&palm, &thetas).map_err(|_| ())?;
                Ok((out.per_theta, out.contaminated))
            })
        }
        3 => {
            let window = Window::<3>::centered(half)?;
            let thetas = thetas.clone();
            par_replicate(cfg.n_replications, cfg.master_seed, move |_, stream| {
                let sample = sample_poisson(cfg.lambda, &window, stream).map_err(|_| ())?;
                let palm = palm_augment(&sample).map_err(|_| ())?;
                let out = typical_cell_stats_3d(&palm, &thetas).map_err(|_| ())?;
                Ok((out.per_theta, out.contaminated))
            })
        }
        d => {
            return Err(Error::InvalidParameter(format!(
                "dimension must be 2 or 3, got {d}"
            )))
        }
    };

    let mut rows = Vec::new();
    for (rep, r) in reps.iter().enumerate() {
        if let Ok((per_theta, _)) = r {
            for (ti, stats) in per_theta.iter().enumerate() {
                rows.push(TypicalCellRow {
                    rep: rep as u32,
                    theta: thetas[ti].radians(),
                    stats: *stats,
                });
            }
        }
    }

    // theta-independent facet statistics, taken from the first angle
    let pick = |f: &dyn Fn(&TypicalCellStats) -> f64| -> Vec<RepOutcome> {
        reps.iter()
            .map(|r| match r {
                Ok((per_theta, contaminated)) => RepOutcome::Value {
                    value: f(&per_theta[0]),
                    contaminated: *contaminated,
                },
                Err(()) => RepOutcome::Aborted,
            })
            .collect()
    };
    let constants = oracles::reference_constants();
    let planar = cfg.dim == 2;
    let total_facets = report_from_outcomes(
        "typical_cell.total_facets",
        planar.then_some(constants.mean_facets_2d),
        &pick(&|s| f64::from(s.total_facets)),
    )?;
    let midpoint_facets = report_from_outcomes(
        "typical_cell.midpoint_facets",
        planar.then_some(constants.midpoint_facets_2d),
        &pick(&|s| f64::from(s.midpoint_facets)),
    )?;
    let non_midpoint_facets = report_from_outcomes(
        "typical_cell.non_midpoint_facets",
        planar.then_some(constants.non_midpoint_facets_2d),
        &pick(&|s| f64::from(s.total_facets - s.midpoint_facets)),
    )?;
    let xi_count = if planar {
        None
    } else {
        Some(report_from_outcomes(
            "typical_cell.xi_count",
            Some(constants.midpoint_count_3d),
            &pick(&|s| f64::from(s.xi_count)),
        )?)
    };

    let mut psi_conventions = Vec::new();
    let mut arc_lengths = Vec::new();
    for (ti, theta) in thetas.iter().enumerate() {
        let per_theta_outcomes = |f: &dyn Fn(&TypicalCellStats) -> f64| -> Vec<RepOutcome> {
            reps.iter()
                .map(|r| match r {
                    Ok((per_theta, contaminated)) => RepOutcome::Value {
                        value: f(&per_theta[ti]),
                        contaminated: *contaminated,
                    },
                    Err(()) => RepOutcome::Aborted,
                })
                .collect()
        };
        if planar {
            let s = (0.5 * theta.radians()).sin();
            let ordered = report_from_outcomes(
                &format!("typical_cell.psi_count_ordered(theta={})", theta.radians()),
                Some(2.0 * s * s),
                &per_theta_outcomes(&|s| f64::from(s.psi_count_ordered)),
            )?;
            let closed = report_from_outcomes(
                &format!("typical_cell.psi_count_closed(theta={})", theta.radians()),
                Some(4.0 * s * s),
                &per_theta_outcomes(&|s| f64::from(s.psi_count_closed)),
            )?;
            psi_conventions.push(convention_report(theta.radians(), ordered, closed));
        } else {
            let oracle = oracles::mean_arc_length_3d(cfg.lambda, *theta).ok();
            arc_lengths.push(report_from_outcomes(
                &format!("typical_cell.arc_length(theta={})", theta.radians()),
                oracle,
                &per_theta_outcomes(&|s| s.arc_length_total),
            )?);
        }
    }

    Ok(TypicalCellRun {
        rows,
        total_facets,
        midpoint_facets,
        non_midpoint_facets,
        xi_count,
        psi_conventions,
        arc_lengths,
    })
}

pub fn typical_cell_csv(run: &TypicalCellRun) -> String {
    let mut out = String::from(
        "rep,theta,psi_count_ordered,psi_count_closed,midpoint_facets,total_facets,arc_length_total,xi_count\n",
    );
    for r in &run.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.rep,
            fmt_f64(r.theta),
            r.stats.psi_count_ordered,
            r.stats.psi_count_closed,
            r.stats.midpoint_facets,
            r.stats.total_facets,
            fmt_f64(r.stats.arc_length_total),
            r.stats.xi_count
        ));
    }
    out
}
