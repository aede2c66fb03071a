//! Replication control and statistics: deterministic parallel replication,
//! mean/intensity estimators with normal-approximation confidence intervals,
//! and histogram goodness-of-fit against a reference density.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracles::{chi_square_sf, integrate};
use crate::sampling::RandomStream;

/// Replication-count and seeding configuration.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ReplicationConfig {
    pub n_replications: u32,
    pub master_seed: u64,
}

/// Result of one replication of a statistic.
#[derive(Clone, Copy, Debug)]
pub enum RepOutcome {
    Value {
        value: f64,
        contaminated: bool,
    },
    /// The replication hit a degenerate configuration and was excluded.
    Aborted,
}

/// A Monte Carlo estimate with its sampling error and oracle comparison.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EstimateReport {
    pub statistic_id: String,
    pub n_replications: u32,
    pub mean: f64,
    pub stderr: f64,
    pub ci95: [f64; 2],
    pub oracle_value: Option<f64>,
    pub z_score: Option<f64>,
    pub aborted_replications: u32,
    pub contamination_flags: u32,
}

impl EstimateReport {
    /// Relative deviation of the estimate from its oracle, if registered.
    pub fn relative_error(&self) -> Option<f64> {
        self.oracle_value.map(|o| ((self.mean - o) / o).abs())
    }
}

/// Runs `f` once per replication index with an independently derived stream,
/// in parallel, collecting results in replication order. The output depends
/// only on `(master_seed, n)`, never on the worker count.
pub fn par_replicate<T: Send>(
    n: u32,
    master_seed: u64,
    f: impl Fn(u32, &mut RandomStream) -> T + Sync,
) -> Vec<T> {
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut stream = RandomStream::derive(master_seed, u64::from(i));
            f(i, &mut stream)
        })
        .collect()
}

/// Aggregates per-replication values into an estimate report. Aborted
/// replications are excluded and counted; more than 20% of them is an error.
pub fn report_from_outcomes(
    statistic_id: &str,
    oracle: Option<f64>,
    outcomes: &[RepOutcome],
) -> Result<EstimateReport> {
    let n = outcomes.len() as u32;
    let mut values = Vec::with_capacity(outcomes.len());
    let mut aborted = 0u32;
    let mut contaminated = 0u32;
    for o in outcomes {
        match o {
            RepOutcome::Value {
                value,
                contaminated: c,
            } => {
                values.push(*value);
                if *c {
                    contaminated += 1;
                }
            }
            RepOutcome::Aborted => aborted += 1,
        }
    }
    let abort_frac = f64::from(aborted) / f64::from(n.max(1));
    if abort_frac > 0.20 {
        return Err(Error::DegenerateConfiguration(100.0 * abort_frac));
    }
    if values.len() < 2 {
        return Err(Error::DegenerateConfiguration(100.0 * abort_frac));
    }
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1.0);
    let stderr = (var / k).sqrt();
    let z_score = oracle.map(|o| {
        if stderr > 0.0 {
            (mean - o) / stderr
        } else {
            f64::INFINITY
        }
    });
    Ok(EstimateReport {
        statistic_id: statistic_id.to_string(),
        n_replications: n,
        mean,
        stderr,
        ci95: [mean - 1.96 * stderr, mean + 1.96 * stderr],
        oracle_value: oracle,
        z_score,
        aborted_replications: aborted,
        contamination_flags: contaminated,
    })
}

/// Runs a replication-level statistic under the deterministic stream contract
/// and aggregates it.
pub fn run_replications(
    cfg: &ReplicationConfig,
    statistic_id: &str,
    oracle: Option<f64>,
    statistic: impl Fn(&mut RandomStream) -> RepOutcome + Sync,
) -> Result<EstimateReport> {
    if cfg.n_replications < 2 {
        return Err(Error::InvalidParameter(
            "need at least 2 replications".into(),
        ));
    }
    let outcomes = par_replicate(cfg.n_replications, cfg.master_seed, |_, stream| {
        statistic(stream)
    });
    report_from_outcomes(statistic_id, oracle, &outcomes)
}

/// Turns per-replication counts over a fixed observation measure (inner area
/// or segment length) into an intensity estimate.
pub fn intensity_estimate(
    statistic_id: &str,
    oracle: Option<f64>,
    counts: &[RepOutcome],
    measure: f64,
) -> Result<EstimateReport> {
    if !(measure.is_finite() && measure > 0.0) {
        return Err(Error::ZeroMeasure);
    }
    let scaled: Vec<RepOutcome> = counts
        .iter()
        .map(|o| match o {
            RepOutcome::Value {
                value,
                contaminated,
            } => RepOutcome::Value {
                value: value / measure,
                contaminated: *contaminated,
            },
            RepOutcome::Aborted => RepOutcome::Aborted,
        })
        .collect();
    report_from_outcomes(statistic_id, oracle, &scaled)
}

/// Histogram goodness-of-fit report against a reference density.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DensityReport {
    pub bin_edges: Vec<f64>,
    pub observed_counts: Vec<u64>,
    pub expected_counts: Vec<f64>,
    pub chi_square: f64,
    pub dof: u32,
    pub p_value: f64,
}

/// Pearson chi-square of equal-width histogram counts against the expected
/// bin masses of `density` over `domain`. Requires at least 20 marks per bin
/// on average and expected counts of at least 5 everywhere.
pub fn density_gof(
    marks: &[f64],
    density: &dyn Fn(f64) -> f64,
    bins: usize,
    domain: (f64, f64),
) -> Result<DensityReport> {
    if bins < 2 {
        return Err(Error::InvalidParameter("need at least 2 bins".into()));
    }
    if marks.len() < 20 * bins {
        return Err(Error::TooFewMarks {
            needed: 20 * bins,
            got: marks.len(),
        });
    }
    let (lo, hi) = domain;
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(Error::InvalidParameter("empty histogram domain".into()));
    }
    let width = (hi - lo) / bins as f64;
    let bin_edges: Vec<f64> = (0..=bins).map(|i| lo + width * i as f64).collect();

    let mut observed = vec![0u64; bins];
    for &m in marks {
        if m < lo || m > hi {
            return Err(Error::InvalidParameter(format!(
                "mark {m} outside the histogram domain"
            )));
        }
        let mut b = ((m - lo) / width) as usize;
        if b >= bins {
            b = bins - 1;
        }
        observed[b] += 1;
    }

    let total = marks.len() as f64;
    let mut expected = Vec::with_capacity(bins);
    for i in 0..bins {
        let mass = integrate(density, bin_edges[i], bin_edges[i + 1], 1e-12);
        let e = total * mass;
        if e < 5.0 {
            return Err(Error::Rebin { bin: i, count: e });
        }
        expected.push(e);
    }

    let chi_square: f64 = observed
        .iter()
        .zip(&expected)
        .map(|(&o, &e)| {
            let d = o as f64 - e;
            d * d / e
        })
        .sum();
    let dof = (bins - 1) as u32;
    Ok(DensityReport {
        bin_edges,
        observed_counts: observed,
        expected_counts: expected,
        chi_square,
        dof,
        p_value: chi_square_sf(chi_square, dof),
    })
}

/// Chi-square test of histogram symmetry under m -> (lo + hi) - m, comparing
/// each bin against its mirror.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SymmetryReport {
    pub chi_square: f64,
    pub dof: u32,
    pub p_value: f64,
}

pub fn mirrored_symmetry_gof(
    marks: &[f64],
    bins: usize,
    domain: (f64, f64),
) -> Result<SymmetryReport> {
    if bins < 2 || !bins.is_multiple_of(2) {
        return Err(Error::InvalidParameter(
            "symmetry test needs an even number of bins".into(),
        ));
    }
    let (lo, hi) = domain;
    let width = (hi - lo) / bins as f64;
    let mut observed = vec![0u64; bins];
    for &m in marks {
        if m < lo || m > hi {
            continue;
        }
        let mut b = ((m - lo) / width) as usize;
        if b >= bins {
            b = bins - 1;
        }
        observed[b] += 1;
    }
    let mut chi_square = 0.0;
    let mut dof = 0u32;
    for i in 0..bins / 2 {
        let a = observed[i] as f64;
        let b = observed[bins - 1 - i] as f64;
        if a + b > 0.0 {
            chi_square += (a - b) * (a - b) / (a + b);
            dof += 1;
        }
    }
    if dof == 0 {
        return Err(Error::TooFewMarks { needed: 1, got: 0 });
    }
    Ok(SymmetryReport {
        chi_square,
        dof,
        p_value: chi_square_sf(chi_square, dof),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;

    #[test]
    fn constant_statistic_has_zero_stderr() {
        let cfg = ReplicationConfig {
            n_replications: 10,
            master_seed: 1,
        };
        let report = run_replications(&cfg, "const", None, |_| RepOutcome::Value {
            value: 3.0,
            contaminated: false,
        })
        .unwrap();
        assert_eq!(report.mean, 3.0);
        assert_eq!(report.stderr, 0.0);
        assert_eq!(report.aborted_replications, 0);
    }

    #[test]
    fn fair_coin_mean_is_one_half() {
        let cfg = ReplicationConfig {
            n_replications: 10_000,
            master_seed: 9,
        };
        let report = run_replications(&cfg, "coin", Some(0.5), |stream| RepOutcome::Value {
            value: if stream.random_range(0.0..1.0) < 0.5 {
                1.0
            } else {
                0.0
            },
            contaminated: false,
        })
        .unwrap();
        assert!(
            (report.mean - 0.5).abs() < 3.0 * 0.005,
            "mean {}",
            report.mean
        );
        assert!(report.z_score.unwrap().abs() < 4.0);
    }

    #[test]
    fn aggregation_is_worker_count_independent() {
        let stat = |stream: &mut RandomStream| RepOutcome::Value {
            value: stream.random_range(0.0..1.0),
            contaminated: false,
        };
        let cfg = ReplicationConfig {
            n_replications: 64,
            master_seed: 123,
        };
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| run_replications(&cfg, "u", None, stat).unwrap())
        };
        let a = run(1);
        let b = run(4);
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    }

    #[test]
    fn too_many_aborts_is_an_error() {
        let cfg = ReplicationConfig {
            n_replications: 10,
            master_seed: 5,
        };
        let result = run_replications(&cfg, "bad", None, |stream| {
            if stream.random_range(0.0..1.0) < 0.9 {
                RepOutcome::Aborted
            } else {
                RepOutcome::Value {
                    value: 1.0,
                    contaminated: false,
                }
            }
        });
        assert!(matches!(result, Err(Error::DegenerateConfiguration(_))));
    }

    #[test]
    fn intensity_estimate_scales_counts() {
        let counts: Vec<RepOutcome> = (0..10)
            .map(|_| RepOutcome::Value {
                value: 100.0,
                contaminated: false,
            })
            .collect();
        let report = intensity_estimate("int", Some(1.0), &counts, 100.0).unwrap();
        assert_relative_eq!(report.mean, 1.0, max_relative = 1e-12);

        let zeros: Vec<RepOutcome> = (0..10)
            .map(|_| RepOutcome::Value {
                value: 0.0,
                contaminated: false,
            })
            .collect();
        let report = intensity_estimate("zero", None, &zeros, 100.0).unwrap();
        assert_eq!(report.mean, 0.0);
        assert!(intensity_estimate("int", None, &counts, 0.0).is_err());
    }

    #[test]
    fn ci_coverage_is_nominal() {
        // 200 meta-runs of a mean-of-uniforms statistic with oracle 0.5:
        // the 95% interval must cover in 90..=99% of runs.
        let mut covered = 0;
        for meta in 0..200u64 {
            let cfg = ReplicationConfig {
                n_replications: 100,
                master_seed: 1000 + meta,
            };
            let report = run_replications(&cfg, "cover", Some(0.5), |stream| {
                let mut acc = 0.0;
                for _ in 0..100 {
                    acc += stream.random_range(0.0..1.0);
                }
                RepOutcome::Value {
                    value: acc / 100.0,
                    contaminated: false,
                }
            })
            .unwrap();
            if report.ci95[0] <= 0.5 && 0.5 <= report.ci95[1] {
                covered += 1;
            }
        }
        assert!(
            (180..=198).contains(&covered),
            "covered {covered} of 200 meta-runs"
        );
    }

    #[test]
    fn gof_accepts_marks_from_their_own_density() {
        // inversion sampling from (1/4) sin(t/2): F(t) = (1 - cos(t/2)) / 2
        let mut stream = RandomStream::derive(77, 0);
        let marks: Vec<f64> = (0..100_000)
            .map(|_| {
                let u: f64 = stream.random_range(0.0..1.0);
                2.0 * (1.0 - 2.0 * u).acos()
            })
            .collect();
        let report = density_gof(
            &marks,
            &crate::oracles::angle_density_2d,
            24,
            (0.0, crate::geom::TAU),
        )
        .unwrap();
        assert!(report.p_value > 0.01, "p = {}", report.p_value);
        let sym = mirrored_symmetry_gof(&marks, 24, (0.0, crate::geom::TAU)).unwrap();
        assert!(sym.p_value > 0.01, "sym p = {}", sym.p_value);
    }

    #[test]
    fn gof_rejects_a_mismatched_density() {
        let mut stream = RandomStream::derive(78, 0);
        let marks: Vec<f64> = (0..30_000)
            .map(|_| {
                let u: f64 = stream.random_range(0.0..1.0);
                2.0 * (1.0 - 2.0 * u).acos()
            })
            .collect();
        let report = density_gof(
            &marks,
            &crate::oracles::angle_density_3d,
            24,
            (0.0, crate::geom::TAU),
        )
        .unwrap();
        assert!(report.p_value < 0.01, "p = {}", report.p_value);
    }

    #[test]
    fn gof_guards_sample_size_and_bin_mass() {
        let marks = vec![1.0; 100];
        assert!(matches!(
            density_gof(&marks, &crate::oracles::angle_density_2d, 24, (0.0, 6.0)),
            Err(Error::TooFewMarks { .. })
        ));
        // plenty of marks but a density with almost no mass in outer bins
        let narrow = |t: f64| if (t - 3.0).abs() < 0.1 { 5.0 } else { 1e-9 };
        let marks = vec![3.0; 1000];
        assert!(matches!(
            density_gof(&marks, &narrow, 10, (0.0, 6.0)),
            Err(Error::Rebin { .. })
        ));
    }

    #[test]
    fn observed_and_expected_totals_agree() {
        let mut stream = RandomStream::derive(79, 0);
        let marks: Vec<f64> = (0..50_000)
            .map(|_| {
                let u: f64 = stream.random_range(0.0..1.0);
                2.0 * (1.0 - 2.0 * u).acos()
            })
            .collect();
        let report = density_gof(
            &marks,
            &crate::oracles::angle_density_2d,
            20,
            (0.0, crate::geom::TAU),
        )
        .unwrap();
        let obs: u64 = report.observed_counts.iter().sum();
        let exp: f64 = report.expected_counts.iter().sum();
        assert_eq!(obs as usize, marks.len());
        assert!((exp - obs as f64).abs() <= 1e-6 * obs as f64);
        assert_eq!(report.dof, 19);
    }
}
