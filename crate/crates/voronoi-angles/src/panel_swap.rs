//! Handover simulation for a mobile moving on a line through the cells of a
//! planar tessellation, with a handset carrying 2^m directional panels.
//!
//! Each crossing of a cell boundary is a handover between the two nuclei
//! (base stations) of the crossed facet; the handover needs a panel swap
//! exactly when the two nuclei fall into different panel beams as seen from
//! the crossing point.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::EstimateReport;
use crate::geom::{Point, TAU};
use crate::oracles::panel_swap_probability;
use crate::processes::{scan_crossings, Crossing};
use crate::sampling::{sample_poisson, RandomStream, Window};

/// Panel layout: 2^m beams of equal width, the k-th covering azimuths
/// [chi + 2 k pi / 2^m, chi + 2 (k+1) pi / 2^m).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PanelConfig {
    m: u32,
    chi: f64,
}

impl PanelConfig {
    pub fn new(m: u32, chi: f64) -> Result<Self> {
        if m < 1 {
            return Err(Error::InvalidParameter(
                "panel exponent m must be >= 1".into(),
            ));
        }
        if !(0.0..std::f64::consts::PI).contains(&chi) {
            return Err(Error::InvalidParameter(format!(
                "panel offset chi must lie in [0, pi), got {chi}"
            )));
        }
        Ok(PanelConfig { m, chi })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn chi(&self) -> f64 {
        self.chi
    }

    pub fn beams(&self) -> u32 {
        1 << self.m
    }
}

/// Handover/swap tallies of one replication.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct SwapStats {
    pub handovers: u64,
    pub swaps: u64,
}

/// Index of the beam containing the azimuth of `p` as seen from `z`,
/// counterclockwise from the positive first axis.
pub fn sector_index(p: &Point<2>, z: &Point<2>, cfg: &PanelConfig) -> Result<u32> {
    if p == z {
        return Err(Error::DegeneratePair);
    }
    let v = p.sub(z);
    let azimuth = v[1].atan2(v[0]).rem_euclid(TAU);
    let width = TAU / f64::from(cfg.beams());
    let k = ((azimuth - cfg.chi).rem_euclid(TAU) / width) as u32;
    Ok(k.min(cfg.beams() - 1))
}

/// True iff the two nuclei of the crossing are seen in different beams from
/// the crossing point.
pub fn crossing_swap(c: &Crossing<2>, cfg: &PanelConfig) -> bool {
    let z = Point([c.x, 0.0]);
    let a = sector_index(c.pair.first(), &z, cfg).expect("crossing off its own pair");
    let b = sector_index(c.pair.second(), &z, cfg).expect("crossing off its own pair");
    a != b
}

/// Tallies handovers and swaps over a scan.
pub fn count_swaps(crossings: &[Crossing<2>], cfg: &PanelConfig) -> SwapStats {
    let mut stats = SwapStats::default();
    for c in crossings {
        stats.handovers += 1;
        if crossing_swap(c, cfg) {
            stats.swaps += 1;
        }
    }
    stats
}

/// Simulation configuration for the swap-probability estimate.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SwapSimConfig {
    pub lambda: f64,
    pub segment_length: f64,
    /// Guard margin around the scan segment, in units of lambda^(-1/2).
    pub margin_factor: f64,
    pub n_replications: u32,
    pub master_seed: u64,
}

/// A swap-probability estimate with its pooled tallies.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SwapEstimate {
    pub report: EstimateReport,
    pub total_handovers: u64,
    pub total_swaps: u64,
}

/// Estimates the swap probability for each panel exponent in `ms` from the
/// same replications: one sample and one scan per replication, a fresh panel
/// offset chi drawn uniformly on [0, pi) per replication, and a
/// ratio-of-totals estimator across replications.
pub fn estimate_swap_probabilities(cfg: &SwapSimConfig, ms: &[u32]) -> Result<Vec<SwapEstimate>> {
    use rand::Rng;
    if ms.iter().any(|&m| m < 1) {
        return Err(Error::InvalidParameter(
            "panel exponent m must be >= 1".into(),
        ));
    }
    let margin = cfg.margin_factor * cfg.lambda.powf(-0.5);
    let window = Window::new([-margin, -margin], [cfg.segment_length + margin, margin])?;

    enum Rep {
        Ok {
            stats: Vec<SwapStats>,
            contaminated: bool,
        },
        Aborted,
    }

    let reps = crate::estimators::par_replicate(
        cfg.n_replications,
        cfg.master_seed,
        |_, stream: &mut RandomStream| {
            let sample = match sample_poisson(cfg.lambda, &window, stream) {
                Ok(s) => s,
                Err(_) => return Rep::Aborted,
            };
            let chi = stream.random_range(0.0..std::f64::consts::PI);
            let scan = match scan_crossings(&sample, 0.0, cfg.segment_length) {
                Ok(s) => s,
                Err(_) => return Rep::Aborted,
            };
            let stats = ms
                .iter()
                .map(|&m| {
                    let panel = PanelConfig::new(m, chi).expect("validated above");
                    count_swaps(&scan.crossings, &panel)
                })
                .collect();
            Rep::Ok {
                stats,
                contaminated: scan.contaminated,
            }
        },
    );

    let n = reps.len() as u32;
    let aborted = reps.iter().filter(|r| matches!(r, Rep::Aborted)).count() as u32;
    if f64::from(aborted) / f64::from(n.max(1)) > 0.20 {
        return Err(Error::DegenerateConfiguration(
            100.0 * f64::from(aborted) / f64::from(n),
        ));
    }
    let contaminated = reps
        .iter()
        .filter(|r| {
            matches!(
                r,
                Rep::Ok {
                    contaminated: true,
                    ..
                }
            )
        })
        .count() as u32;

    let mut out = Vec::with_capacity(ms.len());
    for (mi, &m) in ms.iter().enumerate() {
        let pairs: Vec<(f64, f64)> = reps
            .iter()
            .filter_map(|r| match r {
                Rep::Ok { stats, .. } => Some((stats[mi].swaps as f64, stats[mi].handovers as f64)),
                Rep::Aborted => None,
            })
            .collect();
        let total_handovers: f64 = pairs.iter().map(|p| p.1).sum();
        if total_handovers == 0.0 {
            return Err(Error::NoHandovers);
        }
        let total_swaps: f64 = pairs.iter().map(|p| p.0).sum();
        let p_hat = total_swaps / total_handovers;

        // Ratio-of-totals estimator; Taylor-linearized standard error.
        let k = pairs.len() as f64;
        let h_bar = total_handovers / k;
        let resid_var = pairs
            .iter()
            .map(|(s, h)| {
                let e = s - p_hat * h;
                e * e
            })
            .sum::<f64>()
            / (k - 1.0);
        let stderr = resid_var.sqrt() / (h_bar * k.sqrt());

        let oracle = panel_swap_probability(m);
        out.push(SwapEstimate {
            report: EstimateReport {
                statistic_id: format!("panel_swap(m={m})"),
                n_replications: n,
                mean: p_hat,
                stderr,
                ci95: [p_hat - 1.96 * stderr, p_hat + 1.96 * stderr],
                oracle_value: Some(oracle),
                z_score: Some(if stderr > 0.0 {
                    (p_hat - oracle) / stderr
                } else {
                    f64::INFINITY
                }),
                aborted_replications: aborted,
                contamination_flags: contaminated,
            },
            total_handovers: total_handovers as u64,
            total_swaps: total_swaps as u64,
        });
    }
    Ok(out)
}

/// Single-exponent convenience wrapper around
/// [`estimate_swap_probabilities`].
pub fn estimate_swap_probability(cfg: &SwapSimConfig, m: u32) -> Result<SwapEstimate> {
    Ok(estimate_swap_probabilities(cfg, &[m])?
        .pop()
        .expect("one report per requested exponent"))
}
