//! Command-line interface: flat key=value configuration files with flag
//! overrides, experiment subcommands writing CSV/JSON artifacts, and the
//! `validate` runner.
//!
//! Exit codes: 0 success, 1 validation failure, 2 usage or configuration
//! error, 3 internal degeneracy overflow.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::error::Error;
use crate::experiments::{
    crossings_csv, psi_csv, run_crossings, run_psi, run_typical_cell, typical_cell_csv,
    CrossingsConfig, PsiConfig, TypicalCellConfig,
};
use crate::panel_swap::{estimate_swap_probability, SwapSimConfig};
use crate::validation::{run_acceptance, AcceptanceOptions};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser, Debug)]
#[command(
    name = "voronoi-angles",
    version,
    about = "Monte Carlo experiments on Poisson-Voronoi angle statistics"
)]
struct Cli {
    /// Flat key=value configuration file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Intensity experiment for the prescribed-angle facet process (2D).
    Psi(CommonArgs),
    /// Line-crossing intensity and angle-mark experiment (2D or 3D).
    Crossings(CommonArgs),
    /// Palm statistics of the cell at the origin.
    TypicalCell(CommonArgs),
    /// Panel-swap handover experiment (2D).
    PanelSwap(CommonArgs),
    /// Run the full validation suite and write a pass/fail report.
    Validate(ValidateArgs),
}

#[derive(Args, Debug, Default, Clone)]
struct CommonArgs {
    /// Ambient dimension (2 or 3).
    #[arg(long)]
    dim: Option<u8>,
    /// Intensity of the generating process.
    #[arg(long)]
    lambda: Option<f64>,
    /// Angle in radians; repeat the flag for several angles.
    #[arg(long)]
    theta: Vec<f64>,
    /// Window side length.
    #[arg(long)]
    window: Option<f64>,
    /// Guard margin factor (>= 3).
    #[arg(long)]
    margin_factor: Option<f64>,
    /// Scan segment length.
    #[arg(long)]
    segment_length: Option<f64>,
    /// Number of replications.
    #[arg(long)]
    reps: Option<u32>,
    /// Histogram bin count.
    #[arg(long)]
    bins: Option<usize>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Panel exponent m (the handset has 2^m beams).
    #[arg(long)]
    panels: Option<u32>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker thread count (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Emit machine-readable output only.
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug, Default, Clone)]
struct ValidateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Replication-count multiplier for smoke runs (hidden; reference = 1).
    #[arg(long, hide = true)]
    scale: Option<f64>,
    /// Perturb every oracle so a healthy suite must fail (harness power check).
    #[arg(long, hide = true)]
    inject_wrong_oracle: bool,
}

/// Fully merged run configuration (defaults < config file < flags). The
/// execution-only fields (output directory, worker count, output style) are
/// excluded from report echoes: artifacts must be byte-identical across
/// worker counts and output locations.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub dim: u8,
    pub lambda: f64,
    pub thetas: Vec<f64>,
    pub window: f64,
    pub margin_factor: f64,
    pub segment_length: f64,
    pub reps: u32,
    pub bins: usize,
    pub seed: u64,
    pub panels: u32,
    #[serde(skip_serializing)]
    pub out: PathBuf,
    #[serde(skip_serializing)]
    pub workers: Option<usize>,
    #[serde(skip_serializing)]
    pub json: bool,
}

#[derive(Debug)]
struct ConfigError(String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "configuration error: {}", self.0)
    }
}

fn parse_config_file(path: &Path) -> Result<HashMap<String, String>, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
    let mut map = HashMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError(format!(
                "{}:{}: expected key=value, got {line:?}",
                path.display(),
                lineno + 1
            )));
        };
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn parse_field<T: std::str::FromStr>(
    map: &HashMap<String, String>,
    key: &str,
) -> Result<Option<T>, ConfigError>
where
    T::Err: std::fmt::Display,
{
    match map.get(key) {
        None => Ok(None),
        Some(raw) => raw
            .parse::<T>()
            .map(Some)
            .map_err(|e| ConfigError(format!("key {key}: {e}"))),
    }
}

/// Per-command defaults.
struct Defaults {
    window: f64,
    margin_factor: f64,
    reps: u32,
}

fn merge_config(
    args: &CommonArgs,
    file: Option<&PathBuf>,
    defaults: &Defaults,
) -> Result<RunConfig, ConfigError> {
    let map = match file {
        Some(path) => parse_config_file(path)?,
        None => HashMap::new(),
    };
    let known = [
        "dim",
        "lambda",
        "theta",
        "window",
        "margin_factor",
        "segment_length",
        "reps",
        "bins",
        "seed",
        "panels",
        "out",
        "workers",
        "json",
    ];
    for key in map.keys() {
        if !known.contains(&key.as_str()) {
            return Err(ConfigError(format!("unknown configuration key {key:?}")));
        }
    }

    let dim = args.dim.or(parse_field(&map, "dim")?).unwrap_or(2);
    let thetas = if !args.theta.is_empty() {
        args.theta.clone()
    } else if let Some(raw) = map.get("theta") {
        raw.split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|e| ConfigError(format!("key theta: {e}")))
            })
            .collect::<Result<Vec<f64>, ConfigError>>()?
    } else {
        vec![std::f64::consts::PI]
    };
    let bins_default = if dim == 3 { 18 } else { 24 };

    let cfg = RunConfig {
        dim,
        lambda: args.lambda.or(parse_field(&map, "lambda")?).unwrap_or(1.0),
        thetas,
        window: args
            .window
            .or(parse_field(&map, "window")?)
            .unwrap_or(defaults.window),
        margin_factor: args
            .margin_factor
            .or(parse_field(&map, "margin_factor")?)
            .unwrap_or(defaults.margin_factor),
        segment_length: args
            .segment_length
            .or(parse_field(&map, "segment_length")?)
            .unwrap_or(200.0),
        reps: args
            .reps
            .or(parse_field(&map, "reps")?)
            .unwrap_or(defaults.reps),
        bins: args
            .bins
            .or(parse_field(&map, "bins")?)
            .unwrap_or(bins_default),
        seed: args.seed.or(parse_field(&map, "seed")?).unwrap_or(42),
        panels: args.panels.or(parse_field(&map, "panels")?).unwrap_or(1),
        out: args
            .out
            .clone()
            .or(parse_field::<PathBuf>(&map, "out")?)
            .unwrap_or_else(|| PathBuf::from(".")),
        workers: args.workers.or(parse_field(&map, "workers")?),
        json: args.json || parse_field(&map, "json")?.unwrap_or(false),
    };

    if !(cfg.dim == 2 || cfg.dim == 3) {
        return Err(ConfigError(format!("dim must be 2 or 3, got {}", cfg.dim)));
    }
    if !(cfg.lambda.is_finite() && cfg.lambda > 0.0) {
        return Err(ConfigError("lambda must be positive".into()));
    }
    if cfg.margin_factor < 3.0 {
        return Err(ConfigError(format!(
            "margin_factor must be >= 3, got {}",
            cfg.margin_factor
        )));
    }
    if !(cfg.window.is_finite() && cfg.window > 0.0)
        || !(cfg.segment_length.is_finite() && cfg.segment_length > 0.0)
    {
        return Err(ConfigError(
            "window and segment_length must be positive".into(),
        ));
    }
    if cfg.reps < 2 {
        return Err(ConfigError("reps must be at least 2".into()));
    }
    if cfg.panels < 1 {
        return Err(ConfigError("panels must be at least 1".into()));
    }
    for &t in &cfg.thetas {
        if !(t > 0.0 && t < crate::geom::TAU) {
            return Err(ConfigError(format!("theta must lie in (0, 2pi), got {t}")));
        }
    }
    Ok(cfg)
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    toolkit_version: &'a str,
    master_seed: u64,
    config: &'a RunConfig,
    report: T,
}

fn write_json<T: Serialize>(
    dir: &Path,
    name: &str,
    cfg: &RunConfig,
    report: T,
) -> Result<(), Error> {
    let envelope = Envelope {
        toolkit_version: VERSION,
        master_seed: cfg.seed,
        config: cfg,
        report,
    };
    let mut text = serde_json::to_string_pretty(&envelope).expect("serializable report");
    text.push('\n');
    std::fs::write(dir.join(name), text)?;
    Ok(())
}

fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::DegenerateConfiguration(_) | Error::DegenerateCrossing(_) => 3,
        Error::InvalidParameter(_) | Error::InvalidWindow(_) => 2,
        _ => 3,
    }
}

fn in_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match workers {
        None => f(),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .expect("worker pool");
            pool.install(f)
        }
    }
}

/// Parses the process arguments, runs the selected command and returns the
/// process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version as "errors" with exit code 0
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match &cli.command {
        Command::Psi(args) => run_cmd_psi(args, cli.config.as_ref()),
        Command::Crossings(args) => run_cmd_crossings(args, cli.config.as_ref()),
        Command::TypicalCell(args) => run_cmd_typical_cell(args, cli.config.as_ref()),
        Command::PanelSwap(args) => run_cmd_panel_swap(args, cli.config.as_ref()),
        Command::Validate(args) => run_cmd_validate(args, cli.config.as_ref()),
    }
}

fn prepare(cfg: &RunConfig) -> Result<(), Error> {
    std::fs::create_dir_all(&cfg.out)?;
    Ok(())
}

fn fail_usage(e: impl std::fmt::Display) -> i32 {
    eprintln!("error: {e}");
    2
}

fn fail_internal(e: &Error) -> i32 {
    eprintln!("error: {e}");
    exit_code_for(e)
}

fn run_cmd_psi(args: &CommonArgs, file: Option<&PathBuf>) -> i32 {
    let defaults = Defaults {
        window: 40.0,
        margin_factor: 4.0,
        reps: 200,
    };
    let cfg = match merge_config(args, file, &defaults) {
        Ok(cfg) => cfg,
        Err(e) => return fail_usage(e),
    };
    if cfg.dim != 2 {
        return fail_usage("the psi experiment is two-dimensional (set --dim 2)");
    }
    if let Err(e) = prepare(&cfg) {
        return fail_internal(&e);
    }
    let psi_cfg = PsiConfig {
        lambda: cfg.lambda,
        window_side: cfg.window,
        margin_factor: cfg.margin_factor,
        thetas: cfg.thetas.clone(),
        n_replications: cfg.reps,
        master_seed: cfg.seed,
        keep_rows: true,
    };
    let run = match in_pool(cfg.workers, || run_psi(&psi_cfg)) {
        Ok(run) => run,
        Err(e) => return fail_internal(&e),
    };
    if let Err(e) = std::fs::write(cfg.out.join("psi_points.csv"), psi_csv(&run))
        .map_err(Error::from)
        .and_then(|()| write_json(&cfg.out, "psi_report.json", &cfg, &run.reports))
    {
        return fail_internal(&e);
    }
    if !cfg.json {
        for report in &run.reports {
            println!(
                "{}: mean {:.6} vs oracle {:.6} (z = {:+.2})",
                report.statistic_id,
                report.mean,
                report.oracle_value.unwrap_or(f64::NAN),
                report.z_score.unwrap_or(f64::NAN),
            );
        }
    }
    0
}

fn run_cmd_crossings(args: &CommonArgs, file: Option<&PathBuf>) -> i32 {
    let defaults = Defaults {
        window: 40.0,
        margin_factor: 5.0,
        reps: 200,
    };
    let cfg = match merge_config(args, file, &defaults) {
        Ok(cfg) => cfg,
        Err(e) => return fail_usage(e),
    };
    if let Err(e) = prepare(&cfg) {
        return fail_internal(&e);
    }
    let cross_cfg = CrossingsConfig {
        dim: cfg.dim,
        lambda: cfg.lambda,
        segment_length: cfg.segment_length,
        margin_factor: cfg.margin_factor,
        bins: cfg.bins,
        n_replications: cfg.reps,
        master_seed: cfg.seed,
    };
    let run = match in_pool(cfg.workers, || run_crossings(&cross_cfg)) {
        Ok(run) => run,
        Err(e) => return fail_internal(&e),
    };
    #[derive(Serialize)]
    struct GofReport<'a> {
        gof: &'a Option<crate::estimators::DensityReport>,
        symmetry: &'a Option<crate::estimators::SymmetryReport>,
        n_marks: usize,
    }
    let result = std::fs::write(cfg.out.join("crossings.csv"), crossings_csv(&run, cfg.dim))
        .map_err(Error::from)
        .and_then(|()| write_json(&cfg.out, "intensity_report.json", &cfg, &run.intensity))
        .and_then(|()| {
            write_json(
                &cfg.out,
                "angle_gof.json",
                &cfg,
                GofReport {
                    gof: &run.gof,
                    symmetry: &run.symmetry,
                    n_marks: run.marks.len(),
                },
            )
        });
    if let Err(e) = result {
        return fail_internal(&e);
    }
    if !cfg.json {
        println!(
            "{}: mean {:.6} vs oracle {:.6} (z = {:+.2}); gof p = {}",
            run.intensity.statistic_id,
            run.intensity.mean,
            run.intensity.oracle_value.unwrap_or(f64::NAN),
            run.intensity.z_score.unwrap_or(f64::NAN),
            run.gof
                .as_ref()
                .map(|g| format!("{:.4}", g.p_value))
                .unwrap_or_else(|| "n/a (too few marks for the bin count)".into()),
        );
    }
    0
}

fn run_cmd_typical_cell(args: &CommonArgs, file: Option<&PathBuf>) -> i32 {
    let defaults = Defaults {
        window: 12.0,
        margin_factor: 5.0,
        reps: 400,
    };
    let cfg = match merge_config(args, file, &defaults) {
        Ok(cfg) => cfg,
        Err(e) => return fail_usage(e),
    };
    if let Err(e) = prepare(&cfg) {
        return fail_internal(&e);
    }
    let cell_cfg = TypicalCellConfig {
        dim: cfg.dim,
        lambda: cfg.lambda,
        window_side: cfg.window,
        thetas: cfg.thetas.clone(),
        n_replications: cfg.reps,
        master_seed: cfg.seed,
    };
    let run = match in_pool(cfg.workers, || run_typical_cell(&cell_cfg)) {
        Ok(run) => run,
        Err(e) => return fail_internal(&e),
    };
    #[derive(Serialize)]
    struct CellReport<'a> {
        total_facets: &'a crate::estimators::EstimateReport,
        midpoint_facets: &'a crate::estimators::EstimateReport,
        non_midpoint_facets: &'a crate::estimators::EstimateReport,
        xi_count: &'a Option<crate::estimators::EstimateReport>,
        psi_conventions: &'a [crate::experiments::PsiConventionReport],
        arc_lengths: &'a [crate::estimators::EstimateReport],
    }
    let result = std::fs::write(cfg.out.join("typical_cell.csv"), typical_cell_csv(&run))
        .map_err(Error::from)
        .and_then(|()| {
            write_json(
                &cfg.out,
                "typical_cell_report.json",
                &cfg,
                CellReport {
                    total_facets: &run.total_facets,
                    midpoint_facets: &run.midpoint_facets,
                    non_midpoint_facets: &run.non_midpoint_facets,
                    xi_count: &run.xi_count,
                    psi_conventions: &run.psi_conventions,
                    arc_lengths: &run.arc_lengths,
                },
            )
        });
    if let Err(e) = result {
        return fail_internal(&e);
    }
    if !cfg.json {
        println!(
            "facets: total {:.4}, midpoint {:.4}, complement {:.4}",
            run.total_facets.mean, run.midpoint_facets.mean, run.non_midpoint_facets.mean
        );
        for conv in &run.psi_conventions {
            println!(
                "theta = {:.4}: ordered {:.4}, closed {:.4}{}",
                conv.theta,
                conv.ordered.mean,
                conv.closed.mean,
                conv.resolution
                    .as_deref()
                    .map(|r| format!(" ({r})"))
                    .unwrap_or_default()
            );
        }
        for report in &run.arc_lengths {
            println!(
                "{}: mean {:.5} vs oracle {}",
                report.statistic_id,
                report.mean,
                report
                    .oracle_value
                    .map(|o| format!("{o:.5}"))
                    .unwrap_or_else(|| "n/a".into())
            );
        }
    }
    0
}

fn run_cmd_panel_swap(args: &CommonArgs, file: Option<&PathBuf>) -> i32 {
    let defaults = Defaults {
        window: 40.0,
        margin_factor: 5.0,
        reps: 100,
    };
    let cfg = match merge_config(args, file, &defaults) {
        Ok(cfg) => cfg,
        Err(e) => return fail_usage(e),
    };
    if cfg.dim != 2 {
        return fail_usage("the panel-swap experiment is two-dimensional (set --dim 2)");
    }
    if let Err(e) = prepare(&cfg) {
        return fail_internal(&e);
    }
    let swap_cfg = SwapSimConfig {
        lambda: cfg.lambda,
        segment_length: cfg.segment_length,
        margin_factor: cfg.margin_factor,
        n_replications: cfg.reps,
        master_seed: cfg.seed,
    };
    let estimate = match in_pool(cfg.workers, || {
        estimate_swap_probability(&swap_cfg, cfg.panels)
    }) {
        Ok(estimate) => estimate,
        Err(e) => return fail_internal(&e),
    };
    if let Err(e) = write_json(&cfg.out, "panel_swap_report.json", &cfg, &estimate) {
        return fail_internal(&e);
    }
    if !cfg.json {
        println!(
            "panel swap (m = {}): {:.5} vs oracle {:.5} over {} handovers (z = {:+.2})",
            cfg.panels,
            estimate.report.mean,
            estimate.report.oracle_value.unwrap_or(f64::NAN),
            estimate.total_handovers,
            estimate.report.z_score.unwrap_or(f64::NAN),
        );
    }
    0
}

fn run_cmd_validate(args: &ValidateArgs, file: Option<&PathBuf>) -> i32 {
    let defaults = Defaults {
        window: 40.0,
        margin_factor: 4.0,
        reps: 200,
    };
    let cfg = match merge_config(&args.common, file, &defaults) {
        Ok(cfg) => cfg,
        Err(e) => return fail_usage(e),
    };
    if let Err(e) = prepare(&cfg) {
        return fail_internal(&e);
    }
    let opts = AcceptanceOptions {
        master_seed: cfg.seed,
        scale: args.scale.unwrap_or(1.0),
        inject_oracle_error: args.inject_wrong_oracle,
    };
    let report = match in_pool(cfg.workers, || run_acceptance(&opts)) {
        Ok(report) => report,
        Err(e) => return fail_internal(&e),
    };
    if let Err(e) = write_json(&cfg.out, "validation_report.json", &cfg, &report) {
        return fail_internal(&e);
    }
    if cfg.json {
        println!(
            "{}",
            serde_json::to_string_pretty(&report).expect("serializable report")
        );
    } else {
        for line in report.lines() {
            println!("{line}");
        }
        println!(
            "{}: {} of {} criteria passed",
            if report.all_passed { "PASS" } else { "FAIL" },
            report.criteria.iter().filter(|c| c.passed).count(),
            report.criteria.len()
        );
    }
    if report.all_passed {
        0
    } else {
        1
    }
}
