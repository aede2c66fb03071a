//! End-to-end tests of the command-line interface: artifacts, exit codes,
//! configuration handling, and byte-identical reruns.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_voronoi-angles"))
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name))
        .unwrap_or_else(|e| panic!("missing artifact {name}: {e}"))
}

#[test]
fn psi_command_writes_csv_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .args([
            "psi",
            "--reps",
            "6",
            "--window",
            "20",
            "--theta",
            "3.141592653589793",
            "--seed",
            "9",
            "--out",
        ])
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());

    let csv = read(dir.path(), "psi_points.csv");
    assert!(csv.starts_with("rep,zx,zy,theta,ball_radius\n"));
    assert!(csv.lines().count() > 1);

    let report: serde_json::Value =
        serde_json::from_str(&read(dir.path(), "psi_report.json")).unwrap();
    assert_eq!(report["master_seed"], 9);
    assert_eq!(report["config"]["reps"], 6);
    assert!(report["toolkit_version"].is_string());
    assert_eq!(report["report"][0]["oracle_value"], 2.0);
}

#[test]
fn crossings_command_writes_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .args([
            "crossings",
            "--reps",
            "30",
            "--segment-length",
            "50",
            "--bins",
            "6",
            "--seed",
            "11",
            "--out",
        ])
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    assert!(read(dir.path(), "crossings.csv").starts_with("rep,x,theta_oriented,beta,r,R\n"));
    let intensity: serde_json::Value =
        serde_json::from_str(&read(dir.path(), "intensity_report.json")).unwrap();
    assert!(intensity["report"]["mean"].as_f64().unwrap() > 0.5);
    let gof: serde_json::Value = serde_json::from_str(&read(dir.path(), "angle_gof.json")).unwrap();
    assert!(gof["report"]["gof"]["p_value"].is_number());
    assert!(gof["report"]["symmetry"]["p_value"].is_number());
}

#[test]
fn crossings_command_3d_omits_the_oriented_column() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .args([
            "crossings",
            "--dim",
            "3",
            "--reps",
            "30",
            "--segment-length",
            "50",
            "--bins",
            "6",
            "--seed",
            "19",
            "--out",
        ])
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    assert!(read(dir.path(), "crossings.csv").starts_with("rep,x,beta,r,R\n"));
    let intensity: serde_json::Value =
        serde_json::from_str(&read(dir.path(), "intensity_report.json")).unwrap();
    let oracle = intensity["report"]["oracle_value"].as_f64().unwrap();
    assert!((oracle - 1.45522).abs() < 1e-4);
}

#[test]
fn oversized_margin_is_a_configuration_error() {
    // margin 8 on a window of side 10 leaves no inner region to observe
    let dir = tempfile::tempdir().unwrap();
    let output = bin()
        .args([
            "psi",
            "--window",
            "10",
            "--margin-factor",
            "8",
            "--reps",
            "4",
            "--out",
        ])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(!output.stderr.is_empty());
}

#[test]
fn typical_cell_command_writes_conventions() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .args([
            "typical-cell",
            "--reps",
            "40",
            "--theta",
            "3.141592653589793",
            "--seed",
            "13",
            "--out",
        ])
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    let csv = read(dir.path(), "typical_cell.csv");
    assert!(csv.starts_with(
        "rep,theta,psi_count_ordered,psi_count_closed,midpoint_facets,total_facets,arc_length_total,xi_count\n"
    ));
    let report: serde_json::Value =
        serde_json::from_str(&read(dir.path(), "typical_cell_report.json")).unwrap();
    assert!(report["report"]["total_facets"]["mean"].as_f64().unwrap() > 3.0);
    assert!(report["report"]["psi_conventions"][0]["ordered"]["mean"].is_number());
}

#[test]
fn panel_swap_command_reports_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .args([
            "panel-swap",
            "--reps",
            "20",
            "--segment-length",
            "40",
            "--panels",
            "2",
            "--seed",
            "15",
            "--out",
        ])
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    let report: serde_json::Value =
        serde_json::from_str(&read(dir.path(), "panel_swap_report.json")).unwrap();
    let oracle = report["report"]["report"]["oracle_value"].as_f64().unwrap();
    assert!((oracle - 0.90032).abs() < 1e-4);
    assert!(report["report"]["total_handovers"].as_u64().unwrap() > 0);
}

#[test]
fn identical_invocations_are_byte_identical_across_worker_counts() {
    let run = |dir: &Path, workers: &str| {
        let status = bin()
            .args([
                "psi",
                "--reps",
                "8",
                "--window",
                "20",
                "--theta",
                "2.0943951023931953",
                "--seed",
                "21",
                "--workers",
                workers,
                "--out",
            ])
            .arg(dir)
            .status()
            .unwrap();
        assert!(status.success());
    };
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run(a.path(), "1");
    run(b.path(), "4");
    assert_eq!(
        std::fs::read(a.path().join("psi_points.csv")).unwrap(),
        std::fs::read(b.path().join("psi_points.csv")).unwrap()
    );
    assert_eq!(
        std::fs::read(a.path().join("psi_report.json")).unwrap(),
        std::fs::read(b.path().join("psi_report.json")).unwrap()
    );
}

#[test]
fn config_file_is_merged_with_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("run.conf");
    std::fs::write(
        &config_path,
        "# comment line\nreps = 6\nwindow = 20\ntheta = 3.141592653589793\nseed = 33\n",
    )
    .unwrap();
    let status = bin()
        .arg("--config")
        .arg(&config_path)
        .args(["psi", "--seed", "44", "--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    let report: serde_json::Value =
        serde_json::from_str(&read(dir.path(), "psi_report.json")).unwrap();
    // flag wins over file
    assert_eq!(report["master_seed"], 44);
    // file wins over default
    assert_eq!(report["config"]["reps"], 6);
}

#[test]
fn malformed_config_exits_with_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("bad.conf");
    std::fs::write(&config_path, "reps ohne gleichheitszeichen\n").unwrap();
    let output = bin()
        .arg("--config")
        .arg(&config_path)
        .args(["psi", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(!output.stderr.is_empty());

    std::fs::write(&config_path, "unknown_key = 3\n").unwrap();
    let output = bin()
        .arg("--config")
        .arg(&config_path)
        .args(["psi", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn invalid_parameters_exit_with_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["psi", "--margin-factor", "1.0"],
        vec!["psi", "--dim", "3"],
        vec!["crossings", "--dim", "4"],
        vec!["psi", "--theta", "7.0"],
        vec!["panel-swap", "--panels", "0"],
    ] {
        let output = bin()
            .args(&args)
            .arg("--out")
            .arg(dir.path())
            .output()
            .unwrap();
        assert_eq!(output.status.code(), Some(2), "args {args:?}");
    }
}

#[test]
fn validate_smoke_run_passes_and_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let output = bin()
        .args(["validate", "--scale", "0.08", "--json", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    let report: serde_json::Value =
        serde_json::from_str(std::str::from_utf8(&output.stdout).unwrap()).unwrap();
    assert_eq!(report["criteria"].as_array().unwrap().len(), 12);
    let file: serde_json::Value =
        serde_json::from_str(&read(dir.path(), "validation_report.json")).unwrap();
    assert_eq!(file["report"]["scale"], 0.08);
}

#[test]
fn validate_fails_under_an_injected_wrong_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let output = bin()
        .args([
            "validate",
            "--scale",
            "0.08",
            "--inject-wrong-oracle",
            "--out",
        ])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
}
