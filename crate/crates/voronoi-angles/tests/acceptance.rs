//! Reference-scale validation suite: runs every criterion at the pinned seed
//! and scale, printing one line per criterion. This is the same suite the
//! `validate` subcommand exposes.

use voronoi_angles::validation::{run_acceptance, AcceptanceOptions};

#[test]
fn acceptance_suite_passes_at_reference_scale() {
    let report = run_acceptance(&AcceptanceOptions::default()).expect("suite runs");
    for line in report.lines() {
        println!("{line}");
    }
    let failed: Vec<_> = report
        .criteria
        .iter()
        .filter(|c| !c.passed)
        .map(|c| format!("criterion {}: {}", c.id, c.summary))
        .collect();
    assert!(report.all_passed, "failed criteria:\n{}", failed.join("\n"));
    assert_eq!(report.criteria.len(), 12);
}

#[test]
fn acceptance_suite_has_power_against_wrong_oracles() {
    let opts = AcceptanceOptions {
        master_seed: 42,
        scale: 0.1,
        inject_oracle_error: true,
    };
    let report = run_acceptance(&opts).expect("suite runs");
    assert!(
        !report.all_passed,
        "a 10% oracle perturbation must fail at least one criterion"
    );
}
