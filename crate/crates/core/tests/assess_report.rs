//! Sweeps, report files and the `assess` binary on the small fixtures.

use std::process::Command;

use fdiva::assess::{
    emit_report, read_csv, run_assessment, Algorithm, AssessmentConfig, AssessmentReport, ReportFormat, TargetSelection,
    ValueList, CSV_COLUMNS,
};

fn fixture(name: &str) -> String {
    format!("{}/fixtures/{name}_fdi.m", env!("CARGO_MANIFEST_DIR"))
}

fn small_sweep(ls: &[f64]) -> AssessmentReport {
    let mut cfg = AssessmentConfig::new(fixture("case3"));
    cfg.targets = TargetSelection::Lines(vec![1, 2, 3]);
    cfg.n1 = ValueList(vec![0.1, 0.5, 1.0]);
    cfg.load_shift = ValueList(ls.to_vec());
    cfg.algorithms = vec![Algorithm::Rg, Algorithm::Rcg, Algorithm::Dm, Algorithm::Mbd, Algorithm::Milp];
    cfg.jobs = 1;
    run_assessment(&cfg).unwrap()
}

#[test]
fn one_cell_per_combination_and_no_violations() {
    let r = small_sweep(&[0.1]);
    assert_eq!(r.cells.len(), 3 * 3 * 5);
    assert!(r.violations.is_empty());
    assert_eq!(r.failed_cells(), 0);
    assert_eq!(r.meta.targets, [1, 2, 3]);
    for c in &r.cells {
        assert!(c.objective.is_some_and(f64::is_finite), "{c:?}");
    }
    for t in 1..=3 {
        let rg = r.cell(t, 1.0, 0.1, Algorithm::Rg).unwrap().objective.unwrap();
        let dm = r.cell(t, 1.0, 0.1, Algorithm::Dm).unwrap();
        assert!(dm.objective.unwrap() <= rg + 1e-6 && rg <= dm.upper_bound.unwrap() + 1e-6);
    }
}

#[test]
fn report_files_round_trip() {
    let r = small_sweep(&[0.1]);
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("r.csv");
    let json = dir.path().join("r.json");
    emit_report(&r, ReportFormat::Csv, &csv).unwrap();
    emit_report(&r, ReportFormat::Json, &json).unwrap();
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next().unwrap(), CSV_COLUMNS.join(","));
    assert_eq!(read_csv(text.as_bytes()).unwrap(), r.cells);
    let back: AssessmentReport = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(back, r);
}

#[test]
fn larger_load_shift_never_lowers_the_exact_value() {
    let r = small_sweep(&[0.05, 0.1]);
    for t in 1..=3 {
        for n1 in [0.1, 0.5, 1.0] {
            let a = r.cell(t, n1, 0.05, Algorithm::Rg).unwrap();
            let b = r.cell(t, n1, 0.1, Algorithm::Rg).unwrap();
            let pa = a.objective.unwrap() - 1e-3 * a.l1.unwrap();
            let pb = b.objective.unwrap() - 1e-3 * b.l1.unwrap();
            assert!(pa <= pb + 1e-6, "line {t} N1 {n1}: {pa} > {pb}");
        }
    }
}

fn assess() -> Command {
    Command::new(env!("CARGO_BIN_EXE_assess"))
}

#[test]
fn cli_writes_reports_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("out.csv");
    let json = dir.path().join("out.json");
    let status = assess()
        .args(["--case", &fixture("case3"), "--algorithms", "rg,dm", "--targets", "2", "--n1", "0.5:0.5:1.0"])
        .args(["--load-shift", "0.1", "--jobs", "1", "--seed", "7"])
        .arg("--out")
        .arg(&csv)
        .arg("--json")
        .arg(&json)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let cells = read_csv(std::fs::File::open(&csv).unwrap()).unwrap();
    assert_eq!(cells.len(), 2 * 2);
    let r: AssessmentReport = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(r.cells, cells);
    assert_eq!(r.meta.config.seed, Some(7));
}

#[test]
fn cli_flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    let json = dir.path().join("out.json");
    let body = serde_json::json!({
        "case": fixture("case3"),
        "algorithms": ["rg", "rcg"],
        "targets": [1, 2, 3],
        "n1": "0.1:0.1:0.3",
        "load_shift": [0.1],
        "jobs": 1
    });
    std::fs::write(&cfg, body.to_string()).unwrap();
    let status = assess()
        .arg("--config")
        .arg(&cfg)
        .args(["--algorithms", "dm", "--n1", "1.0"])
        .arg("--json")
        .arg(&json)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let r: AssessmentReport = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(r.meta.config.algorithms, [Algorithm::Dm]);
    assert_eq!(r.meta.config.n1.0, [1.0]);
    assert_eq!(r.cells.len(), 3);
}

#[test]
fn cli_reports_other_errors_with_exit_one() {
    let out = assess().args(["--case", "/nonexistent/case.m"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
    let out = assess().args(["--case", &fixture("case3"), "--load-shift", "1.5"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = assess().args(["--case", &fixture("case3"), "--algorithms", "simplex"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = assess().output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}
