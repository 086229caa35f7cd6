//! End-to-end runs of the `dualflow` binary: exit codes, artifacts and the
//! config echo.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn dualflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dualflow")).args(args).output().expect("binary runs")
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).expect("file exists")).expect("valid JSON")
}

fn csv_column(text: &str, name: &str) -> Vec<f64> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k = header.iter().position(|h| *h == name).unwrap_or_else(|| panic!("no column {name}"));
    lines.map(|l| l.split(',').nth(k).unwrap().parse().unwrap()).collect()
}

#[test]
fn separated_profile_vanishes_at_the_configured_time() {
    let dir = TempDir::new().unwrap();
    let out = dualflow(&["run-flow", "--flow", "fd", "--d", "5", "--profile", "separated:T=1", "--out", &out_arg(dir.path())]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let summary = read_json(&dir.path().join("summary.json"));
    let t_hat = summary["values"]["t_hat"].as_f64().unwrap();
    assert!((0.99..=1.01).contains(&t_hat), "t_hat = {t_hat}");
    assert_eq!(summary["config"]["d"], 5);

    let trace = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert!(trace.starts_with("t,J,Q,Lambda,K,H,Hprime,mass\n"));
    let field = fs::read_to_string(dir.path().join("fields/field_0000.txt")).unwrap();
    assert!(field.starts_with("# d=5 n=512 R_max="));
    assert_eq!(read_json(&dir.path().join("config.json"))["flow"], "fd");
}

#[test]
fn log_flow_outside_the_plane_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let out = dualflow(&["run-flow", "--flow", "log", "--d", "3", "--out", &out_arg(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("d = 2"));
    assert!(!dir.path().join("trace.csv").exists());
}

#[test]
fn moon_measure_is_a_fixed_point() {
    let dir = TempDir::new().unwrap();
    let out = dualflow(&["run-flow", "--flow", "log", "--d", "2", "--profile", "moon_measure", "--out", &out_arg(dir.path())]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let trace = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert!(trace.starts_with("t,H2,mass,rhs_H2prime\n"));
    assert!(csv_column(&trace, "H2").iter().all(|h| h.abs() < 1e-12));
    let summary = read_json(&dir.path().join("summary.json"));
    for r in summary["reports"].as_array().unwrap() {
        assert_eq!(r["verdict"], "pass", "{r}");
    }
}

#[test]
fn four_dimensional_verify_skips_gap_checks_and_passes() {
    let dir = TempDir::new().unwrap();
    let out = dualflow(&[
        "verify", "--d", "4", "--check", "theorem_gap", "--check", "explicit_gap", "--check", "constant_identity",
        "--out", &out_arg(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(0), "stdout: {}", String::from_utf8_lossy(&out.stdout));
    let report = read_json(&dir.path().join("report.json"));
    let reports = report["reports"].as_array().unwrap();
    for name in ["theorem_gap", "explicit_gap"] {
        let r = reports.iter().find(|r| r["name"] == name).unwrap();
        assert_eq!(r["verdict"], "skipped");
        assert!(r["notes"][0].as_str().unwrap().contains("d >= 5"));
    }
    assert_eq!(report["tally"]["fail"], 0);
}

#[test]
fn corrupted_profile_file_fails_the_run_and_names_the_parse() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "# d=5 n=3 R_max=1\n0 1\nnot-a-number 2\n").unwrap();
    let profile = format!("custom_tabulated:path={}", bad.display());
    let out = dualflow(&["verify", "--profile", &profile, "--check", "hd_monotonicity", "--out", &out_arg(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    let report = read_json(&dir.path().join("report.json"));
    let failed: Vec<&Value> =
        report["reports"].as_array().unwrap().iter().filter(|r| r["verdict"] == "fail").collect();
    assert_eq!(failed.len(), 1);
    let note = failed[0]["notes"][0].as_str().unwrap();
    assert!(note.contains("parse error") && note.contains("line 3"), "{note}");
}

#[test]
fn onofri_sweep_error_decreases() {
    let dir = TempDir::new().unwrap();
    let out = dualflow(&["sweep", "--axis", "p", "--d", "2", "--out", &out_arg(dir.path())]);
    assert!(out.status.success());
    let csv = fs::read_to_string(dir.path().join("sweep_p.csv")).unwrap();
    assert_eq!(csv_column(&csv, "p"), vec![16.0, 64.0, 256.0]);
    let err = csv_column(&csv, "abs_error");
    assert!(err.windows(2).all(|w| w[1] < w[0]), "{err:?}");
}

#[test]
fn explicit_gap_sweep_stays_below_the_constant() {
    let dir = TempDir::new().unwrap();
    let out = dualflow(&["sweep", "--axis", "epsilon", "--d", "5", "--values=-0.3,0.5,2", "--out", &out_arg(dir.path())]);
    assert!(out.status.success());
    let csv = fs::read_to_string(dir.path().join("sweep_epsilon.csv")).unwrap();
    let ratio = csv_column(&csv, "ratio");
    let constant = csv_column(&csv, "constant");
    assert_eq!(ratio.len(), 3);
    assert!(ratio.iter().zip(&constant).all(|(r, c)| r <= c));
}

#[test]
fn grid_sweep_of_the_constant_identity() {
    let dir = TempDir::new().unwrap();
    let out = dualflow(&["sweep", "--axis", "n", "--d", "3", "--values", "1024,2048,4096", "--out", &out_arg(dir.path())]);
    assert!(out.status.success());
    let csv = fs::read_to_string(dir.path().join("sweep_n.csv")).unwrap();
    let res = csv_column(&csv, "residual");
    assert!(res.windows(2).all(|w| w[1] < w[0]), "{res:?}");
}

#[test]
fn sweep_without_axis_is_a_usage_error() {
    assert_eq!(dualflow(&["sweep", "--d", "5"]).status.code(), Some(2));
    assert_eq!(dualflow(&["verify", "--tol.nonsense", "1"]).status.code(), Some(2));
    assert_eq!(dualflow(&["verify", "--check", "nonsense"]).status.code(), Some(2));
}

#[test]
fn config_file_is_overridden_by_flags_and_echoed() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("config.json");
    fs::write(&cfg, r#"{"d": 2, "seed": 11, "n": 256, "tolerances": {"closed_forms": 1e-3}}"#).unwrap();
    let out = dualflow(&[
        "verify", "--config", cfg.to_str().unwrap(), "--seed", "12", "--tol.closed_forms", "2e-3",
        "--check", "closed_forms", "--out", &out_arg(dir.path()),
    ]);
    assert!(out.status.success());
    let report = read_json(&dir.path().join("report.json"));
    assert_eq!(report["config"]["d"], 2);
    assert_eq!(report["config"]["n"], 256);
    assert_eq!(report["config"]["seed"], 12);
    assert_eq!(report["config"]["tolerances"]["closed_forms"].as_f64(), Some(2e-3));
    assert_eq!(report["reports"][0]["tolerance"].as_f64(), Some(2e-3));

    let summary = dualflow(&["report", dir.path().join("report.json").to_str().unwrap()]);
    assert!(summary.status.success());
    assert!(String::from_utf8_lossy(&summary.stdout).contains("3 passed, 0 failed"));
}
