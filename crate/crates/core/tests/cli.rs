//! Black-box tests of the binary: exit codes, artifact layout, seed override,
//! and report verification.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_pressure-lab")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().unwrap()
}

fn write_config(dir: &Path, body: serde_json::Value) -> String {
    let path = dir.join("scenario.json");
    std::fs::write(&path, serde_json::to_string_pretty(&body).unwrap()).unwrap();
    path.to_str().unwrap().to_owned()
}

fn small_scenario() -> serde_json::Value {
    serde_json::json!({
        "schema": 1,
        "label": "smoke",
        "system": {"kind": "horseshoe", "s": 2, "beta": 4.0, "gamma": 0.25},
        "experiments": ["enumerate", "pressures", "compare"],
        "n_range": [1, 2, 3, 4],
        "alpha_grid": [0.4, 0.1],
        "c_grid": [0.5, 0.1],
        "depths": [1, 2],
        "k_powers": [1, 2],
        "samples": 500,
        "seed": 11,
    })
}

#[test]
fn run_produces_report_and_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let config = write_config(dir.path(), small_scenario());
    let res = run(&["run", &config, "--output-dir", out.to_str().unwrap()]);
    assert!(res.status.success(), "stderr: {}", String::from_utf8_lossy(&res.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["label"], "smoke");
    assert_eq!(report["seed"], 11);
    assert!(!report["pressures"].as_object().unwrap().is_empty());
    let tables = std::fs::read_dir(out.join("tables")).unwrap().count();
    assert!(tables > 0, "expected convergence tables");
    assert!(out.join("orbits.cache").exists());
}

#[test]
fn seed_flag_overrides_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let config = write_config(dir.path(), small_scenario());
    let res = run(&["run", &config, "--output-dir", out.to_str().unwrap(), "--seed", "42"]);
    assert!(res.status.success());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["seed"], 42);
}

#[test]
fn schema_violation_exits_2_and_names_field() {
    let dir = tempfile::tempdir().unwrap();
    let mut bad = small_scenario();
    bad["alpha_grid"] = serde_json::json!([0.1, 0.4]); // must be strictly decreasing
    let config = write_config(dir.path(), bad);
    let res = run(&["run", &config]);
    assert_eq!(res.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&res.stderr);
    assert!(stderr.contains("alpha_grid"), "stderr: {stderr}");
}

#[test]
fn unknown_field_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let mut bad = small_scenario();
    bad["alpha_grd"] = serde_json::json!([0.4, 0.1]);
    let config = write_config(dir.path(), bad);
    let res = run(&["run", &config]);
    assert_eq!(res.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&res.stderr);
    assert!(stderr.contains("alpha_grd"), "stderr: {stderr}");
}

#[test]
fn verify_accepts_fresh_report_and_rejects_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let config = write_config(dir.path(), small_scenario());
    assert!(run(&["run", &config, "--output-dir", out.to_str().unwrap()]).status.success());
    let report = out.join("report.json");
    let res = run(&["verify", report.to_str().unwrap()]);
    assert!(res.status.success(), "stderr: {}", String::from_utf8_lossy(&res.stderr));

    // corrupt one table and verify again
    let table = std::fs::read_dir(out.join("tables")).unwrap().next().unwrap().unwrap().path();
    let mut text = std::fs::read_to_string(&table).unwrap();
    text.push_str("1,1,0.0\n");
    std::fs::write(&table, text).unwrap();
    let res = run(&["verify", report.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(3));
}

#[test]
fn list_systems_prints_registry() {
    let res = run(&["list-systems"]);
    assert!(res.status.success());
    let stdout = String::from_utf8_lossy(&res.stdout);
    for kind in ["cat", "toral", "horseshoe", "sft", "henon", "power"] {
        assert!(stdout.contains(kind), "missing {kind} in:\n{stdout}");
    }
}
