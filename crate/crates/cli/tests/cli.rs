use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rfcover"))
}

fn manifest(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(rel)
}

fn run_config(config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut cmd = bin();
    cmd.arg("run").arg(config).arg("--out").arg(out).args(extra);
    cmd.output().unwrap()
}

fn read_report(out: &Path, stem: &str) -> Value {
    let text = std::fs::read_to_string(out.join(format!("{stem}.report.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn strip_timing(v: &mut Value) {
    match v {
        Value::Object(map) => {
            map.remove("timing");
            map.values_mut().for_each(strip_timing);
        }
        Value::Array(items) => items.iter_mut().for_each(strip_timing),
        _ => {}
    }
}

#[test]
fn empty_matrix_gives_zero_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("empty.toml");
    std::fs::write(&cfg, "parameter_mode = \"practical\"\neps = 0.1\ndelta = 0.1\n").unwrap();
    let out = run_config(&cfg, dir.path(), &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_report(dir.path(), "empty");
    assert_eq!(report["runs"].as_array().unwrap().len(), 0);
    assert_eq!(report["schema"], "rfcover-report/1");
}

#[test]
fn ac1_config_meets_the_pass_rate() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_config(&manifest("configs/ac1.toml"), dir.path(), &["--jobs", "4"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_report(dir.path(), "ac1");
    let summary = &report["summary"][0];
    assert_eq!(summary["runs"], 20);
    assert!(summary["pass_rate"].as_f64().unwrap() >= 0.9, "{summary}");
    assert_eq!(summary["within_policy_bound"], true);
    let run = &report["runs"][0]["result"];
    assert!(run["episodes"].as_u64().unwrap() > 0);
    assert!(run["params"]["samples"].as_u64().is_some());
    assert!(run["cover"]["entries"].as_array().unwrap().len() == 12);
}

#[test]
fn reports_are_deterministic_modulo_timing() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cfg = manifest("configs/lock.toml");
    assert!(run_config(&cfg, a.path(), &["--jobs", "1"]).status.success());
    assert!(run_config(&cfg, b.path(), &["--jobs", "3"]).status.success());
    let (mut ra, mut rb) = (read_report(a.path(), "lock"), read_report(b.path(), "lock"));
    strip_timing(&mut ra);
    strip_timing(&mut rb);
    assert_eq!(serde_json::to_string(&ra).unwrap(), serde_json::to_string(&rb).unwrap());
    let pcr = ra["runs"].as_array().unwrap().iter().find(|r| r["algorithm"] == "pcr").unwrap();
    assert!(pcr["result"]["reset_queries"].as_u64().unwrap() > 0);
    assert_eq!(pcr["result"]["params"]["dataset_mode"], "shared");
}

#[test]
fn seed_flag_changes_the_runs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cfg = manifest("configs/lock.toml");
    assert!(run_config(&cfg, a.path(), &[]).status.success());
    assert!(run_config(&cfg, b.path(), &["--seed", "99"]).status.success());
    let (ra, rb) = (read_report(a.path(), "lock"), read_report(b.path(), "lock"));
    assert_eq!(rb["config"]["seed"], 99);
    assert_ne!(ra["runs"][0]["seed"], rb["runs"][0]["seed"]);
}

#[test]
fn per_run_failures_are_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    let text = "parameter_mode = \"practical\"\neps = 0.1\ndelta = 0.1\nalgorithms = [\"pco\"]\n\
                [[envs]]\nkind = \"random_block\"\nhorizon = 2\nstates = 3\nactions = 2\nobs = 2\nmin_reach = 0.1\n";
    std::fs::write(&cfg, text).unwrap();
    let out = run_config(&cfg, dir.path(), &[]);
    assert!(out.status.success());
    let report = read_report(dir.path(), "bad");
    assert_eq!(report["runs"][0]["status"], "error");
    assert!(report["runs"][0]["error"].as_str().unwrap().contains("observations"));
    assert_eq!(report["summary"][0]["errors"], 1);
}

#[test]
fn theory_mode_reports_the_schedule_without_running() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_config(&manifest("configs/theory.toml"), dir.path(), &[]);
    assert!(out.status.success());
    let report = read_report(dir.path(), "theory");
    assert_eq!(report["runs"].as_array().unwrap().len(), 0);
    let theory = report["theory"].as_array().unwrap();
    assert_eq!(theory.len(), 2);
    assert!(theory[0]["schedule"]["ln_eps"].as_f64().unwrap() < -100.0);
}

#[test]
fn config_errors_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("typo.toml");
    std::fs::write(&cfg, "parameter_mode = \"practical\"\neps = 0.1\ndelta = 0.1\nrunz = 3\n").unwrap();
    let out = run_config(&cfg, dir.path(), &[]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("runz"));
}

#[test]
fn invariants_pass_on_shipped_fixtures() {
    let out = bin().args(["verify", "invariants"]).output().unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{stdout}");
    assert!(stdout.contains("fixture lock.json PASS"));
}

#[test]
fn corrupted_fixture_fails_with_the_invariant_named() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(manifest("fixtures/lock.json")).unwrap();
    let mut model: Value = serde_json::from_str(&text).unwrap();
    model["P"][0][0][0] = serde_json::json!([0.51, 0.5]);
    std::fs::write(dir.path().join("corrupt.json"), serde_json::to_string(&model).unwrap()).unwrap();
    let out = bin().args(["verify", "invariants", "--fixtures"]).arg(dir.path()).output().unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(!out.status.success());
    assert!(stdout.contains("fixture corrupt.json FAIL"), "{stdout}");
    assert!(stdout.contains("sums to 1.01"), "{stdout}");
}

#[test]
fn all_suite_covers_invariants_and_acceptance() {
    let out = bin().args(["verify", "all", "--jobs", "1"]).output().unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("fixture gadget.json"));
    for i in 1..=8 {
        assert!(stdout.contains(&format!("AC-{i} ")), "{stdout}");
    }
    assert!(out.status.success(), "{stdout}");
}
