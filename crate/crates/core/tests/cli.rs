//! Exit codes and artifacts of the command-line tool.
use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn jumprec(dir: &Path, sub: &str, config: &str, extra: &[&str]) -> i32 {
    let cfg = dir.join(format!("{sub}.cfg"));
    fs::write(&cfg, config).unwrap();
    let out = dir.join("out");
    Command::new(env!("CARGO_BIN_EXE_jumprec"))
        .arg(sub)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(extra)
        .output()
        .unwrap()
        .status
        .code()
        .unwrap()
}

fn result(dir: &Path, sub: &str) -> Value {
    let text = fs::read_to_string(dir.join("out").join(format!("{sub}.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn lambda_at_critical_point_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let code = jumprec(dir.path(), "lambda", "d = 2\nalpha = 1\nq = -0.5\n", &[]);
    assert_eq!(code, 0);
    let v = result(dir.path(), "lambda");
    assert!(v["invariant_failures"].as_array().unwrap().is_empty());
    assert!(dir.path().join("out/lambda.csv").exists());
}

#[test]
fn simulate_rejects_q_above_half_beta() {
    let dir = tempfile::tempdir().unwrap();
    let code = jumprec(dir.path(), "simulate", "d = 1\nalpha = 1.2\nbeta = 1.2\nq = 0.6\nn_paths = 10\n", &[]);
    assert_eq!(code, 2);
}

#[test]
fn drift_in_transient_regime_is_negative() {
    let dir = tempfile::tempdir().unwrap();
    let code = jumprec(dir.path(), "drift", "d = 2\nalpha = 1\np = 0.5\ndelta = 0.25\n", &[]);
    assert_eq!(code, 0);
    let v = result(dir.path(), "drift");
    assert_eq!(v["result"]["all_negative_beyond_M"], Value::Bool(true));
}

#[test]
fn malformed_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(jumprec(dir.path(), "drift", "d = 2\nalpha = one\n", &[]), 2);
    assert_eq!(jumprec(dir.path(), "drift", "this is not a config line\n", &[]), 2);
    assert_eq!(jumprec(dir.path(), "lambda", "d = 2\nalpha = 2.5\n", &[]), 2);
}

#[test]
fn bad_flags_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(jumprec(dir.path(), "lambda", "d = 2\nalpha = 1\n", &["--tol", "2"]), 2);
    assert_eq!(jumprec(dir.path(), "lambda", "d = 2\nalpha = 1\n", &["--threads", "0"]), 2);
}

#[test]
fn classify_matches_thresholds() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(jumprec(dir.path(), "classify", "d = 1\nbeta = 1.5\np = -0.5\nq = 0.2\n", &[]), 0);
    assert_eq!(result(dir.path(), "classify")["result"]["verdict"], "recurrent");
    assert_eq!(jumprec(dir.path(), "classify", "d = 1\nbeta = 1.5\np = -0.5\nq = 0.3\n", &[]), 0);
    assert_eq!(result(dir.path(), "classify")["result"]["verdict"], "transient");
}

#[test]
fn manifest_rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = "d = 1\nalpha = 1.2\nbeta = 1.2\nq = 0.3\nx0 = 50\nn_paths = 200\nmax_jumps = 20000\nevents = 3\n";
    assert_eq!(jumprec(dir.path(), "simulate", config, &["--seed", "9", "--threads", "1"]), 0);
    let first = result(dir.path(), "simulate");
    let events = fs::read(dir.path().join("out/events.csv")).unwrap();
    let manifest = dir.path().join("manifest-first.json");
    fs::copy(dir.path().join("out/manifest.json"), &manifest).unwrap();

    let rerun = dir.path().join("rerun");
    let status = Command::new(env!("CARGO_BIN_EXE_jumprec"))
        .args(["simulate", "--threads", "3", "--config"])
        .arg(&manifest)
        .arg("--out")
        .arg(&rerun)
        .output()
        .unwrap()
        .status;
    assert_eq!(status.code(), Some(0));
    let second: Value = serde_json::from_str(&fs::read_to_string(rerun.join("simulate.json")).unwrap()).unwrap();
    assert_eq!(
        serde_json::to_string(&first["result"]).unwrap(),
        serde_json::to_string(&second["result"]).unwrap()
    );
    assert_eq!(events, fs::read(rerun.join("events.csv")).unwrap());
}

#[test]
fn manifest_from_another_subcommand_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(jumprec(dir.path(), "classify", "d = 1\nbeta = 1.5\n", &[]), 0);
    let manifest = dir.path().join("out/manifest.json");
    let status = Command::new(env!("CARGO_BIN_EXE_jumprec"))
        .args(["drift", "--config"])
        .arg(&manifest)
        .arg("--out")
        .arg(dir.path().join("other"))
        .output()
        .unwrap()
        .status;
    assert_eq!(status.code(), Some(2));
}
