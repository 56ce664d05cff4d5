//! End-to-end checks of the `relaylab` binary.

use std::fs;
use std::process::{Command, Output};

use relaylab::model::SinrScaleReport;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relaylab")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn scaling_json_round_trips() {
    let o = run(&["scaling", "--r-k", "1/2", "--r-q", "1/2", "--json"]);
    assert_eq!(code(&o), 0);
    let r: SinrScaleReport = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r.r_s, relaylab::model::Exponent::new(0, 1));
    assert!(r.favourable);
}

#[test]
fn scaling_table_lists_every_case() {
    let o = run(&["scaling"]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!((1..=5).all(|i| text.contains(&format!("case{i}"))), "{text}");
}

#[test]
fn out_of_range_exponent_is_a_config_error() {
    assert_eq!(code(&run(&["scaling", "--r-k", "3/2"])), 2);
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(code(&run(&["bogus"])), 1);
    assert_eq!(code(&run(&["simulate"])), 1);
    assert_eq!(code(&run(&["acceptance", "nope"])), 1);
}

#[test]
fn bad_config_names_line_and_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "K = 4\nP = 1\nQ = x\n").unwrap();
    let o = run(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("line 3") && err.contains("`Q`"), "{err}");
}

#[test]
fn simulate_refuses_to_overwrite_without_force() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    let out = dir.path().join("out");
    fs::write(&cfg, "K = 4\nP = 1\nQ = 1\nP_c = 0.5\nM = 16, 32\ntrials = 1000\n").unwrap();
    let args = ["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    assert_eq!(code(&run(&args)), 0);
    let first = fs::read_to_string(out.join("records.csv")).unwrap();
    assert_eq!(first.lines().count(), 3);
    assert_eq!(code(&run(&args)), 1);
    let mut forced = args.to_vec();
    forced.push("--force");
    assert_eq!(code(&run(&forced)), 0);
    let again = fs::read_to_string(out.join("records.csv")).unwrap();
    let strip = |s: &str| s.lines().map(|l| l.rsplit_once(',').unwrap().0.to_string()).collect::<Vec<_>>();
    assert_eq!(strip(&first), strip(&again));
}

#[test]
fn analyze_writes_curves() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, r#"{"K": 4, "P_dB": 10, "Q_dB": 10, "P_c": 0.9, "M": [64, 128], "trials": 1000}"#).unwrap();
    let o = run(&["analyze", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("analytic.csv")).unwrap();
    assert!(csv.lines().count() > 2);
}
