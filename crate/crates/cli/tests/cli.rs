use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn adl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_adl")).args(args).env_remove("ADL_JOBS").output().expect("run adl")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("adl-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn json_of(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json report")
}

fn planted(name: &str, n: &str, eta: &str) -> String {
    let path = scratch(name);
    let p = path.to_str().unwrap().to_string();
    let out =
        adl(&["gen", "--n", n, "--planted", "0,2", "--eta", eta, "--support-size", "40", "--seed", "7", "--out", &p]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    p
}

#[test]
fn gen_then_opt_is_at_most_eta() {
    let f = planted("opt.txt", "10", "0.15");
    let v = json_of(&adl(&["opt", "--in", &f]));
    assert!(v["opt"].as_f64().unwrap() <= 0.15 + 1e-9);
    assert_eq!(v["class"], "monotone_const1");
    assert_eq!(v["count_enumerated"], 1025);
}

#[test]
fn sq_learn_meets_opt_plus_eps() {
    let f = planted("sq.txt", "8", "0.1");
    let budget = scratch("budget.json");
    let v = json_of(&adl(&[
        "sq-learn",
        "--in",
        &f,
        "--backend",
        "exact",
        "--force-correct-guesses",
        "--budget-out",
        budget.to_str().unwrap(),
    ]));
    assert_eq!(v["within_opt_plus_eps"], true);
    assert!(v["iterations"].as_u64().unwrap() <= v["iteration_bound"].as_u64().unwrap());
    let b: Value = serde_json::from_str(&std::fs::read_to_string(budget).unwrap()).unwrap();
    assert_eq!(b["queries"], v["budget"]["queries"]);
    assert!(b["min_tolerance"].as_f64().unwrap() > 0.0);
}

#[test]
fn reports_are_byte_stable() {
    let f = planted("stable.txt", "8", "0.1");
    let a = adl(&["l1fit", "--in", &f, "--epsilon", "0.1", "--seed", "3"]);
    let b = adl(&["l1fit", "--in", &f, "--epsilon", "0.1", "--seed", "3"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    for key in ["loss", "degree", "threshold", "error"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn csq_weak_uses_only_correlational_queries() {
    let f = planted("csq.txt", "6", "0.05");
    let v = json_of(&adl(&["csq-weak", "--in", &f, "--epsilon", "0.25"]));
    assert_eq!(v["stat_queries"], 0);
    assert!(v["cstat_queries"].as_u64().unwrap() > 0);
    assert!(v["error"].as_f64().unwrap() <= 0.5 - 0.25 / 16.0);
}

#[test]
fn frontier_csv() {
    let out = adl(&["approx", "frontier", "--r", "4,9", "--epsilon", "0.1,0.01"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "r,eps,degree,max_dev");
    assert_eq!(lines.len(), 5);
}

#[test]
fn accept_approx_suite_passes() {
    let out = adl(&["accept", "--suite", "approx"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("[PASS]")).count(), 2);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(adl(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(adl(&["opt", "--in", "/nonexistent/file"]).status.code(), Some(1));
    assert_eq!(adl(&["accept", "--suite", "nope"]).status.code(), Some(1));
    assert_eq!(adl(&["gen", "--n", "4"]).status.code(), Some(1));
    assert_eq!(adl(&["--help"]).status.code(), Some(0));
    let bad_jobs = Command::new(env!("CARGO_BIN_EXE_adl"))
        .args(["approx", "certify", "--r", "4", "--epsilon", "0.1"])
        .env("ADL_JOBS", "zero")
        .output()
        .unwrap();
    assert_eq!(bad_jobs.status.code(), Some(1));
}

#[test]
fn env_jobs_overrides_flag() {
    let out = Command::new(env!("CARGO_BIN_EXE_adl"))
        .args(["--jobs", "0", "approx", "certify", "--r", "9", "--epsilon", "0.1"])
        .env("ADL_JOBS", "2")
        .output()
        .unwrap();
    let v = json_of(&out);
    assert_eq!(v["pass"], true);
}
