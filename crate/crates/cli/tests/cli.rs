use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn chorefx(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chorefx")).args(args).output().expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, body).unwrap();
    p
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn additive_instance(costs: [&[&str]; 3]) -> String {
    let agents: Vec<Value> = costs.iter().map(|c| serde_json::json!({ "type": "additive", "costs": c })).collect();
    serde_json::json!({ "m": costs[0].len(), "agents": agents }).to_string()
}

#[test]
fn tefx_solve_on_ratio2_output_verifies() {
    let dir = TempDir::new().unwrap();
    let inst = dir.path().join("inst.json");
    let alloc = dir.path().join("alloc.json");
    let trace = dir.path().join("trace.jsonl");
    let gen = chorefx(&["gen", "--m", "9", "--regime", "ratio2", "--agent3", "tabular-monotone", "--seed", "11", "--output", path_str(&inst)]);
    assert!(gen.status.success(), "{}", String::from_utf8_lossy(&gen.stderr));

    let solve = chorefx(&["solve", "--mode", "tefx", "--input", path_str(&inst), "--output", path_str(&alloc), "--trace", path_str(&trace)]);
    assert_eq!(solve.status.code(), Some(0), "{}", String::from_utf8_lossy(&solve.stderr));
    let doc: Value = serde_json::from_str(&fs::read_to_string(&alloc).unwrap()).unwrap();
    assert_eq!(doc["certificate"]["verdict"], Value::Bool(true));
    assert_eq!(doc["assignment"].as_object().unwrap().len(), 3);
    let lines = fs::read_to_string(&trace).unwrap();
    assert!(lines.lines().count() >= 1);
    for line in lines.lines() {
        serde_json::from_str::<Value>(line).unwrap();
    }

    let verify = chorefx(&["verify", "--mode", "tefx", "--input", path_str(&inst), "--allocation", path_str(&alloc)]);
    assert_eq!(verify.status.code(), Some(0));
    assert_eq!(stdout_json(&verify)["verdict"], Value::Bool(true));
}

#[test]
fn efx_solve_on_ido_instance() {
    let dir = TempDir::new().unwrap();
    let inst = dir.path().join("inst.json");
    let gen = chorefx(&["gen", "--m", "7", "--regime", "ido-collective", "--agent3", "additive", "--seed", "4", "--output", path_str(&inst)]);
    assert!(gen.status.success());
    let solve = chorefx(&["solve", "--mode", "efx", "--input", path_str(&inst)]);
    assert_eq!(solve.status.code(), Some(0), "{}", String::from_utf8_lossy(&solve.stderr));
    assert_eq!(stdout_json(&solve)["certificate"]["verdict"], Value::Bool(true));
}

#[test]
fn corrupted_allocation_fails_verification_with_witness() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "inst.json", &additive_instance([&["3", "4", "5", "6"]; 3]));
    // Every chore on agent 1: it envies the empty bundles even after dropping any chore.
    let alloc = write(&dir, "alloc.json", r#"{"bundles": [[0, 1, 2, 3], [], []]}"#);
    let out = chorefx(&["verify", "--mode", "efx", "--input", path_str(&inst), "--allocation", path_str(&alloc)]);
    assert_ne!(out.status.code(), Some(0));
    let cert = stdout_json(&out);
    assert_eq!(cert["verdict"], Value::Bool(false));
    let witnesses = cert["witnesses"].as_array().unwrap();
    assert!(!witnesses.is_empty());
    assert_eq!(witnesses[0]["envier"], Value::from(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("witness"));
}

#[test]
fn check_reports_collective_but_not_ratio_bounded() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "inst.json", &additive_instance([&["0.2", "0.3", "0.49"]; 3]));
    let out = chorefx(&["check", "--input", path_str(&inst)]);
    assert_eq!(out.status.code(), Some(0));
    let report = stdout_json(&out);
    for agent in report["agents"].as_array().unwrap() {
        assert_eq!(agent["collective"], Value::Bool(true));
        assert_eq!(agent["ratio_bounded_2"], Value::Bool(false));
    }
}

#[test]
fn parse_error_names_json_path() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "inst.json", &additive_instance([&["1", "2"], &["1", "oops"], &["1", "2"]]));
    let out = chorefx(&["check", "--input", path_str(&inst)]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("agents[1].costs[1]"), "{err}");
}

#[test]
fn missing_file_exits_one() {
    let out = chorefx(&["check", "--input", "/nonexistent/inst.json"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn efx_on_non_ido_instance_is_an_assumption_violation() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "inst.json", &additive_instance([&["3", "4", "5"], &["5", "4", "3"], &["1", "1", "1"]]));
    let out = chorefx(&["solve", "--mode", "efx", "--input", path_str(&inst)]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn no_perturb_on_degenerate_instance_is_an_assumption_violation() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "inst.json", &additive_instance([&["2", "2", "3"]; 3]));
    let out = chorefx(&["solve", "--mode", "tefx", "--input", path_str(&inst), "--no-perturb"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn oracle_reports_existence() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "inst.json", &additive_instance([&["1", "2"]; 3]));
    let out = chorefx(&["oracle", "--mode", "efx", "--input", path_str(&inst)]);
    assert_eq!(out.status.code(), Some(0));
    let r = stdout_json(&out);
    assert_eq!(r["exists"], Value::Bool(true));
    assert_eq!(r["count"], Value::from(6));
}

#[test]
fn gen_is_deterministic() {
    let args = ["gen", "--m", "5", "--regime", "ido-collective", "--agent3", "tabular-monotone", "--seed", "9"];
    let a = chorefx(&args);
    let b = chorefx(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn perturb_records_epsilon() {
    let dir = TempDir::new().unwrap();
    let inst = write(&dir, "inst.json", &additive_instance([&["1", "2", "3"]; 3]));
    let out = chorefx(&["perturb", "--input", path_str(&inst), "--epsilon", "auto"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = stdout_json(&out);
    // delta = 1 for subset sums of {1, 2, 3}; epsilon = 1 / 2^(3+2).
    assert_eq!(doc["metadata"]["epsilon"], Value::from("1/32"));
    assert_eq!(doc["metadata"]["delta"], Value::from("1"));

    let explicit = chorefx(&["perturb", "--input", path_str(&inst), "--epsilon", "1/1000"]);
    assert_eq!(stdout_json(&explicit)["metadata"]["epsilon"], Value::from("1/1000"));
}
