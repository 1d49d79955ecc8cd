use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn extrans(args: &[&str], out_dir: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_extrans"));
    cmd.args(args).env_remove("EXTRANS_OUT_DIR");
    if let Some(d) = out_dir {
        cmd.env("EXTRANS_OUT_DIR", d);
    }
    cmd.output().expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn without_timing(mut v: Value) -> String {
    v.as_object_mut().unwrap().remove("timing");
    serde_json::to_string_pretty(&v).unwrap()
}

#[test]
fn verify_local_writes_a_passing_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.json");
    let out = extrans(&["verify", "--model", "local", "--order", "3", "--json", path.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = read_json(&path);
    let model = &doc["models"][0];
    assert_eq!(model["id"], "local");
    assert_eq!(model["rank_total"], 6);
    assert_eq!(model["rank_trivial"], 4);
    assert_eq!(model["limit_verified"], true);
    assert_eq!(doc["ledger"], Value::Array(vec![]));
}

#[test]
fn order_below_two_is_rejected() {
    let out = extrans(&["verify", "--model", "local", "--order", "1"], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("order must be at least 2"));
}

#[test]
fn unknown_model_is_rejected() {
    let out = extrans(&["verify", "--model", "quintic"], None);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn instantons_for_the_local_model_are_unsupported() {
    let out = extrans(&["instantons", "--model", "local"], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unsupported"));
}

#[test]
fn instantons_go_to_stdout_and_cross_check_lines() {
    let out = extrans(&["instantons", "--model", "t24", "--max-degree", "1"], None);
    assert_eq!(out.status.code(), Some(0));
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    let row = &doc["instantons"][0];
    assert_eq!(row["n0"], "8");
    assert_eq!(row["numbers"]["1"], "1280/1");
    assert_eq!(row["lines_oracle"], "1280/1");
    assert_eq!(row["n1_cross_checked"], true);
}

#[test]
fn out_dir_variable_names_the_report_and_body_is_stable() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["verify", "--model", "local", "--order", "2", "--emit-ledger"];
    let path = dir.path().join("verify-local.json");
    assert_eq!(extrans(&args, Some(dir.path())).status.code(), Some(0));
    let first = read_json(&path);
    assert_eq!(extrans(&args, Some(dir.path())).status.code(), Some(0));
    let second = read_json(&path);
    assert!(first.get("timing").is_some());
    assert_eq!(without_timing(first.clone()), without_timing(second));
    let ledger = first["ledger"].as_array().unwrap();
    assert!(!ledger.is_empty());
    for key in ["location", "printed", "adopted", "residual_zero", "justification"] {
        assert!(ledger[0].get(key).is_some(), "{key}");
    }
}

#[test]
fn unwritable_output_path_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("missing").join("out.json");
    let out = extrans(&["instantons", "--model", "t24", "--max-degree", "1", "--json", path.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2));
}
