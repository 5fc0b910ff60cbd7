use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn btu(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_btu"))
        .args(args)
        .env_remove("BTU_WORKERS")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(out: &Output) -> Value {
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_str(&stdout(out)).expect("stdout is JSON")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn partitions_of_six() {
    let v = json(&btu(&["partitions", "--m", "6"]));
    assert_eq!(v["count"], 4);
    assert_eq!(v["partitions"], serde_json::json!([[6], [4, 2], [3, 3], [2, 2, 2]]));
}

#[test]
fn bad_partition_is_a_usage_error_naming_the_token() {
    let out = btu(&["search", "--m", "4", "--r", "3", "--betas", "1,3:4", "--mode", "pipeline"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("1,3"));
    let out = btu(&["search", "--m", "4", "--r", "3", "--betas", "2,3:4", "--mode", "pipeline"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn search_json_has_the_documented_keys() {
    let out = btu(&["search", "--m", "4", "--r", "3", "--betas", "2,2:4", "--mode", "pipeline"]);
    let text = stdout(&out);
    assert!(text.ends_with('\n'));
    let v = json(&out);
    for key in ["explored", "girth", "mode", "perms", "spec"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["spec"], "2,2:4");
    assert_eq!(v["mode"], "pipeline");
    let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
    let pos = |k: &str| text.find(&format!("\"{k}\"")).unwrap();
    assert!(keys.windows(2).all(|w| pos(w[0]) < pos(w[1])));
}

#[test]
fn worker_count_does_not_change_output() {
    let one = btu(&["search", "--m", "5", "--r", "3", "--workers", "1"]);
    let four = Command::new(env!("CARGO_BIN_EXE_btu"))
        .args(["search", "--m", "5", "--r", "3"])
        .env("BTU_WORKERS", "4")
        .output()
        .unwrap();
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn census_csv_header() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("census.csv");
    let out = btu(&["search", "--m", "4", "--r", "3", "--mode", "implicit", "--census", path(&csv)]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("beta_tuple,best_girth,classes_seen"));
    assert!(lines.count() >= 1);

    let out = btu(&["search", "--m", "4", "--r", "3", "--mode", "implicit", "--format", "csv"]);
    assert!(stdout(&out).starts_with("beta_tuple,best_girth,classes_seen\n"));
    let out = btu(&["search", "--m", "4", "--r", "3", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn alist_round_trips_and_keeps_girth() {
    let dir = tempfile::tempdir().unwrap();
    let btu_json = dir.path().join("b.json");
    let alist = dir.path().join("b.alist");
    let out = btu(&["psi", "--beta", "3,3"]);
    std::fs::write(&btu_json, stdout(&out)).unwrap();
    let out = btu(&["export", "--in", path(&btu_json), "--format", "alist", "--out", path(&alist)]);
    assert_eq!(out.status.code(), Some(0));
    let from_json = json(&btu(&["girth", "--in", path(&btu_json), "--oracle"]));
    let from_alist = json(&btu(&["girth", "--in", path(&alist)]));
    assert_eq!(from_json["girth"], 6);
    assert_eq!(from_json["oracle_girth"], 6);
    assert_eq!(from_alist["girth"], 6);
    let dot = stdout(&btu(&["export", "--in", path(&btu_json), "--format", "dot"]));
    assert!(dot.starts_with("graph btu {"));
    assert_eq!(dot.matches(" -- ").count(), 12);
}

#[test]
fn manifest_replays_identically() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("run.json");
    let first = btu(&["--manifest", path(&manifest), "search", "--m", "5", "--r", "3", "--mode", "implicit"]);
    assert_eq!(first.status.code(), Some(0));
    let recorded: Value = serde_json::from_str(&std::fs::read_to_string(&manifest).unwrap()).unwrap();
    assert_eq!(recorded["workers"], 1);
    assert!(recorded["argv"].as_array().unwrap().iter().all(|a| a != "--manifest"));
    let again = btu(&["replay", path(&manifest)]);
    assert_eq!(again.status.code(), Some(0));
    assert_eq!(again.stdout, first.stdout);

    let mut tampered = recorded.clone();
    tampered["output"] = Value::String("{}\n".into());
    std::fs::write(&manifest, tampered.to_string()).unwrap();
    assert_eq!(btu(&["replay", path(&manifest)]).status.code(), Some(4));
}

#[test]
fn verify_manifest_records_the_seed() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("verify.json");
    let out = btu(&["--manifest", path(&manifest), "verify", "--suite", "girth", "--seed", "11"]);
    assert_eq!(out.status.code(), Some(0));
    let recorded: Value = serde_json::from_str(&std::fs::read_to_string(&manifest).unwrap()).unwrap();
    assert_eq!(recorded["seed"], 11);
    assert_eq!(btu(&["replay", path(&manifest)]).status.code(), Some(0));
}

#[test]
fn oracle_guard_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let big = dir.path().join("big.json");
    std::fs::write(&big, stdout(&btu(&["psi", "--beta", "7,7"]))).unwrap();
    let out = btu(&["girth", "--in", path(&big), "--oracle"]);
    assert_eq!(out.status.code(), Some(3));
    let out = btu(&["girth", "--in", path(&big)]);
    assert_eq!(json(&out)["girth"], 14);
}

#[test]
fn every_verify_suite_passes() {
    for suite in ["counting", "girth", "bounds", "iso"] {
        let out = btu(&["verify", "--suite", suite]);
        let text = stdout(&out);
        assert_eq!(out.status.code(), Some(0), "{text}");
        assert!(!text.contains("FAIL"));
        assert!(text.lines().next().unwrap().starts_with("suite"));
    }
}

#[test]
fn optimal_params_and_enumerate() {
    let v = json(&btu(&["optimal-params", "--k", "2", "--b", "3", "--r", "3"]));
    assert_eq!(v["m"], 12);
    assert_eq!(v["spec"], "6,6:12");
    assert_eq!(v["girth_bound"], 12);

    let v = json(&btu(&["enumerate", "--stage", "micro", "--from", "4", "--to", "2,2"]));
    assert_eq!(v["count"], 1);
    let v = json(&btu(&["enumerate", "--stage", "orders", "--from", "2,2", "--to", "4"]));
    assert!(v["count"].as_u64().unwrap() > 0);
    let out = btu(&["enumerate", "--stage", "micro", "--from", "4", "--to", "2,2", "--micro", "5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_flags_are_usage_errors() {
    assert_eq!(btu(&["search", "--m", "4"]).status.code(), Some(2));
    assert_eq!(btu(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(btu(&["search", "--m", "4", "--r", "2", "--workers", "0"]).status.code(), Some(2));
}
