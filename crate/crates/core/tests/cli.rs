use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tnarch::convac::{build_tn, random_weights, weights_tensor, ConvACSpec};

fn tnarch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tnarch")).args(args).output().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn write_spec(dir: &Path, spec: &ConvACSpec) -> String {
    let p = dir.join("spec.json");
    std::fs::write(&p, serde_json::to_string(spec).unwrap()).unwrap();
    p.to_str().unwrap().to_string()
}

fn n8() -> ConvACSpec {
    ConvACSpec::deep(8, 2, vec![2, 2, 2], 1, 2).unwrap()
}

#[test]
fn analyze_reports_rank_and_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), &n8());
    let v = stdout_json(&tnarch(&["analyze", "--spec", &spec, "--partition", "1,3,5,7", "--seed", "7", "--json"]));
    for key in ["rank", "entropy", "geometric", "schmidt", "mincut", "lower_bound"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["mincut"], "16");
    assert_eq!(v["rank"], 16);
    assert_eq!(v["schmidt"], 16);
    assert!(v["entropy"].as_f64().unwrap() <= 16f64.ln() + 1e-12);
}

#[test]
fn mincut_report_json() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), &n8());
    let v = stdout_json(&tnarch(&[
        "mincut", "--spec", &spec, "--partition", "1,2,3,4", "--modified", "--lower-bound",
    ]));
    assert_eq!(v["weight"], "2");
    assert_eq!(v["lower_bound"], "2");
    assert!(v["side_A"].is_array());
    assert!(v["cut_edges"].is_array());
    let ex = stdout_json(&tnarch(&["mincut", "--spec", &spec, "--partition", "1,2,3,4", "--exhaustive"]));
    assert_eq!(ex["weight"], v["weight"]);
}

#[test]
fn simulate_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("r.csv");
    let out = tnarch(&[
        "simulate", "--n", "8", "--m", "2", "--dims", "2,3,5,7", "--arrangements", "sample:3",
        "--partitions", "sample:5", "--seed", "1", "--threads", "2", "--json", "--out",
        csv.to_str().unwrap(),
    ]);
    let summary = stdout_json(&out);
    assert_eq!(summary["records"], 15);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("arrangement_id,channels,partition_id,partition_mask,rank,mincut,lower_bound,ratio,deviated\n"));
    assert_eq!(text.lines().count(), 16);
    assert!(!text.contains('\r'));

    // without --out the CSV goes to stdout
    let piped = tnarch(&[
        "simulate", "--n", "8", "--dims", "2,3,5,7", "--arrangements", "sample:3", "--partitions",
        "sample:5", "--seed", "1",
    ]);
    assert!(piped.status.success());
    assert_eq!(String::from_utf8(piped.stdout).unwrap(), text);
}

#[test]
fn advise_table() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), &ConvACSpec::deep(8, 2, vec![3, 5, 7], 1, 2).unwrap());
    let v = stdout_json(&tnarch(&["advise", "--spec", &spec, "--feature-size", "1", "--json"]));
    assert_eq!(v["bounding_layers"], serde_json::json!(["M", "r_0"]));
    assert!(!v["table"].as_array().unwrap().is_empty());
    let bad = tnarch(&["advise", "--spec", &spec, "--xi", "5"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn contract_network_and_weights_tensor() {
    let dir = tempfile::tempdir().unwrap();
    let spec = ConvACSpec::deep(4, 2, vec![2, 3], 1, 2).unwrap();
    let w = random_weights(&spec, 3).unwrap();
    let tn_path = dir.path().join("tn.json");
    std::fs::write(&tn_path, serde_json::to_string(&build_tn(&spec, &w).unwrap()).unwrap()).unwrap();
    let v = stdout_json(&tnarch(&["contract", "--network", tn_path.to_str().unwrap(), "--json"]));
    assert_eq!(v["shape"], serde_json::json!([2, 2, 2, 2, 1]));

    let spec_path = write_spec(dir.path(), &spec);
    let t = stdout_json(&tnarch(&["contract", "--spec", &spec_path, "--seed", "3", "--class", "1", "--json"]));
    let want = weights_tensor(&spec, &w, 0).unwrap();
    let got: Vec<f64> = serde_json::from_value(t["data"].clone()).unwrap();
    for (a, b) in got.iter().zip(want.data()) {
        assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
    }

    let x = dir.path().join("x.json");
    std::fs::write(&x, r#"{"x": [[1,0],[0,1],[1,1],[0.5,2]]}"#).unwrap();
    let s = stdout_json(&tnarch(&[
        "contract", "--spec", &spec_path, "--seed", "3", "--input", x.to_str().unwrap(), "--json",
    ]));
    assert_eq!(s["scores"].as_array().unwrap().len(), 1);
}

#[test]
fn exit_codes() {
    let out = tnarch(&["analyze", "--bogus"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert_eq!(tnarch(&["--help"]).status.code(), Some(0));
    assert_eq!(tnarch(&["mincut", "--spec", "/nonexistent.json", "--partition", "1"]).status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), &n8());
    let out = tnarch(&["mincut", "--spec", &spec, "--partition", "1,9"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
}

#[test]
fn size_cap_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), &n8());
    let out = Command::new(env!("CARGO_BIN_EXE_tnarch"))
        .args(["contract", "--spec", &spec, "--json"])
        .env("TNARCH_SIZE_CAP", "100")
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("100"));
}
