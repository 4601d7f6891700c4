use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn syncgrid(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_syncgrid")).args(args).current_dir(dir).output().expect("binary runs")
}

fn ok(args: &[&str], dir: &Path) -> String {
    let out = syncgrid(args, dir);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn json(text: &str) -> Value {
    serde_json::from_str(text).unwrap()
}

fn path_graph(dir: &Path) {
    fs::write(dir.join("g.json"), r#"{"n": 3, "edges": [[1, 2, 1.0], [2, 3, 2.0]]}"#).unwrap();
    fs::write(dir.join("g.csv"), "i,j,weight\n2,3,2.0\n1,2,1.0\n").unwrap();
    fs::write(dir.join("w.csv"), "omega\n0.4\n0\n-0.4\n").unwrap();
}

#[test]
fn analyze_path_graph() {
    let dir = tempfile::tempdir().unwrap();
    path_graph(dir.path());
    let v = json(&ok(&["analyze", "--graph", "g.json", "--omega", "w.csv", "--gamma", "0.5"], dir.path()));
    assert_eq!(v["kind"], "analyze");
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["topology"], "tree");
    // flows 0.4 on both edges, divided by the weights
    assert_eq!(v["margin"], 0.4);
    assert_eq!(v["psi"][1]["psi"], 0.2);
    assert_eq!(v["condition_holds"], true);
    let csv = json(&ok(&["analyze", "--graph", "g.csv", "--omega", "w.csv", "--gamma", "0.5"], dir.path()));
    assert_eq!(csv, v);
}

#[test]
fn nonzero_mean_frequencies_are_recentred() {
    let dir = tempfile::tempdir().unwrap();
    path_graph(dir.path());
    fs::write(dir.path().join("shifted.csv"), "1,1.4\n2,1.0\n3,0.6\n").unwrap();
    let a = json(&ok(&["analyze", "--graph", "g.json", "--omega", "w.csv"], dir.path()));
    let b = json(&ok(&["analyze", "--graph", "g.json", "--omega", "shifted.csv"], dir.path()));
    assert_eq!(a["margin"], b["margin"]);
}

#[test]
fn solve_and_kcritical() {
    let dir = tempfile::tempdir().unwrap();
    path_graph(dir.path());
    let v = json(&ok(&["solve", "--graph", "g.json", "--omega", "w.csv"], dir.path()));
    assert_eq!(v["stable"], true);
    assert!((v["cohesiveness"].as_f64().unwrap() - 0.4f64.asin()).abs() < 1e-10);
    let k = json(&ok(&["kcritical", "--graph", "g.json", "--omega", "w.csv"], dir.path()));
    assert_eq!(k["k_min"], 0.4);
    assert_eq!(k["ratio"], 1.0);
}

#[test]
fn gen_then_simulate() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["gen", "--model", "erg", "--n", "8", "--p", "0.5", "--alpha", "2", "--seed", "9", "--out", "net.json"];
    ok(&args, dir.path());
    let first = fs::read(dir.path().join("net.json")).unwrap();
    ok(&args, dir.path());
    assert_eq!(first, fs::read(dir.path().join("net.json")).unwrap());
    let net = json(&String::from_utf8(first).unwrap());
    assert!(net["margin"].as_f64().unwrap() < 1.0);

    ok(&["simulate", "--net", "net.json", "--t-end", "0.5", "--step", "0.01", "--out", "traj.csv"], dir.path());
    let traj = fs::read_to_string(dir.path().join("traj.csv")).unwrap();
    let mut lines = traj.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("t,theta_1,"));
    assert!(header.ends_with(",thetadot_8"));
    assert_eq!(header.split(',').count(), 17);
    assert_eq!(lines.count(), 51);
}

#[test]
fn powerflow_on_bundled_case() {
    let dir = tempfile::tempdir().unwrap();
    let dc = json(&ok(&["powerflow", "--case", "case9", "--mode", "dc"], dir.path()));
    assert!((dc["max_angle_diff"].as_f64().unwrap() - dc["margin"].as_f64().unwrap()).abs() < 1e-10);
    let ac = json(&ok(&["powerflow", "--case", "case9", "--mode", "ac"], dir.path()));
    assert_eq!(ac["status"], "converged");
    let strict = syncgrid(&["powerflow", "--case", "case9", "--strict"], dir.path());
    assert!(!strict.status.success());
}

#[test]
fn contingency_scan_file() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["contingency", "--case", "rts96", "--trip", "gen:323", "--ramp", "southeast", "--max-loading", "0.2", "--loading-step", "0.1", "--out", "scan.csv"];
    ok(&args, dir.path());
    let text = fs::read_to_string(dir.path().join("scan.csv")).unwrap();
    assert!(text.contains("\"limiting_line\":\"121-325\""));
    assert!(text.contains("loading,margin,predicted_angle,max_line_ratio\n0,"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 4);
}

#[test]
fn montecarlo_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("cells.json"), r#"[{"n": 8, "model": "erg", "p": 0.4, "alpha": 4}]"#).unwrap();
    let args = ["montecarlo", "--cells", "cells.json", "--samples", "10", "--seed", "3", "--out", "t.json"];
    ok(&args, dir.path());
    let a = fs::read(dir.path().join("t.json")).unwrap();
    ok(&args, dir.path());
    assert_eq!(a, fs::read(dir.path().join("t.json")).unwrap());
    let v = json(&String::from_utf8(a).unwrap());
    assert_eq!(v["seed"], 3);
    assert_eq!(v["rows"][0]["samples"], 10);
}

#[test]
fn accuracy_writes_group_files() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["accuracy", "--models", "smn", "--dists", "bipolar", "--sizes", "6", "--p", "0.5", "--samples", "2", "--out", "fig.csv"], dir.path());
    let group = fs::read_to_string(dir.path().join("fig_smn_bipolar.csv")).unwrap();
    assert!(group.contains("\np,n,mean_ratio\n0.5,6,"));
    assert!(dir.path().join("fig.csv").exists());
}

#[test]
fn bad_input_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.json"), r#"{"n": 2, "edges": [[1, 3, 1.0]]}"#).unwrap();
    fs::write(dir.path().join("w.csv"), "0\n0\n").unwrap();
    let out = syncgrid(&["analyze", "--graph", "bad.json", "--omega", "w.csv"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("outside"));
    let out = syncgrid(&["analyze", "--graph", "missing.json", "--omega", "w.csv"], dir.path());
    assert!(!out.status.success());
}
