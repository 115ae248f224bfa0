use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn zonopt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zonopt"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_json(dir: &Path, name: &str, value: &Value) -> String {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path.to_str().unwrap().to_string()
}

fn identity_net(dir: &Path) {
    write_json(dir, "identity.json", &json!({"layers": [{"weights": [[1.0]], "bias": [0.0]}]}));
}

fn small_nets(dir: &Path) {
    let hidden = json!({"weights": [[1.0, -0.5], [0.3, 0.8]], "bias": [0.1, -0.2]});
    write_json(
        dir,
        "a.json",
        &json!({"layers": [hidden, {"weights": [[1.0, -1.0]], "bias": [0.0]}]}),
    );
    write_json(
        dir,
        "b.json",
        &json!({"layers": [hidden, {"weights": [[1.0, -1.0]], "bias": [1.0]}]}),
    );
}

fn solve(dir: &Path, query: Value, extra: &[&str]) -> (Output, Option<Value>) {
    let q = write_json(dir, "query.json", &query);
    let out = dir.join("result.json");
    let mut args = vec!["solve", "--query", &q, "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let output = zonopt(&args);
    let result = fs::read_to_string(&out).ok().map(|t| serde_json::from_str(&t).unwrap());
    (output, result)
}

fn min_convex_query() -> Value {
    json!({
        "kind": "min-convex",
        "network": "identity.json",
        "objective": {"type": "affine", "a": [1.0], "b": 0.0},
        "input_set": {"hyperrectangle": {"center": [0.0], "radius": [1.0]}}
    })
}

#[test]
fn solve_min_convex_on_identity() {
    let dir = TempDir::new().unwrap();
    identity_net(dir.path());
    let (output, result) = solve(dir.path(), min_convex_query(), &[]);
    assert_eq!(output.status.code(), Some(0), "{}", String::from_utf8_lossy(&output.stderr));
    let r = result.unwrap();
    assert_eq!(r["status"], "optimal");
    let lower = r["lower_bound"].as_f64().unwrap();
    assert!(lower <= -1.0 + 1e-12 && lower >= -1.0 - 1e-4);
    assert!(r["gap"].as_f64().unwrap() <= 1e-4);
    for field in [
        "upper_bound",
        "witness_input",
        "witness_output",
        "iterations",
        "subproblems_expanded",
        "wall_time_seconds",
    ] {
        assert!(r.get(field).is_some(), "missing {field}");
    }
}

#[test]
fn iteration_cap_exits_two_with_bounds() {
    let dir = TempDir::new().unwrap();
    identity_net(dir.path());
    let mut q = min_convex_query();
    q["max_iterations"] = json!(1);
    let (output, result) = solve(dir.path(), q, &[]);
    assert_eq!(output.status.code(), Some(2));
    let r = result.unwrap();
    assert_eq!(r["status"], "max_iter");
    let (lo, hi) = (r["lower_bound"].as_f64().unwrap(), r["upper_bound"].as_f64().unwrap());
    assert!(lo <= -1.0 && hi >= -1.0 && hi - lo > 1e-4);
}

#[test]
fn trace_lines_have_five_fields() {
    let dir = TempDir::new().unwrap();
    identity_net(dir.path());
    let (output, _) = solve(dir.path(), min_convex_query(), &["--trace"]);
    let stdout = String::from_utf8(output.stdout).unwrap();
    let lines: Vec<&str> = stdout.lines().collect();
    assert!(lines.len() > 1);
    let mut last_lower = f64::NEG_INFINITY;
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 5, "{line}");
        let lower: f64 = fields[1].parse().unwrap();
        assert!(lower >= last_lower);
        last_lower = lower;
        fields[0].parse::<usize>().unwrap();
        fields[4].parse::<usize>().unwrap();
    }
}

#[test]
fn errors_exit_one() {
    let dir = TempDir::new().unwrap();
    let (output, result) = solve(dir.path(), min_convex_query(), &[]);
    assert_eq!(output.status.code(), Some(1));
    assert!(result.is_none());
    assert!(String::from_utf8_lossy(&output.stderr).contains("identity.json"));

    identity_net(dir.path());
    let mut q = min_convex_query();
    q["kind"] = json!("min-concave");
    let (output, _) = solve(dir.path(), q, &[]);
    assert_eq!(output.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&output.stderr).contains("net-diff"));
}

#[test]
fn results_are_deterministic() {
    let dir = TempDir::new().unwrap();
    small_nets(dir.path());
    let q = json!({
        "kind": "project",
        "network": "a.json",
        "target": [2.0],
        "norm": "l2",
        "input_set": {"box": {"low": [-1.0, -1.0], "high": [1.0, 1.0]}}
    });
    let (_, first) = solve(dir.path(), q.clone(), &[]);
    let (_, second) = solve(dir.path(), q, &[]);
    let strip = |mut v: Value| {
        v.as_object_mut().unwrap().remove("wall_time_seconds");
        v
    };
    assert_eq!(strip(first.unwrap()), strip(second.unwrap()));
}

#[test]
fn containment_verdict_in_result() {
    let dir = TempDir::new().unwrap();
    identity_net(dir.path());
    let q = json!({
        "kind": "polytope-contained",
        "network": "identity.json",
        "polytope": {"A": [[1.0]], "b": [0.5]},
        "input_set": {"hyperrectangle": {"center": [0.0], "radius": [1.0]}}
    });
    let (output, result) = solve(dir.path(), q, &[]);
    assert_eq!(output.status.code(), Some(0));
    let r = result.unwrap();
    assert_eq!(r["verdict"], "violated");
    assert!(r["witness_output"][0].as_f64().unwrap() > 0.5);
}

fn sweep_query(second: &str) -> Value {
    json!({
        "kind": "net-diff",
        "network1": "a.json",
        "network2": second,
        "norm": 1,
        "stop_gap": 0.1,
        "input_set": {"box": {"low": [0.0, 0.0], "high": [1.0, 1.0]}},
        "grid": {"dims": [0, 1], "low": [0.0, 0.0], "high": [1.0, 1.0], "cells": [2, 2]}
    })
}

fn run_sweep(dir: &Path, query: Value, out: &Path) -> Output {
    let q = write_json(dir, "sweep.json", &query);
    zonopt(&["sweep", "--query", &q, "--out", out.to_str().unwrap()])
}

fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn sweep_identical_networks_is_zero() {
    let dir = TempDir::new().unwrap();
    small_nets(dir.path());
    let out = dir.path().join("grid.csv");
    let output = run_sweep(dir.path(), sweep_query("a.json"), &out);
    assert_eq!(output.status.code(), Some(0), "{}", String::from_utf8_lossy(&output.stderr));
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("dim1_lo,dim1_hi,dim2_lo,dim2_hi,value,status\n"));
    let rows = rows(&text);
    assert_eq!(rows.len(), 4);
    for row in rows {
        assert_eq!(row[4].parse::<f64>().unwrap(), 0.0);
        assert_eq!(row[5], "optimal");
    }
}

#[test]
fn sweep_offset_networks_is_one() {
    let dir = TempDir::new().unwrap();
    small_nets(dir.path());
    let out = dir.path().join("grid.csv");
    run_sweep(dir.path(), sweep_query("b.json"), &out);
    let rows = rows(&fs::read_to_string(&out).unwrap());
    assert_eq!(rows.len(), 4);
    for row in rows {
        assert!((row[4].parse::<f64>().unwrap() - 1.0).abs() <= 0.1);
    }
}

#[test]
fn interrupted_sweep_resumes_to_identical_csv() {
    let dir = TempDir::new().unwrap();
    small_nets(dir.path());
    let full = dir.path().join("full.csv");
    run_sweep(dir.path(), sweep_query("b.json"), &full);
    let complete = fs::read_to_string(&full).unwrap();

    let partial = dir.path().join("partial.csv");
    let prefix: String = complete.lines().take(3).map(|l| format!("{l}\n")).collect();
    fs::write(&partial, prefix).unwrap();
    let output = run_sweep(dir.path(), sweep_query("b.json"), &partial);
    assert!(String::from_utf8_lossy(&output.stderr).contains("2 already present"));
    assert_eq!(fs::read_to_string(&partial).unwrap(), complete);
}

#[test]
fn selftest_passes_and_is_deterministic() {
    let a = zonopt(&["selftest", "--seed", "11"]);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stdout));
    let b = zonopt(&["selftest", "--seed", "11"]);
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.lines().filter(|l| l.starts_with("PASS")).count() >= 7);
}
