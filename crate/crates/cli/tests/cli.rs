use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_circle-lie"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn scratch(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("circle-lie-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

#[test]
fn analyze_sin_has_two_simple_zeros() {
    let out = run(&["analyze", "sin(t)"]);
    assert_eq!(code(&out), 0);
    let v = &json(&out)["v"];
    assert_eq!(v["count"], 2);
    let points = v["points"].as_array().unwrap();
    assert!(points.iter().all(|p| p["degenerate"] == false));
    let thetas: Vec<f64> = points.iter().map(|p| p["theta"].as_f64().unwrap()).collect();
    assert!(thetas[0].abs() < 1e-9);
    assert!((thetas[1] - std::f64::consts::PI).abs() < 1e-9);
}

#[test]
fn analyze_marks_degenerate_zeros() {
    let out = run(&["analyze", "1-cos(2*t)"]);
    assert_eq!(code(&out), 0);
    let v = &json(&out)["v"];
    assert_eq!(v["count"], 2);
    assert!(v["points"].as_array().unwrap().iter().all(|p| p["degenerate"] == true));
}

#[test]
fn analyze_with_w_reports_validation() {
    let out = run(&["analyze", "sin(t)", "1-cos(t)"]);
    assert_eq!(code(&out), 0);
    let doc = json(&out);
    assert_eq!(doc["validation"]["overall"], true);
    assert!(doc["bracket_residual"].as_f64().unwrap() < 1e-12);
}

#[test]
fn bare_theta_is_an_input_error() {
    let out = run(&["analyze", "t"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("offset 0"));
}

#[test]
fn identically_zero_field_is_not_class_c() {
    let out = run(&["analyze", "0"]);
    assert_eq!(code(&out), 3);
}

#[test]
fn reduce_canonical_input() {
    let out = run(&["reduce", "sin(t)", "1-cos(t)"]);
    assert_eq!(code(&out), 0);
    let doc = json(&out);
    assert_eq!(doc["pair"]["n"], 1);
    assert!(doc["pair"]["lambda"][0].as_f64().unwrap().abs() < 1e-9);
    assert_eq!(doc["pair"]["sigma"], serde_json::json!([1]));
    assert!(doc["residuals"]["w"].as_f64().unwrap() < 1e-6);
}

#[test]
fn reduce_through_a_map_file() {
    let map = scratch(
        "map.json",
        r#"{"kind": "compose", "outer": {"kind": "rotation", "angle": 0.9},
            "inner": {"kind": "perturbed", "eps": 0.3}}"#,
    );
    let out = run(&["reduce", "sin(t)", "1-cos(t)", "--map", map.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let doc = json(&out);
    assert_eq!(doc["pair"]["n"], 1);
    assert!(doc["pair"]["lambda"][0].as_f64().unwrap().abs() < 1e-6);
    assert!((doc["pair"]["rotation"].as_f64().unwrap() - 0.9).abs() < 1e-9);
}

#[test]
fn reduce_rejects_a_non_realization() {
    assert_eq!(code(&run(&["reduce", "sin(t)", "cos(t)"])), 4);
}

#[test]
fn reduce_csv_samples_the_map() {
    let out = run(&["reduce", "sin(t)", "1-cos(t)", "--format", "csv", "--resolution", "64"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("theta,f"));
    assert_eq!(lines.count(), 64);
}

#[test]
fn commutant_builds_an_independent_field() {
    let out = run(&["commutant", "1-cos(2*t)", "--lambda", "1,-2"]);
    assert_eq!(code(&out), 0);
    let doc = json(&out);
    assert_eq!(doc["dependent"], false);
    assert!(doc["bracket_residual"].as_f64().unwrap() < 1e-9);
}

#[test]
fn commutant_exit_codes() {
    assert_eq!(code(&run(&["commutant", "1-cos(2*t)", "--lambda", "1"])), 2);
    assert_eq!(code(&run(&["commutant", "1-cos(2*t)", "--lambda", "1,0"])), 2);
    assert_eq!(code(&run(&["commutant", "1-cos(2*t)", "--lambda", "3,3"])), 0);
    assert_eq!(code(&run(&["commutant", "1-cos(2*t)", "--lambda", "3,3", "--strict"])), 6);
}

#[test]
fn verify_from_a_pair_file() {
    let pair = scratch("pair.json", r#"{"n": 2, "lambda": [0.5, -1.0], "sigma": [1, -1]}"#);
    let out = run(&["verify", "--pair", pair.to_str().unwrap(), "--maps", "4", "--seed", "7"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let doc = json(&out);
    assert_eq!(doc["validation"]["overall"], true);
    assert_eq!(doc["invariance"]["checks"].as_array().unwrap().len(), 4);
}

#[test]
fn verify_fails_on_sin_cos() {
    let out = run(&["verify", "sin(t)", "cos(t)", "--maps", "2"]);
    assert_eq!(code(&out), 4);
    assert_eq!(json(&out)["validation"]["overall"], false);
}

#[test]
fn sample_eight_points() {
    let out = run(&["sample", "sin(t)", "--resolution", "8"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "theta,value");
    assert_eq!(lines.len(), 9);
    assert!(lines[1].starts_with("0,0"));
}

#[test]
fn sample_a_pair() {
    let pair = scratch("sample-pair.json", r#"{"n": 1, "lambda": [2.0], "sigma": [-1]}"#);
    let out = run(&["sample", "--pair", pair.to_str().unwrap(), "--resolution", "4"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "theta,v,w");
    assert_eq!(lines.len(), 5);
    // θ = π: v = sin π + 2(1 - cos π), w = -(1 - cos π)
    let cols: Vec<f64> = lines[3].split(',').map(|c| c.parse().unwrap()).collect();
    assert!((cols[1] - 4.0).abs() < 1e-12 && (cols[2] + 2.0).abs() < 1e-12);
}

#[test]
fn zero_resolution_is_an_input_error() {
    assert_eq!(code(&run(&["sample", "sin(t)", "--resolution", "0"])), 2);
    assert_eq!(code(&run(&["analyze", "sin(t)", "--resolution", "16"])), 2);
}

#[test]
fn out_flag_writes_a_file() {
    let dir = std::env::temp_dir().join(format!("circle-lie-cli-out-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("r.json");
    let out = run(&["reduce", "sin(t)", "1-cos(t)", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(doc["pair"]["n"], 1);
}
