use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn ahlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ahlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn manifest(name: &str, body: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ahlab-cli-tests-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is one JSON document")
}

#[test]
fn curvature_on_flat_torus() {
    let m = manifest("flat.json", r#"{"type": "flat_torus"}"#);
    let out = ahlab(&["curvature", "--manifest", m.to_str().unwrap(), "--points", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["command"], "curvature");
    assert_eq!(r["manifest"]["type"], "flat_torus");
    assert_eq!(r["results"]["points"].as_array().unwrap().len(), 3);
    assert!(r["failures"].as_array().unwrap().is_empty());
    assert!(r["wall_time"].as_f64().unwrap() >= 0.0);
}

#[test]
fn malformed_manifest_is_a_usage_error() {
    let m = manifest("bad.json", r#"{"type": "klein_bottle"}"#);
    let out = ahlab(&["curvature", "--manifest", m.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let r = report(&out);
    assert!(r["diagnostics"][0]["message"].as_str().unwrap().starts_with("parse error"));
}

#[test]
fn missing_manifest_and_bad_flags() {
    let out = ahlab(&["curvature", "--manifest", "/nonexistent/ahlab.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(ahlab(&["bubble", "--check", "wobble"]).status.code(), Some(2));
    assert_eq!(ahlab(&["suite", "--only", "17"]).status.code(), Some(2));
}

#[test]
fn grid_minimization_off_torus_is_numerical() {
    let m = manifest("s6.json", r#"{"type": "cayley_s6"}"#);
    let out = ahlab(&["yamabe", "--manifest", m.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn failed_assertion_exits_one() {
    let m = manifest(
        "conformal.json",
        r#"{"type": "conformal", "factor": [{"freq": [0,0,0,0,0,0], "cos": 1.0}, {"freq": [0,1,0,0,0,0], "cos": 0.3}],
            "base": {"type": "compatible_torus", "seed": 3}}"#,
    );
    let path = m.to_str().unwrap();
    let ok = ahlab(&["conformal-check", "--manifest", path, "--points", "5"]);
    assert_eq!(ok.status.code(), Some(0));
    let strict = ahlab(&["conformal-check", "--manifest", path, "--points", "5", "--tol", "0"]);
    assert_eq!(strict.status.code(), Some(1));
    assert!(!report(&strict)["failures"].as_array().unwrap().is_empty());
}

#[test]
fn classify_reports_info_off_torus() {
    let m = manifest("s6c.json", r#"{"type": "cayley_s6"}"#);
    let out = ahlab(&["classify", "--manifest", m.to_str().unwrap(), "--points", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["results"]["verdicts"]["nearly_kahler"], true);
    assert!(r["diagnostics"].as_array().unwrap().iter().any(|d| d["level"] == "INFO"));
}

#[test]
fn bubble_checks_and_pretty_output() {
    let out = ahlab(&["--pretty", "bubble", "--n", "6", "--check", "cn"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("\n  \"command\": \"bubble\""));
    let out = ahlab(&["bubble", "--n", "8", "--check", "rates"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn report_file_matches_stdout() {
    let dir = std::env::temp_dir().join(format!("ahlab-cli-report-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let file = dir.join("report.json");
    let out = ahlab(&["--report", file.to_str().unwrap(), "bubble", "--check", "pde"]);
    assert_eq!(out.status.code(), Some(0));
    let written = std::fs::read_to_string(&file).unwrap();
    assert_eq!(written.trim(), String::from_utf8(out.stdout).unwrap().trim());
}

#[test]
fn suite_subset_prints_lines() {
    let out = ahlab(&["suite", "--only", "1,2"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    let lines = r["results"]["lines"].as_array().unwrap();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].as_str().unwrap().starts_with("criterion  1 PASS"));
}

fn shipped(name: &str) -> String {
    format!("{}/../../manifests/{name}", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn cayley_sphere_golden_values() {
    let out = ahlab(&["curvature", "--manifest", &shipped("cayley_s6.json"), "--points", "20"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    let points = r["results"]["points"].as_array().unwrap();
    assert_eq!(points.len(), 20);
    for p in points {
        assert!((p["scalar"].as_f64().unwrap() - 30.0).abs() <= 1e-8);
        assert!((p["star_scalar"].as_f64().unwrap() - 6.0).abs() <= 1e-8);
        assert!((p["s_j"].as_f64().unwrap() - 24.0).abs() <= 1e-8);
    }
}

#[test]
fn cn_quadrature_matches_closed_form() {
    let r = report(&ahlab(&["bubble", "--n", "6", "--check", "cn"]));
    let (q, c) = (r["results"]["quadrature"].as_f64().unwrap(), r["results"]["closed_form"].as_f64().unwrap());
    assert!((q - c).abs() <= 1e-6 * c);
}

#[test]
fn flat_torus_is_kahler() {
    let out = ahlab(&["classify", "--manifest", &shipped("flat_torus6.json")]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["results"]["verdicts"]["kahler"], true);
}

#[test]
fn conformal_check_on_shipped_manifest() {
    let out = ahlab(&["conformal-check", "--manifest", &shipped("conformal_flat.json"), "--points", "10"]);
    assert_eq!(out.status.code(), Some(0));
    let flat = ahlab(&["conformal-check", "--manifest", &shipped("flat_torus6.json")]);
    assert_eq!(flat.status.code(), Some(2));
}

#[test]
fn thread_count_does_not_change_results() {
    let m = shipped("sheared_almost_kahler.json");
    let one = report(&ahlab(&["--threads", "1", "curvature", "--manifest", &m, "--points", "4"]));
    let three = report(&ahlab(&["--threads", "3", "curvature", "--manifest", &m, "--points", "4"]));
    assert_eq!(one["results"], three["results"]);
}
