//! End-to-end tests of the `toda` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const SAMPLE: &str = r#"{
  "n_modes": 32,
  "x_modes": 16,
  "lambda": [{"k": 1, "re": 1.0}, {"k": 0, "re": 0.1}],
  "lambdabar": [{"k": -1, "re": 0.25}],
  "x_modulation": [{"m": 1, "k": 0, "re": 0.05}]
}"#;

fn toda(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_toda")).args(args).output().expect("binary runs")
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn strip_runtimes(mut v: Value) -> Value {
    for r in v["records"].as_array_mut().unwrap() {
        r.as_object_mut().unwrap().remove("runtime_ms");
    }
    v
}

#[test]
fn sample_point_is_in_m0() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "sample.json", SAMPLE);
    let out = toda(&["validate", arg(&cfg)]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["in_M1"], true);
    assert_eq!(v["in_M0"], true);
    assert_eq!(v["slices"].as_array().unwrap().len(), 16);
}

#[test]
fn zero_lambdabar_is_not_in_m1() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "zero.json", r#"{"n_modes": 16, "x_modes": 4, "lambda": [{"k": 0, "re": 0.1}], "lambdabar": []}"#);
    let out = toda(&["validate", arg(&cfg)]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["in_M1"], false);
}

#[test]
fn malformed_json_is_a_parse_error_with_line() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "bad.json", "{\n  \"n_modes\": 16,\n  \"lambda\": [,\n}");
    let out = toda(&["validate", arg(&cfg)]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn missing_file_is_an_io_error() {
    let out = toda(&["validate", "/nonexistent/point.json"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn zs_on_a_point_outside_m1_is_a_precondition_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "zero.json", r#"{"n_modes": 16, "x_modes": 4, "lambda": [], "lambdabar": []}"#);
    let out = toda(&["check", "zs", arg(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not in M1"));
}

#[test]
fn metric_suite_passes_on_the_sample_point() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "sample.json", SAMPLE);
    let out = toda(&["check", "metric", arg(&cfg)]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["pass"], true);
    assert!(v["records"].as_array().unwrap().iter().any(|r| r["name"] == "gram_row"));
}

#[test]
fn levelt_suite_passes_at_zeta_03() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "sample.json", SAMPLE);
    let out = toda(&["check", "levelt", arg(&cfg), "--zeta", "0.3+0.0i"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let v = json(&out);
    let rec = v["records"].as_array().unwrap().iter().find(|r| r["name"] == "levelt_factorization").unwrap();
    assert!(rec["residual"].as_f64().unwrap() < 1e-8);
    assert!(v["info"]["window_leakage"].is_number());
}

#[test]
fn impossible_tolerance_gives_exit_1() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "sample.json", SAMPLE);
    let out = toda(&["check", "metric", arg(&cfg), "--tol", "1e-300"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["pass"], false);
}

#[test]
fn reports_are_deterministic_given_the_seed() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "sample.json", SAMPLE);
    let run = |seed: &str| strip_runtimes(json(&toda(&["check", "flatness", arg(&cfg), "--window", "3", "--seed", seed])));
    let a = run("7");
    assert_eq!(a["seed"], 7);
    assert_eq!(a, run("7"));
    assert_ne!(a, run("8"));
}

#[test]
fn evolve_for_zero_time_is_byte_identical() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "sample.json", SAMPLE);
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for out in [&a, &b] {
        let o = toda(&["evolve", arg(&cfg), "--flow", "v,1", "--time", "0", "--dt", "1e-3", "--out", arg(out)]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    // The snapshot loads back and reproduces itself.
    let c = dir.path().join("c.json");
    let o = toda(&["evolve", arg(&a), "--flow", "v,1", "--time", "0", "--dt", "1e-3", "--out", arg(&c)]);
    assert_eq!(o.status.code(), Some(0));
    let (sa, sc): (Value, Value) =
        (serde_json::from_slice(&std::fs::read(&a).unwrap()).unwrap(), serde_json::from_slice(&std::fs::read(&c).unwrap()).unwrap());
    assert_eq!(sa["lambda"], sc["lambda"]);
    assert_eq!(sa["lambdabar"], sc["lambdabar"]);
}

#[test]
fn v0_flow_conserves_every_hamiltonian() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "sample.json", SAMPLE);
    let out = dir.path().join("snap.json");
    let o = toda(&["evolve", arg(&cfg), "--flow", "v,0", "--time", "0.1", "--dt", "0.01", "--out", arg(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = json(&o);
    assert!(summary["max_drift"].as_f64().unwrap() < 1e-8, "{summary}");
    assert_eq!(summary["drift"].as_array().unwrap().len(), 10);
}

#[test]
fn u0_flow_conserves_h_v1() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "sample.json", SAMPLE);
    let out = dir.path().join("snap.json");
    let o = toda(&["evolve", arg(&cfg), "--flow", "u,0", "--time", "0.02", "--dt", "0.005", "--out", arg(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = json(&o);
    let entry = summary["drift"].as_array().unwrap().iter().find(|d| d["index"] == "v,1").unwrap().clone();
    assert!(entry["drift"].as_f64().unwrap() < 1e-7, "{entry}");
}

#[test]
fn unknown_flow_index_is_an_argument_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "sample.json", SAMPLE);
    let out = dir.path().join("snap.json");
    let o = toda(&["evolve", arg(&cfg), "--flow", "w,0", "--time", "0.1", "--out", arg(&out)]);
    assert_eq!(o.status.code(), Some(2));
}
