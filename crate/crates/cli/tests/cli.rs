use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const STATIONARY: &str = r#"{
  "model": {
    "kernel": {"family": "zero"},
    "weights": {"law": "deterministic", "w": 1.0},
    "psi": {"phi": "constant", "c": 1.0},
    "initial": {"age0": "exponential", "rate": 1.0},
    "past": {"mode": "zero"}
  },
  "experiment": {"theta": 5.0, "dx": 0.001}
}"#;

const REFRACTORY: &str = r#"{
  "model": {
    "kernel": {"family": "exponential", "alpha": 0.5, "beta": 2.0},
    "weights": {"law": "deterministic", "w": 1.0},
    "psi": {"phi": "clipped_affine", "mu": 0.5, "slope": 1.0, "cap": 2.0, "delta": 0.1},
    "initial": {"age0": "exponential", "rate": 1.0},
    "past": {"mode": "zero"}
  },
  "experiment": {"theta": 5.0, "dx": 0.001, "w1_times": [2.5, 5.0], "audit": true}
}"#;

const OUTSIDE: &str = r#"{
  "model": {
    "kernel": {"family": "exponential", "alpha": 0.5, "beta": 2.0},
    "weights": {"law": "deterministic", "w": 1.0},
    "psi": {"phi": "affine", "mu": 1.0, "slope": 1.0, "delta": 0.2},
    "initial": {"age0": "exponential", "rate": 1.0},
    "past": {"mode": "zero"}
  }
}"#;

fn adrhp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_adrhp")).args(args).output().expect("binary runs")
}

fn config(dir: &TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn out_dir(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_string_lossy().into_owned()
}

fn summary(out: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(Path::new(out).join("summary.json")).unwrap()).unwrap()
}

fn column(out: &str, file: &str, col: usize) -> Vec<f64> {
    let mut r = csv::Reader::from_path(Path::new(out).join(file)).unwrap();
    r.records().map(|rec| rec.unwrap()[col].parse().unwrap()).collect()
}

#[test]
fn couple_is_byte_identical_for_a_seed() {
    let d = TempDir::new().unwrap();
    let c = config(&d, "c.json", REFRACTORY);
    let (a, b) = (out_dir(&d, "a"), out_dir(&d, "b"));
    for (o, jobs) in [(&a, "1"), (&b, "4")] {
        let r = adrhp(&["couple", "--config", &c, "--n", "64", "--replicas", "32", "--seed", "7", "--out", o, "--jobs", jobs]);
        assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    }
    let fa = fs::read(Path::new(&a).join("coupling.csv")).unwrap();
    let fb = fs::read(Path::new(&b).join("coupling.csv")).unwrap();
    assert_eq!(fa, fb);
    assert_eq!(fs::read(Path::new(&a).join("summary.json")).unwrap(), fs::read(Path::new(&b).join("summary.json")).unwrap());
    let header = String::from_utf8_lossy(&fa).lines().next().unwrap().to_string();
    assert_eq!(header, "n,replica,delta_n,age_gap,w1_age@2.5,w1_age@5");
    assert_eq!(String::from_utf8_lossy(&fa).lines().count(), 33);
}

#[test]
fn stationary_boundary_is_one() {
    let d = TempDir::new().unwrap();
    let c = config(&d, "stationary.json", STATIONARY);
    let o = out_dir(&d, "pde");
    let r = adrhp(&["solve-pde", "--config", &c, "--out", &o]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let u0 = column(&o, "boundary.csv", 1);
    assert_eq!(u0.len(), 5001);
    assert!(u0.iter().all(|v| (v - 1.0).abs() <= 10.0 * 1e-3));
    let mut rd = csv::Reader::from_path(Path::new(&o).join("density.csv")).unwrap();
    assert_eq!(rd.headers().unwrap(), vec!["t", "s", "u"]);
    assert!(summary(&o)["assumptions"]["h1"].as_bool().unwrap());
}

#[test]
fn sweep_slope_in_window() {
    let d = TempDir::new().unwrap();
    let c = config(&d, "refractory.json", REFRACTORY);
    let o = out_dir(&d, "sweep");
    let r = adrhp(&["sweep", "--config", &c, "--n", "8,16,32,64,128,256", "--replicas", "64", "--seed", "4", "--out", &o]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let s = summary(&o);
    let slope = s["slope"].as_f64().unwrap();
    assert!((-0.65..=-0.35).contains(&slope), "slope {slope}");
    assert!(s["slope_se"].as_f64().unwrap() > 0.0);
    assert!(s.get("beta_theta_bound").is_some());
    assert!(s["assumptions"]["assumptions"].as_array().unwrap().len() == 9);
}

#[test]
fn simulate_writes_events_and_audit() {
    let d = TempDir::new().unwrap();
    let c = config(&d, "c.json", REFRACTORY);
    let o = out_dir(&d, "sim");
    let r = adrhp(&["simulate", "--config", &c, "--n", "16", "--replicas", "3", "--out", &o]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let times = column(&o, "events.csv", 2);
    assert!(!times.is_empty() && times.iter().all(|t| *t > 0.0 && *t <= 5.0));
    let lam = column(&o, "audit.csv", 3);
    let env = column(&o, "audit.csv", 4);
    assert_eq!(lam.len(), times.len());
    assert!(lam.iter().zip(&env).all(|(l, e)| l <= e));
}

#[test]
fn limit_curve_export() {
    let d = TempDir::new().unwrap();
    let c = config(&d, "c.json", REFRACTORY);
    let o = out_dir(&d, "lim");
    let r = adrhp(&["limit", "--config", &c, "--dx", "0.01", "--out", &o]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let lam = column(&o, "mean_intensity.csv", 1);
    assert_eq!(lam.len(), 501);
    assert!(lam.iter().all(|l| (0.0..=2.0).contains(l)));
}

#[test]
fn outside_both_regimes_is_a_hypothesis_error() {
    let d = TempDir::new().unwrap();
    let c = config(&d, "c.json", OUTSIDE);
    let o = out_dir(&d, "v");
    let r = adrhp(&["validate", "--config", &c, "--out", &o]);
    assert_eq!(r.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&r.stderr).contains("outside both regimes"));
    let report: Value = serde_json::from_slice(&r.stdout).unwrap();
    assert_eq!(report["h1"], Value::Bool(false));
    assert_eq!(report["h2"], Value::Bool(false));
    let r = adrhp(&["couple", "--config", &c, "--out", &o]);
    assert_eq!(r.status.code(), Some(3));
    let r = adrhp(&["solve-pde", "--config", &c, "--out", &o]);
    assert_eq!(r.status.code(), Some(3));
}

#[test]
fn malformed_config_is_a_config_error() {
    let d = TempDir::new().unwrap();
    let c = config(&d, "bad.json", "{\n \"model\": {\"kernel\": 3\n");
    let r = adrhp(&["validate", "--config", &c]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("line"));
    let r = adrhp(&["validate", "--config", "/nonexistent/config.json"]);
    assert_eq!(r.status.code(), Some(2));
}
