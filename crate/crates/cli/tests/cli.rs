use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cubicwave")).args(args).output().expect("binary runs")
}

fn json_file(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn solve_q_prints_root() {
    let o = run(&["solve-q"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let q = v["q"].as_f64().unwrap();
    assert!((q - 0.014214).abs() < 1e-6);
    assert!(v["residual"].as_f64().unwrap() <= 1e-13);
    let b = v["bracket"].as_array().unwrap();
    assert!(b[0].as_f64().unwrap() <= q && q <= b[1].as_f64().unwrap());
    assert_eq!(v["config"]["subcommand"], "solve-q");
}

#[test]
fn usage_errors_exit_2() {
    for args in [&["solve", "--bogus"][..], &["nope"], &["solve"], &["solve", "--k", "abc"]] {
        let o = run(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn library_errors_exit_1() {
    let o = run(&["build-approx", "--k", "0"]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["solve", "--k", "1000", "--max-iter", "2"]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["timecheck", "--in", "/nonexistent/file.json"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn build_approx_writes_field_schema() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("uk.json");
    let o = run(&["build-approx", "--k", "100", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v = json_file(&out);
    assert_eq!(v["rho"], "1001/1000");
    assert!(v["tail"].as_f64().unwrap() >= 0.0);
    let modes = v["modes"].as_array().unwrap();
    let keys: Vec<(u64, u64)> = modes.iter().map(|m| (m["m"].as_u64().unwrap(), m["n"].as_u64().unwrap())).collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    assert_eq!(v["config"]["k"], 100);
    assert!(v["q"].is_f64());
}

#[test]
fn solve_then_timecheck_and_export() {
    let dir = tempfile::tempdir().unwrap();
    let sol = dir.path().join("sol.json");
    let o = run(&["solve", "--k", "1000", "--out", sol.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json_file(&sol);
    for key in ["k", "omega", "iterations", "contraction", "pde_residual", "distance_to_uk", "u", "q", "config"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert!(v["pde_residual"].as_f64().unwrap() <= 1e-12);

    let o = run(&["timecheck", "--in", sol.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let t: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(t["return_error"].as_f64().unwrap() <= 1e-4);
    assert!(t["energy_drift"].as_f64().unwrap() <= 1e-6);

    let csv = dir.path().join("grid.csv");
    let o = run(&["export-grid", "--in", sol.to_str().unwrap(), "--ntau", "5", "--nx", "4", "--out", csv.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("tau,x,u"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|s| s.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 20);
    // Row-major in τ.
    assert_eq!(rows[0][0], 0.0);
    assert_eq!(rows[3][0], 0.0);
    assert!(rows[4][0] > 0.0);
    assert!((rows[19][0] - 2.0 * std::f64::consts::PI).abs() < 1e-12);
    for r in &rows {
        if r[1] == 0.0 {
            assert_eq!(r[2], 0.0);
        }
    }
    let side = json_file(&dir.path().join("grid.csv.config.json"));
    assert_eq!(side["config"]["subcommand"], "export-grid");
}

#[test]
fn export_grid_matches_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("f.json");
    std::fs::write(&f, r#"{"rho":"1001/1000","tail":0.0,"modes":[{"m":0,"n":0,"c":1.0},{"m":1,"n":2,"c":-0.5}]}"#).unwrap();
    let o = run(&["export-grid", "--in", f.to_str().unwrap(), "--ntau", "7", "--nx", "6"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    for line in text.lines().skip(1) {
        let r: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        let want = r[0].sin() * r[1].sin() - 0.5 * (3.0 * r[0]).sin() * (5.0 * r[1]).sin();
        assert!((r[2] - want).abs() < 1e-14);
    }
}

#[test]
fn timecheck_requires_frequency_for_bare_fields() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("f.json");
    std::fs::write(&f, r#"{"rho":"1001/1000","tail":0.0,"modes":[{"m":0,"n":0,"c":1e-6}]}"#).unwrap();
    assert_eq!(run(&["timecheck", "--in", f.to_str().unwrap(), "--nt", "2000"]).status.code(), Some(1));
    let o = run(&["timecheck", "--in", f.to_str().unwrap(), "--nt", "2000", "--k", "1000"]);
    let t: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(t["return_error"].is_f64());
}

#[test]
fn verify_bounds_all_pass_at_k_100() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bounds.json");
    let o = run(&["verify-bounds", "--k", "100", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json_file(&out);
    let arr = v.as_array().unwrap();
    assert!(!arr.is_empty());
    for r in arr {
        assert_eq!(r["pass"], true, "{}", r["name"]);
        assert_eq!(r["config"]["seed"], 20_240_517);
        assert!(r["q"].is_f64());
    }
}

#[test]
fn verify_bounds_fails_below_theorem_range() {
    let o = run(&["verify-bounds", "--theorem-k", "10000"]);
    assert_eq!(o.status.code(), Some(1));
}
