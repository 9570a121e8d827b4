use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn run(args: &[&str], config: &Value, out: &Path) -> Output {
    let cfg_path = out.with_extension("json");
    fs::write(&cfg_path, serde_json::to_string(config).unwrap()).unwrap();
    Command::new(env!("CARGO_BIN_EXE_dgbo"))
        .args(args)
        .arg("--config")
        .arg(&cfg_path)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn summary(out: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap()
}

fn simulation(alpha: f64, poly: &[f64]) -> Value {
    json!({
        "grid": { "num_modes": 16, "dealias_fraction": 0.5 },
        "sym": { "kind": "fractional", "alpha": alpha },
        "poly": { "coefficients": poly },
        "gauged": false,
        "dt": 1e-3,
        "t_end": 0.05,
        "snapshot_stride": 5,
        "dealias": "auto",
        "initial": { "kind": "analytic", "amp": 0.5, "decay": 0.5 },
    })
}

#[test]
fn lemma_check_is_clean() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("lc");
    let cfg = json!({ "schema_version": 1, "lemma_check": { "trials": 1000 } });
    let o = run(&["lemma-check", "--seed", "42"], &cfg, &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(&out);
    assert_eq!(s["pass"], json!(true));
    assert_eq!(s["provenance"]["seed"], json!(42));
    for check in ["zero_sum", "multiset", "max_equiv"] {
        assert_eq!(s["residuals"][check]["violations"], json!(0));
    }
    assert_eq!(s["provenance"]["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn alpha_outside_range_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bad");
    let cfg = json!({ "schema_version": 1, "simulation": simulation(2.5, &[0.0, 1.0]) });
    let o = run(&["simulate"], &cfg, &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
}

#[test]
fn malformed_configs_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        json!({ "schema_version": 9, "lemma_check": { "trials": 1 } }),
        json!({ "schema_version": 1, "lemma_chekc": { "trials": 1 } }),
        json!({ "schema_version": 1 }),
    ];
    for (i, cfg) in cases.iter().enumerate() {
        let o = run(&["lemma-check"], cfg, &dir.path().join(format!("c{i}")));
        assert_eq!(o.status.code(), Some(2), "case {i}");
    }
}

#[test]
fn free_evolution_keeps_mass_constant() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("free");
    let cfg = json!({ "schema_version": 1, "simulation": simulation(1.5, &[0.0]) });
    let o = run(&["simulate"], &cfg, &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("norms.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,mass,energy,h1"));
    let masses: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(masses.len(), 11);
    for m in &masses {
        assert!((m - masses[0]).abs() <= 1e-14 * masses[0], "{m} vs {}", masses[0]);
    }
    assert!(out.join("snapshots/000010.bin").exists());
}

#[test]
fn saved_trajectory_feeds_smoothing_and_normalform() {
    let dir = tempfile::tempdir().unwrap();
    let sim_out = dir.path().join("sim");
    let mut sim = simulation(1.5, &[0.0, 1.0]);
    sim["gauged"] = json!(true);
    let cfg = json!({
        "schema_version": 1,
        "simulation": sim,
        "smoothing": { "s": 1.0, "a_grid": [0.0, 0.5] },
        "normalform": { "depth_n": 1, "truncation_check": false, "max_residual": 1e-3 },
    });
    assert_eq!(run(&["simulate"], &cfg, &sim_out).status.code(), Some(0));
    let traj = sim_out.to_str().unwrap();

    let out = dir.path().join("sm");
    let o = run(&["smoothing", "--trajectory", traj], &cfg, &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("smoothing.csv")).unwrap();
    assert!(csv.starts_with("t,diff_a0,free_a0,diff_a0.5,free_a0.5,tail_gain\n"), "{csv}");
    assert_eq!(csv.lines().count(), 12);

    let out = dir.path().join("nf");
    let o = run(&["normalform", "--trajectory", traj], &cfg, &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(summary(&out)["residuals"]["max_identity_residual"].as_f64().unwrap() < 1e-3);

    let mut strict = cfg.clone();
    strict["normalform"]["max_residual"] = json!(0.0);
    let o = run(&["normalform", "--trajectory", traj], &strict, &dir.path().join("nf0"));
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn counterexample_and_scan() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ce");
    let cfg = json!({
        "schema_version": 1,
        "counterexample": { "n_list": [16, 64, 256], "s": 0.0, "a": 1.0, "sym": { "kind": "fractional", "alpha": 2.0 } },
        "scan": {
            "requests": [{ "lemma": "L2_2", "range": 12 }],
            "syms": [{ "kind": "fractional", "alpha": 1.5 }],
        },
    });
    let o = run(&["counterexample"], &cfg, &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(&out);
    assert!(s["fitted_exponents"]["fitted"].is_f64());
    assert_eq!(fs::read_to_string(out.join("counterexample.csv")).unwrap().lines().count(), 4);

    let out = dir.path().join("scan");
    let o = run(&["scan", "--threads", "2"], &cfg, &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(summary(&out)["pass"], json!(true));
}
