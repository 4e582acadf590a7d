use std::path::Path;
use std::process::{Command, Output};

fn nmlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nmlab")).args(args).output().expect("binary runs")
}

fn rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines().skip(1).map(|l| l.split(',').map(|v| v.parse().unwrap_or(f64::NAN)).collect()).collect()
}

fn simulate(model: &str, t_max: &str, dt: &str, extra: &[&str]) -> (Output, String) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    let mut args = vec!["simulate", "--model", model, "--t-max", t_max, "--dt", dt, "--output", path.to_str().unwrap()];
    args.extend_from_slice(extra);
    let out = nmlab(&args);
    let text = std::fs::read_to_string(&path).unwrap_or_default();
    (out, text)
}

#[test]
fn markovian_trajectory_is_all_zero() {
    let (out, csv) = simulate("dephasing-const", "5", "0.01", &[]);
    assert!(out.status.success());
    assert!(csv.starts_with("t,g,g_finite_eps,d_T,r_inc_rate,N_T,T_norm,R_cum\n"));
    let rows = rows(&csv);
    assert_eq!(rows.len(), 501);
    for r in &rows {
        assert!(r[1..].iter().all(|v| v.abs() <= 1e-9), "{r:?}");
    }
}

#[test]
fn eternal_trajectory_integrates_to_log_cosh() {
    let (out, csv) = simulate("eternal-nm", "3", "0.01", &["--mode", "exact-limit"]);
    assert!(out.status.success());
    let last = rows(&csv).pop().unwrap();
    assert!((last[0] - 3.0).abs() < 1e-12);
    assert!((last[5] - 3f64.cosh().ln()).abs() < 1e-3, "{last:?}");
    assert!(last[2].is_nan(), "finite column is empty in exact-limit mode");
}

#[test]
fn dephasing_cumulative_robustness_reaches_two() {
    let (out, csv) = simulate("dephasing-sin", "6.2832", "0.001", &[]);
    assert!(out.status.success());
    let rows = rows(&csv);
    let last = rows.last().unwrap();
    assert!((last[7] - 2.0).abs() <= 2e-3, "{last:?}");
    assert!(rows.iter().all(|r| r[3] >= r[1] - 1e-6), "d_T >= g on every row");
}

#[test]
fn output_is_deterministic_across_runs_and_thread_counts() {
    let (_, a) = simulate("random-kossakowski", "2", "0.05", &["--seed", "3"]);
    let (_, b) = simulate("random-kossakowski", "2", "0.05", &["--seed", "3"]);
    assert_eq!(a, b);
    let out = Command::new(env!("CARGO_BIN_EXE_nmlab"))
        .env("NMLAB_THREADS", "1")
        .args(["simulate", "--model", "random-kossakowski", "--t-max", "2", "--dt", "0.05", "--seed", "3"])
        .output()
        .unwrap();
    assert_eq!(String::from_utf8(out.stdout).unwrap(), a);
    let (_, c) = simulate("random-kossakowski", "2", "0.05", &["--seed", "4"]);
    assert_ne!(a, c);
}

#[test]
fn finite_eps_column_converges_linearly() {
    let g_at = |eps: &str| {
        let out = nmlab(&["measure", "--model", "eternal-nm", "--t", "1.5", "--eps", eps, "--mode", "both"]);
        let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        (v["g"].as_f64().unwrap(), v["g_finite_eps"].as_f64().unwrap())
    };
    let (g, f1) = g_at("2e-3");
    let (_, f2) = g_at("1e-3");
    let ratio = (f1 - g).abs() / (f2 - g).abs();
    assert!((1.7..2.3).contains(&ratio), "halving eps scaled the error by {ratio}");
}

#[test]
fn measure_examples() {
    let json = |args: &[&str]| -> serde_json::Value {
        let out = nmlab(args);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        serde_json::from_slice(&out.stdout).unwrap()
    };
    let v = json(&["measure", "--model", "dephasing-sin", "--t", &(1.5 * std::f64::consts::PI).to_string()]);
    assert!((v["g"].as_f64().unwrap() - 2.0).abs() <= 1e-6);
    assert!((v["d_T"].as_f64().unwrap() - 2.0).abs() <= 1e-3);
    for key in ["t", "g_finite_eps", "r_inc_rate", "N_T", "T_norm", "R_cum", "report"] {
        assert!(v.get(key).is_some(), "{key} missing");
    }

    let v = json(&["measure", "--model", "dephasing-sin", "--t", &(0.5 * std::f64::consts::PI).to_string(), "--mode", "exact-limit"]);
    for key in ["g", "d_T", "r_inc_rate", "N_T", "R_cum"] {
        assert!(v[key].as_f64().unwrap().abs() <= 1e-9, "{key} = {}", v[key]);
    }

    let v = json(&["measure", "--model", "eternal-nm", "--t", "1"]);
    assert!((v["g"].as_f64().unwrap() - 0.7616).abs() <= 1e-4);
}

#[test]
fn model_files_are_accepted_and_validated() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, text: &str| {
        let p = dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        p
    };
    let good = write(
        "deph.json",
        r#"{"schema": 1, "dim": 2, "hamiltonian": null,
            "terms": [{"matrix": [[[1,0],[0,0]],[[0,0],[-1,0]]], "rate": {"kind": "constant", "value": -0.5}}]}"#,
    );
    let out = nmlab(&["measure", "--model", good.to_str().unwrap(), "--t", "0.3"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["g"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert!((v["d_T"].as_f64().unwrap() - 1.0).abs() < 1e-6);

    let bad = write("bad.json", r#"{"schema": 1, "dim": 2, "hamiltonian": null, "terms": [{"matrix": [[[1]]]}]}"#);
    let out = nmlab(&["measure", "--model", bad.to_str().unwrap(), "--t", "0.3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("parse error"));

    assert_eq!(nmlab(&["measure", "--model", "missing.json", "--t", "1"]).status.code(), Some(2));
    assert!(!Path::new("missing.json").exists());
}

#[test]
fn verify_theorem_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let out = nmlab(&["verify", "--suite", "theorem1", "--seed", "7", "--output", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(v["suite"], "theorem1");
    assert_eq!(v["passed"], true);
    assert!(v["properties"].as_array().unwrap().iter().all(|p| p["passed"] == true));
}

#[test]
fn unknown_suite_is_a_usage_error() {
    assert_eq!(nmlab(&["verify", "--suite", "everything"]).status.code(), Some(2));
}
