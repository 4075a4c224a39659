use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;
use sha2::{Digest, Sha256};

const SMALL: &str = "\
grid.n_half = 64
time.t_max_tau = 80
time.n_steps = 400
";

fn crowsim(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_crowsim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("run.conf");
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path).unwrap().lines().map(str::to_string).collect()
}

#[test]
fn dispersion_csv_layout() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = crowsim(&["dispersion", "--points", "11", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let l = lines(&out.join("dispersion.csv"));
    assert_eq!(l[0], "kD_over_pi,omega_re,gamma,Q,vg");
    assert_eq!(l.len(), 12);
    let mid: Vec<f64> = l[6].split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(mid[0], 0.5);
    assert!((mid[3] / 1.98e4 - 1.0).abs() < 0.01);
    // mantissa carries 12 significant digits
    assert_eq!(l[6].split(',').next().unwrap(), "5.00000000000e-1");
}

#[test]
fn sweep_is_deterministic_and_hashed() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for d in [&a, &b] {
        let o = crowsim(&["--config", &cfg, "--out", d.to_str().unwrap(), "sweep"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let rows = lines(&a.join("table1.csv"));
    assert_eq!(rows[0], "config,k0D_over_pi,n_max,dev,fwhm_tau");
    assert_eq!(rows.len(), 10);
    let order: Vec<&str> = rows[1..].iter().map(|r| r.split(',').next().unwrap()).collect();
    assert_eq!(order, ["A", "B", "C", "A", "B", "C", "A", "B", "C"]);
    assert!(rows[1].starts_with("A,5.00000000000e-1"));
    assert!(rows[4].starts_with("A,6.50000000000e-1"));

    for name in ["table1.csv", "manifest.json"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    let m = manifest(&a);
    let digest = hex::encode(Sha256::digest(fs::read(a.join("table1.csv")).unwrap()));
    assert_eq!(m["files"]["table1.csv"], Value::String(digest));
    assert_eq!(m["anomalous_sign"], serde_json::json!(1.0));
    assert_eq!(m["config"]["grid.n_half"], serde_json::json!(64));
    assert_eq!(m["command"], "sweep");
}

#[test]
fn sweep_subset() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("o");
    let o = crowsim(&[
        "sweep", "--configs", "B", "--k0", "0.35,0.65", "--config", &cfg, "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let rows = lines(&out.join("table1.csv"));
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("B,3.50000000000e-1"));
}

#[test]
fn default_grid_noted_in_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "pump.beta = 2.2\n");
    let out = tmp.path().join("o");
    let o = crowsim(&["--config", &cfg, "--out", out.to_str().unwrap(), "decompose", "--dump-phi", "--modes"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(&out);
    assert_eq!(m["config"]["grid.n_half"], serde_json::json!(512));
    let defaults: Vec<&str> = m["defaults_applied"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert!(defaults.contains(&"grid.n_half"));

    let s = lines(&out.join("schmidt.csv"));
    assert_eq!(s[0], "lambda,p,r");
    let p: Vec<f64> = s[1..].iter().map(|r| r.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-10);
    assert!(p.windows(2).all(|w| w[0] >= w[1] - 1e-12));

    let phi = lines(&out.join("phi.csv"));
    assert_eq!(phi.len(), 513);
    assert_eq!(phi[1].split(',').count(), 512);
    let side: Value = serde_json::from_str(&fs::read_to_string(out.join("phi.json")).unwrap()).unwrap();
    for k in ["n_half", "dk", "k0D", "sigma_plus_D", "sigma_minus_D"] {
        assert!(side.get(k).is_some(), "{k}");
    }
    assert!(out.join("modes_mu.csv").exists() && out.join("modes_nu.csv").exists());
    for f in m["files"].as_object().unwrap().keys() {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn evolve_reference_peak() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let o = crowsim(&["--out", out.to_str().unwrap(), "evolve"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = lines(&out.join("photons.csv"));
    assert_eq!(rows[0], "t_tau,n_p");
    assert_eq!(rows.len(), 2049);
    let n_max = rows[1..]
        .iter()
        .map(|r| r.split(',').nth(1).unwrap().parse::<f64>().unwrap())
        .fold(0.0, f64::max);
    assert!((n_max / 1.80 - 1.0).abs() < 0.07, "{n_max}");
    let v = lines(&out.join("variance.csv"));
    assert_eq!(v[0], "t_tau,delta2_env,delta2_theta0");
    for r in &v[1..] {
        let x: Vec<f64> = r.split(',').map(|x| x.parse().unwrap()).collect();
        assert!(x[1] <= x[2] + 1e-12);
    }
}

#[test]
fn validation_error_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "grid.n_half = 64\npump.sigma_plus_D = -1\n");
    let out = tmp.path().join("never");
    let o = crowsim(&["--config", &cfg, "--out", out.to_str().unwrap(), "evolve"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("pump.sigma_plus_D") && err.contains("line 2"), "{err}");
    assert!(!out.exists());

    let cfg = write_config(tmp.path(), "pump.sigma_plus = 0.3\n");
    let o = crowsim(&["--config", &cfg, "--out", out.to_str().unwrap(), "dispersion"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());

    let o = crowsim(&["--out", out.to_str().unwrap(), "sweep", "--configs", "A,Q"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn runtime_error_exit_code() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope.conf");
    let o = crowsim(&["--config", missing.to_str().unwrap(), "dispersion"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nope.conf"));
}

#[test]
fn oracle_report() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let o = crowsim(&["--out", out.to_str().unwrap(), "oracle"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r: Value = serde_json::from_str(&fs::read_to_string(out.join("oracle.json")).unwrap()).unwrap();
    let cases = r["cases"].as_array().unwrap();
    assert!(cases.len() > 20);
    for c in cases {
        for k in ["case", "expected", "got", "rel_err", "pass"] {
            assert!(c.get(k).is_some());
        }
        assert_eq!(c["pass"], Value::Bool(true), "{c}");
    }
    assert_eq!(r["sign_calibration"]["sign"], "Plus");
}
