use std::process::{Command, Output};

use tmfrac::measure::grad_norm_pow;
use tmfrac::RadialProfile;

fn tmfrac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tmfrac")).args(args).output().unwrap()
}

#[test]
fn exit_codes() {
    assert_eq!(tmfrac(&["tmsc", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(tmfrac(&["tmsc", "--mu-frac", "1.0"]).status.code(), Some(2));
    assert_eq!(tmfrac(&["tmc", "--sigma-frac", "1.5"]).status.code(), Some(2));
    let regime = tmfrac(&["moser", "--p", "3", "--alpha", "1", "--n", "2"]);
    assert_eq!(regime.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&regime.stderr).contains("hint"));
    let probe = tmfrac(&["probe-sigma-star", "--p", "2.5"]);
    assert_eq!(probe.status.code(), Some(3));
    assert_eq!(tmfrac(&["verify", "--suite", "nonsense"]).status.code(), Some(2));
}

#[test]
fn moser_emit_profile_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.txt");
    let out = tmfrac(&["moser", "--p", "2", "--theta", "1", "--n", "10", "--emit-profile", path.to_str().unwrap()]);
    assert!(out.status.success());
    let csv = String::from_utf8(out.stdout).unwrap();
    assert_eq!(csv.lines().count(), 11);
    let (u, params) = RadialProfile::from_text(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!((params.p(), params.theta()), (2.0, 1.0));
    assert!((grad_norm_pow(&u, &params) - 1.0).abs() < 1e-6);
}

#[test]
fn structured_text_is_json() {
    let out = tmfrac(&["moser", "--n", "4", "--format", "structured-text"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 4);
    let g = rows[3]["grad_norm_p"].as_f64().unwrap();
    assert!((g - 1.0).abs() < 1e-9);
}

#[test]
fn sweep_and_probe_csv_schemas() {
    let quick = ["--grid-nodes", "96", "--max-iters", "100", "--restarts", "1"];
    let mut args = vec!["sweep", "--mu-frac", "0.5,0.7"];
    args.extend(quick);
    let out = tmfrac(&args);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("mu_frac,mu,estimate,normalized_product,converged"));
    assert_eq!(text.lines().count(), 3);

    let mut args = vec!["probe-sigma-star", "--sigma-grid", "0.3,0.95"];
    args.extend(quick);
    let out = tmfrac(&args);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("sigma_frac,sigma,tmc_estimate,gap,nu"));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bracket"));
}

#[test]
fn verify_all_suite_passes() {
    let out = tmfrac(&["verify", "--suite", "all", "--seed", "7"]);
    let manifest = String::from_utf8(out.stdout).unwrap();
    assert_eq!(out.status.code(), Some(0), "{manifest}");
    assert!(manifest.trim_end().ends_with("0 failed"), "{manifest}");
}
