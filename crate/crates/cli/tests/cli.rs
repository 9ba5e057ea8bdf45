use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn system(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../systems").join(name)
}

fn geomech(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geomech")).args(args).output().expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn run(cmd: &str, file: &str, rest: &[&str]) -> Output {
    let path = system(file);
    let mut args = vec![cmd, path.to_str().unwrap()];
    args.extend_from_slice(rest);
    geomech(&args)
}

#[test]
fn certify_liouville_oscillator() {
    let out = run("certify-liouville", "oscillator2d.json", &[]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["verdict"], "pass");
    assert_eq!(r["results"]["certificate"]["certified"], true);
    for key in ["tool_version", "seed", "samples", "tolerances", "verdict"] {
        assert!(r.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn angular_momentum_makes_it_superintegrable() {
    let r = report(&run("certify-liouville", "oscillator2d_superintegrable.json", &[]));
    assert_eq!(r["results"]["certificate"]["superintegrable"], true);
    assert_eq!(r["results"]["certificate"]["joint_rank"], 3);
}

#[test]
fn hojman_without_multiplier_reports_the_precondition() {
    let out = run("hojman", "planar_symmetries.json", &["--field", "dilation", "--symmetry", "rotation"]);
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out);
    assert_eq!(r["verdict"], "fail");
    assert_eq!(r["results"]["precondition"]["check"], "div X");
}

#[test]
fn hojman_rotation_dilation_is_trivial() {
    let out = run("hojman", "planar_symmetries.json", &["--field", "rotation", "--symmetry", "dilation"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["results"]["trivial"], true);
}

#[test]
fn integrate_closes_the_circle() {
    let out = run("integrate", "oscillator1d.json", &["--field", "XH", "--from", "1,0", "--T", "6.283185307179586"]);
    assert_eq!(out.status.code(), Some(0));
    let end = &report(&out)["results"]["final_state"];
    assert!((end[0].as_f64().unwrap() - 1.0).abs() < 1e-8);
    assert!(end[1].as_f64().unwrap().abs() < 1e-8);
}

#[test]
fn non_integral_fails_with_exit_one() {
    let out = run("first-integral", "oscillator1d.json", &["--field", "XH", "--function", "Q"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn reports_are_byte_identical() {
    let args = ["--field", "XH", "--function", "H", "--seed", "7", "--samples", "30"];
    let a = run("first-integral", "oscillator1d.json", &args);
    let b = run("first-integral", "oscillator1d.json", &args);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(report(&a)["seed"], 7);
    assert_eq!(report(&a)["samples"], 30);
}

#[test]
fn pencil_and_lax_on_the_oscillator() {
    let out = run("pencil", "oscillator2d.json", &["--form", "omega2", "--field", "XH"]);
    assert_eq!(out.status.code(), Some(0));
    let c = &report(&out)["results"]["characteristic_at_first_sample"]["coefficients"];
    assert_eq!(c, &serde_json::json!([2.0, -3.0, 1.0]));
    let out = run("lax", "oscillator2d.json", &["--tensor", "R", "--field", "XH"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn noether_and_gauge() {
    let out = run("noether", "central_force.json", &["--lagrangian", "L", "--symmetry", "rotation"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["results"]["constant"], "q1*v2 - q2*v1");
    let out = run("lagrangian", "central_force.json", &["--lagrangian", "L", "--compare", "Lgauge"]);
    assert_eq!(out.status.code(), Some(0));
    let out = run("lagrangian", "central_force.json", &["--lagrangian", "L", "--compare", "Lother"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn planar_algebra_and_quadrature() {
    let out = run("liealg", "planar_quadrature.json", &["--fields", "E1,E2,E3"]);
    assert_eq!(report(&out)["results"]["algebra"]["nilpotent"], true);
    let out = run("quadrature2d", "planar_quadrature.json", &["--fields", "X1,X2"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["results"]["lambda"], 1.0);
}

#[test]
fn hamilton_jacobi_both_inputs() {
    for flag in [["--alpha", "alpha"], ["--generating", "S"]] {
        let mut args = vec!["--hamiltonian", "H"];
        args.extend_from_slice(&flag);
        let out = run("hamilton-jacobi", "hj_oscillator.json", &args);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    }
}

#[test]
fn missing_object_is_an_error() {
    let out = run("bracket", "oscillator1d.json", &["--f", "H", "--g", "Nope"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("Nope"));
}

#[test]
fn typo_reports_its_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("typo.json");
    std::fs::write(
        &path,
        "{\n  \"chart\": {\"dim\": 2, \"flavor\": \"tangent\"},\n  \"scalars\": {\"L\": \"vv^2/2\"}\n}\n",
    )
    .unwrap();
    let out = geomech(&["lagrangian", path.to_str().unwrap(), "--lagrangian", "L"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("typo.json:3:"), "{err}");
}

#[test]
fn unknown_subcommand_exits_two() {
    assert_eq!(geomech(&["frobnicate"]).status.code(), Some(2));
}
