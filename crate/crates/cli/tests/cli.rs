use std::path::Path;
use std::process::{Command, Output};

fn schatten(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_schatten")).args(args).output().expect("binary runs")
}

fn rows(out: &Output) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_reader(out.stdout.as_slice());
    r.records().map(|rec| rec.unwrap().iter().map(str::to_string).collect()).collect()
}

fn header(out: &Output) -> Vec<String> {
    let mut r = csv::Reader::from_reader(out.stdout.as_slice());
    r.headers().unwrap().iter().map(str::to_string).collect()
}

fn column(out: &Output, name: &str) -> Vec<f64> {
    let i = header(out).iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    rows(out).iter().map(|r| r[i].parse().unwrap()).collect()
}

fn write_system(dir: &Path, body: &str) -> String {
    let path = dir.join("sys.json");
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn norms_default_compares_all_methods() {
    let out = schatten(&["norms"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(header(&out)[..4], ["k", "wick", "riccati", "quadrature"]);
    assert_eq!(rows(&out).len(), 10);
    assert!(column(&out, "gap_wick_riccati").iter().all(|&g| g <= 1e-8));
    assert!(column(&out, "gap_riccati_quadrature").iter().all(|&g| g <= 1e-5));
}

#[test]
fn scalar_system_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let sys = write_system(dir.path(), r#"{"n":1,"m":1,"p":1,"A":[[-1]],"B":[[1]],"C":[[1]]}"#);
    let out = schatten(&["norms", "--system", &sys, "--max-order", "3", "--method", "riccati"]);
    assert!(out.status.success());
    // ‖1/(s+1)‖₂ₖ^{2k} = 1/2, 1/4, 3/16.
    let expected = [0.5f64, 0.25, 3.0 / 16.0];
    for (k, (v, e)) in column(&out, "riccati").into_iter().zip(expected).enumerate() {
        let e = e.powf(1.0 / (2.0 * (k + 1) as f64));
        assert!((v - e).abs() < 1e-14, "k = {}: {v} vs {e}", k + 1);
    }
}

#[test]
fn zero_input_norms_vanish() {
    let out = schatten(&["norms", "--system", "builtin:zero_input", "--max-order", "4"]);
    assert!(out.status.success());
    for m in ["wick", "riccati", "quadrature"] {
        assert!(column(&out, m).iter().all(|&v| v == 0.0), "{m}");
    }
}

#[test]
fn risk_methods_agree() {
    let out = schatten(&["risk", "--theta", "0.01"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = column(&out, "value");
    assert_eq!(v.len(), 3);
    let tail: f64 = rows(&out)[1][2].parse().unwrap();
    assert!((v[0] - v[1]).abs() <= tail + 1e-12 * v[0]);
    assert!((v[0] - v[2]).abs() <= 1e-5 * v[0]);
}

#[test]
fn risk_outside_domain_is_an_input_error() {
    let out = schatten(&["risk", "--theta", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bound_dominates_variance_at_zero_budget() {
    let out = schatten(&["bound", "--system", "builtin:scalar"]);
    assert!(out.status.success());
    assert!(column(&out, "value")[0] >= 0.5 * (1.0 - 1e-9));
}

#[test]
fn cost_series_matches_quadrature() {
    let out = schatten(&["cost", "--shape", "power:2", "--system", "builtin:random8"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = column(&out, "value");
    assert!((v[0] - v[1]).abs() <= 1e-8 * v[0]);
}

#[test]
fn verify_passes_on_fixtures() {
    let out = schatten(&["verify"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(rows(&out).iter().all(|r| r[2] == "pass"));
}

#[test]
fn output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for p in [&a, &b] {
        let out = schatten(&["norms", "--output", p.to_str().unwrap()]);
        assert!(out.status.success() && out.stdout.is_empty());
    }
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn simulation_is_reproducible_and_dumps_samples() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("samples.csv");
    let args = ["simulate", "--system", "builtin:scalar", "--horizon", "5", "--paths", "40", "--seed", "9"];
    let first = schatten(&[&args[..], &["--samples", dump.to_str().unwrap()]].concat());
    let second = schatten(&args);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    assert_eq!(first.stdout, second.stdout);
    let samples = std::fs::read_to_string(dump).unwrap();
    assert_eq!(samples.lines().count(), 41);
    assert!(samples.starts_with("path,seed,energy\n"));
}

#[test]
fn input_errors_exit_with_code_two() {
    assert_eq!(schatten(&["norms", "--system", "/no/such/file.json"]).status.code(), Some(2));
    assert_eq!(schatten(&["norms", "--system", "builtin:nope"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let unstable = write_system(dir.path(), r#"{"n":1,"m":1,"p":1,"A":[[1]],"B":[[1]],"C":[[1]]}"#);
    assert_eq!(schatten(&["norms", "--system", &unstable]).status.code(), Some(2));
    assert_eq!(schatten(&["norms", "--max-order", "0"]).status.code(), Some(2));
    assert_eq!(schatten(&["bound", "--shape", "hellinger"]).status.code(), Some(2));
}
