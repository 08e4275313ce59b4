use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

fn dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests")
}

fn run(args: &[&str], stdin: Option<&str>) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_curvstab"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(stdin.unwrap_or("").as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn golden(name: &str, code: i32) {
    let cfg = dir().join("fixtures").join(format!("{name}.json"));
    let out = run(&["--config", cfg.to_str().unwrap()], None);
    let want_out = std::fs::read_to_string(dir().join("golden").join(format!("{name}.stdout"))).unwrap();
    let want_err = std::fs::read_to_string(dir().join("golden").join(format!("{name}.stderr"))).unwrap();
    assert_eq!(out.status.code(), Some(code));
    assert_eq!(String::from_utf8(out.stdout).unwrap(), want_out);
    assert_eq!(String::from_utf8(out.stderr).unwrap(), want_err);
}

#[test]
fn golden_classify() {
    golden("classify_s5h5", 0);
}

#[test]
fn golden_verify() {
    golden("verify_ric_conformal", 0);
}

#[test]
fn golden_missing_dim() {
    golden("missing_dim", 2);
}

#[test]
fn stdin_config_matches_file() {
    let text = std::fs::read_to_string(dir().join("fixtures/classify_s5h5.json")).unwrap();
    let a = run(&[], Some(&text));
    let b = run(&["--config", "-"], Some(&text));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn refuted_case_exits_one() {
    let out = run(&[], Some(r#"{"command": "verify", "cases": ["ric_mixedtt_su2su2_alt_line"]}"#));
    assert_eq!(out.status.code(), Some(1));
    let s = String::from_utf8(out.stdout).unwrap();
    assert!(s.contains("Refuted") && s.contains("12λ²") && s.contains("8λ²"));
}

#[test]
fn strict_turns_indeterminate_into_three() {
    let cfg = r#"{"command": "classify", "functional": {"kind": "W2"}, "product": {"factors": [
        {"kind": "Sphere", "dim": 3, "sectional": 1.0},
        {"kind": "SpaceForm", "dim": 1, "sectional": 0.0}]}}"#;
    let lax = run(&[], Some(cfg));
    assert_eq!(lax.status.code(), Some(0), "{}", String::from_utf8_lossy(&lax.stderr));
    assert!(String::from_utf8(lax.stdout).unwrap().contains("Indeterminate"));
    assert_eq!(run(&["--strict"], Some(cfg)).status.code(), Some(3));
}

#[test]
fn region_csv_and_unknown_fields() {
    let cfg = r#"{"command": "region", "functional": {"kind": "Ric"},
        "grid": {"family": "SphereHyperbolic", "n0": [5], "n1": [5], "mu_ratio": [1.0, 2.0]}}"#;
    let out = run(&["--output", "csv"], Some(cfg));
    assert_eq!(out.status.code(), Some(0));
    let s = String::from_utf8(out.stdout).unwrap();
    assert_eq!(s.lines().next(), Some("n0,n1,mu_ratio,t,status,error"));
    assert_eq!(s.lines().count(), 3);
    let bad = cfg.replace("\"n1\": [5]", "\"n1\": [5], \"step\": 2");
    let out = run(&[], Some(&bad));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("grid"));
}

#[test]
fn auto_rescale_flag_reaches_classifier() {
    let cfg = r#"{"command": "classify", "functional": {"kind": "Ric"}, "product": {"factors": [
        {"kind": "Sphere", "dim": 5, "sectional": 4.0},
        {"kind": "HyperbolicQuotient", "dim": 5, "sectional": -1.0, "mu_fn": 10.0}]}}"#;
    let plain = String::from_utf8(run(&[], Some(cfg)).stdout).unwrap();
    let scaled = String::from_utf8(run(&["--auto-rescale"], Some(cfg)).stdout).unwrap();
    assert!(plain.contains("NotCritical"));
    assert!(!scaled.contains("NotCritical"));
}
