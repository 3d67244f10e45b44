//! The `qmcframes` binary: output format and exit-code contract.

use std::process::Command;

fn qmcframes(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_qmcframes")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap(), String::from_utf8(out.stderr).unwrap())
}

#[test]
fn omega_prints_closed_form() {
    let (code, out, _) = qmcframes(&["omega", "--sigma", "0.70710678"]);
    assert_eq!(code, 0);
    let line = out.lines().find(|l| l.starts_with("omega_closed,")).unwrap();
    let v: f64 = line["omega_closed,".len()..].parse().unwrap();
    assert!((v - 64.61).abs() < 0.005, "{line}");
}

#[test]
fn usage_error_exits_one_with_machine_line() {
    let (code, _, err) = qmcframes(&["discrepancy", "--scale", "-1"]);
    assert_eq!(code, 1);
    assert!(err.contains("scale must be positive"));
    assert!(err.lines().any(|l| l.starts_with("error kind=usage ")));
}

#[test]
fn missing_lattice_file_exits_one() {
    let (code, _, err) = qmcframes(&["discrepancy", "--lattice", "/nonexistent/lattice.cfg"]);
    assert_eq!(code, 1);
    assert!(err.lines().any(|l| l.starts_with("error kind=")));
}

#[test]
fn lattice_file_is_read() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("half.cfg");
    std::fs::write(&path, "basis = [[1, 0], [0, 1]]\na = 0.5\n").unwrap();
    let (code, out, _) = qmcframes(&["discrepancy", "--lattice", path.to_str().unwrap(), "--grid", "8"]);
    assert_eq!(code, 0, "{out}");
    let row = out.lines().find(|l| l.starts_with("5e-1,")).unwrap();
    let d: f64 = row.split(',').nth(3).unwrap().parse().unwrap();
    // D*_shift(aℤ²) = 2a − a²
    assert!((d - 0.75).abs() < 1e-12, "{row}");
}

#[test]
fn non_certifying_run_exits_two() {
    let (code, out, _) = qmcframes(&["certify", "--scale", "0.5", "--grid", "16"]);
    assert_eq!(code, 2);
    assert!(out.contains("valid,false"));
}

#[test]
fn identical_config_gives_identical_output_for_any_thread_count() {
    let base = ["dilation", "--scales", "0.25", "--grid", "16"];
    let (_, one, _) = qmcframes(&[&base[..], &["--threads", "1"]].concat());
    let (_, two, _) = qmcframes(&[&base[..], &["--threads", "2"]].concat());
    assert_eq!(one, two);
}
