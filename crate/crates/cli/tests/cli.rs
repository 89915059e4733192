//! End-to-end checks of the command line front end: artifacts on disk,
//! exit codes, and reproducibility of emitted files.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_condensate"))
}

fn write_canonical_spec(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("spec.json");
    std::fs::write(
        &path,
        r#"{
  "r1": 0.25, "r2": 0.5, "R": 1.0,
  "lambda_plus": 50.0, "lambda_minus": 0.0001,
  "vplus_profile": {"kind": "piecewise_constant", "breaks": [0.0, 0.5], "values": [50.0]},
  "vminus_profile": {"kind": "piecewise_constant", "breaks": [0.5, 1.0], "values": [0.0001]},
  "epsilon": 0.5
}"#,
    )
    .unwrap();
    path
}

#[test]
fn validate_writes_report_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_canonical_spec(dir.path());
    let out = dir.path().join("out");
    let status = bin()
        .args(["validate", "--spec"])
        .arg(&spec)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("validation.json")).unwrap())
            .unwrap();
    assert_eq!(report["overall"], serde_json::Value::Bool(true));
    assert!(report["n1"].as_u64().unwrap() >= 1);
}

#[test]
fn validate_rejects_inadmissible_spec_with_code_4() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(
        &path,
        r#"{
  "r1": 0.25, "r2": 0.5, "R": 1.0,
  "lambda_plus": 10.0, "lambda_minus": 10.0,
  "vplus_profile": {"kind": "piecewise_constant", "breaks": [0.0, 0.5], "values": [10.0]},
  "vminus_profile": {"kind": "piecewise_constant", "breaks": [0.5, 1.0], "values": [10.0]},
  "epsilon": 0.5
}"#,
    )
    .unwrap();
    let status = bin()
        .args(["validate", "--spec"])
        .arg(&path)
        .arg("--out")
        .arg(dir.path().join("out"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(4));
}

#[test]
fn missing_spec_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["validate", "--spec"])
        .arg(dir.path().join("nonexistent.json"))
        .arg("--out")
        .arg(dir.path().join("out"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn sweep_is_reproducible_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_canonical_spec(dir.path());
    let run = |out: &Path| {
        let status = bin()
            .args(["scattering-sweep", "--spec"])
            .arg(&spec)
            .arg("--out")
            .arg(out)
            .args(["--N", "100,1000", "--beta1", "0.5", "--seed", "7"])
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read(out.join("sweep.csv")).unwrap()
    };
    let first = run(&dir.path().join("a"));
    let second = run(&dir.path().join("b"));
    assert_eq!(first, second);
}

#[test]
fn config_file_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_canonical_spec(dir.path());
    let out = dir.path().join("out");
    let config = dir.path().join("run.json");
    std::fs::write(
        &config,
        format!(
            r#"{{"spec": "{}", "N": [100], "beta1": 0.5}}"#,
            spec.display()
        ),
    )
    .unwrap();
    // flags name a missing spec; the config overlay must win
    let status = bin()
        .args(["scattering-sweep", "--spec", "/definitely/missing.json"])
        .arg("--out")
        .arg(&out)
        .args(["--N", "100,1000,10000"])
        .arg("--config")
        .arg(&config)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    // config restricted the sweep to a single particle number
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn compare_emits_time_series() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_canonical_spec(dir.path());
    let out = dir.path().join("out");
    let status = bin()
        .args(["compare", "--spec"])
        .arg(&spec)
        .arg("--out")
        .arg(&out)
        .args([
            "--dim",
            "1",
            "--grid",
            "24",
            "--box-length",
            "10",
            "--dt",
            "0.002",
            "--t-final",
            "0.01",
            "--stride",
            "5",
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(out.join("compare.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# {"));
    assert!(lines[1].starts_with("t,norm"));
    assert!(lines.len() >= 4);
}

#[test]
fn decompose_energy_reports_tiny_residual() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_canonical_spec(dir.path());
    let out = dir.path().join("out");
    let status = bin()
        .args(["decompose-energy", "--spec"])
        .arg(&spec)
        .arg("--out")
        .arg(&out)
        .args(["--dim", "1", "--grid", "24", "--box-length", "10"])
        .status()
        .unwrap();
    assert!(status.success());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("decomposition.json")).unwrap())
            .unwrap();
    let residual = report["residual"].as_f64().unwrap();
    let scale = report["scale"].as_f64().unwrap();
    assert!(residual < 1e-8 * scale);
}
