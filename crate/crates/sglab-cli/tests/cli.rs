use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn sglab(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sglab")).args(args).env("SGLAB_OUTPUT_DIR", out).output().unwrap()
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

#[test]
fn propagator_eval_prints_and_writes_a_record() {
    let dir = scratch("eval");
    let o = sglab(&["propagator", "eval", "--kernel", "feynman", "--dx", "1", "--dt", "2"], &dir);
    assert_eq!(o.status.code(), Some(0));
    let r = stdout_json(&o);
    assert_eq!(r["command"], "propagator eval");
    assert!((r["values"]["value"]["im"].as_f64().unwrap() + 0.25).abs() < 1e-15);
    let on_disk: Value = serde_json::from_str(&std::fs::read_to_string(dir.join("propagator_eval.json")).unwrap()).unwrap();
    assert_eq!(on_disk["values"], r["values"]);
    assert_eq!(on_disk["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(on_disk["artifact_version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn unknown_command_exits_with_config_error() {
    let dir = scratch("unknown");
    let o = sglab(&["frobnicate"], &dir);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stdout_json(&o)["error"]["kind"], "ConfigInvalid");
}

#[test]
fn config_files_are_read_and_validated() {
    let dir = scratch("config");
    let good = dir.join("run.toml");
    std::fs::write(&good, "[quadrature]\nseed = 5\nsamples = 2000\n[smatrix]\nk = 1\n").unwrap();
    let o = sglab(&["--config", good.to_str().unwrap(), "smatrix", "unitarity"], &dir);
    assert_eq!(o.status.code(), Some(0));
    let r = stdout_json(&o);
    assert_eq!(r["values"]["k"], 1);
    // Order one cancels exactly.
    assert_eq!(r["values"]["defect"]["value"]["re"], 0.0);

    let json = dir.join("run.json");
    std::fs::write(&json, r#"{"model": {"a": 4.0}}"#).unwrap();
    let o = sglab(&["--config", json.to_str().unwrap(), "smatrix", "unitarity", "--k", "1"], &dir);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stdout_json(&o)["error"]["kind"], "RegimeViolation");

    let bad = dir.join("bad.toml");
    std::fs::write(&bad, "[model]\nnot_a_field = 1\n").unwrap();
    assert_eq!(sglab(&["--config", bad.to_str().unwrap(), "report"], &dir).status.code(), Some(2));
}

#[test]
fn series_are_written_as_csv_and_report_summarizes() {
    let dir = scratch("report");
    let o = sglab(&["quasiequiv", "airy", "--trials", "200"], &dir);
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.join("quasiequiv_airy_airy.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("length,min_observed,ritz_min,reference"));
    assert_eq!(lines.count(), 3);
    assert_eq!(sglab(&["thirring", "identities", "--pairs", "100"], &dir).status.code(), Some(0));
    let o = sglab(&["report"], &dir);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout_json(&o)["values"]["records"].as_array().unwrap().len(), 2);
}

#[test]
fn flag_output_dir_takes_precedence_over_environment() {
    let env_dir = scratch("env");
    let flag_dir = scratch("flag");
    let o = sglab(&["--output-dir", flag_dir.to_str().unwrap(), "propagator", "eval"], &env_dir);
    assert_eq!(o.status.code(), Some(0));
    assert!(flag_dir.join("propagator_eval.json").exists());
    assert!(!env_dir.join("propagator_eval.json").exists());
}
