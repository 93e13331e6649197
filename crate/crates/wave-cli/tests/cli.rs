//! End-to-end runs of the `wave` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn wave(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wave"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("WAVE_THREADS", "1")
        .output()
        .expect("the wave binary runs")
}

fn json_file(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn error_record(out: &Output) -> Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(stderr.lines().last().expect("an error record")).expect("the error record is JSON")
}

#[test]
fn curve_writes_csv_with_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let out = wave(dir.path(), &["curve", "--tmax", "20", "--samples", "4000"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("curve.csv")).unwrap();
    let mut lines = csv.split("\r\n");
    assert_eq!(lines.next(), Some("t,r,v,rp,vp"));
    let rows: Vec<&str> = lines.filter(|l| !l.is_empty()).collect();
    assert_eq!(rows.len(), 4000);
    // 17 significant digits.
    let first_t = rows[0].split(',').next().unwrap();
    let mantissa = first_t.split('e').next().unwrap();
    assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17);
    assert_eq!(first_t.parse::<f64>().unwrap(), 0.5 * (20.0 / 4000.0));
    let meta = json_file(&dir.path().join("curve.meta.json"));
    assert_eq!(meta["metadata"]["seed"], 0);
    assert_eq!(meta["metadata"]["config_hash"].as_str().unwrap().len(), 64);
    assert!(meta["metadata"]["mollifier"].as_str().is_some());
    assert_eq!(meta["config"]["samples"], 4000);
}

#[test]
fn same_seed_gives_identical_csvs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [&a, &b] {
        let out = wave(dir.path(), &["hessian", "--samples", "25", "--seed", "7"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let read = |d: &tempfile::TempDir| fs::read(d.path().join("hessian.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    let c = tempfile::tempdir().unwrap();
    assert!(wave(c.path(), &["hessian", "--samples", "25", "--seed", "8"]).status.success());
    assert_ne!(read(&a), read(&c));
}

#[test]
fn hessian_identity_holds_on_both_groups() {
    for group in ["heisenberg", "quaternionic"] {
        let dir = tempfile::tempdir().unwrap();
        let out = wave(dir.path(), &["hessian", "--samples", "50", "--group", group]);
        assert!(out.status.success());
        let summary: Value = serde_json::from_slice(&out.stdout).unwrap();
        assert!(summary["max_rel_gap"].as_f64().unwrap() <= 1e-8, "{summary}");
    }
}

#[test]
fn budget_violation_exits_2_with_json_record() {
    let dir = tempfile::tempdir().unwrap();
    let out = wave(dir.path(), &["kernel", "--lambda", "1e6"]);
    assert_eq!(out.status.code(), Some(2));
    let rec = error_record(&out);
    assert_eq!(rec["error"]["kind"], "budget");
    assert_eq!(rec["error"]["exit_code"], 2);
    let out = wave(dir.path(), &["scaling", "--lambda", "32,1000000", "--k", "1", "--l", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(fs::read_dir(dir.path()).map(|d| d.count() == 0).unwrap_or(true), "nothing written on failure");
}

#[test]
fn invalid_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad_flag = wave(dir.path(), &["curve", "--samples", "many"]);
    assert_eq!(bad_flag.status.code(), Some(2));
    assert_eq!(error_record(&bad_flag)["error"]["kind"], "validation");
    let bad_range = wave(dir.path(), &["curve", "--tmin", "3", "--tmax", "1"]);
    assert_eq!(bad_range.status.code(), Some(2));
    let threads = Command::new(env!("CARGO_BIN_EXE_wave"))
        .args(["curve", "--samples", "5", "--out"])
        .arg(dir.path())
        .env("WAVE_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(threads.status.code(), Some(2));
}

#[test]
fn config_file_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"samples": 10, "tmax": 5.0}"#).unwrap();
    let out_dir = dir.path().join("out");
    let out = wave(&out_dir, &["curve", "--samples", "4000", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(out_dir.join("curve.csv")).unwrap();
    assert_eq!(csv.lines().count(), 11);
    let meta = json_file(&out_dir.join("curve.meta.json"));
    assert_eq!(meta["config"]["samples"], 10);
    assert_eq!(meta["config"]["tmax"], 5.0);

    fs::write(&cfg, r#"{"sample": 10}"#).unwrap();
    let out = wave(&out_dir, &["curve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn scaling_writes_norm_table_and_slopes() {
    let dir = tempfile::tempdir().unwrap();
    let out = wave(dir.path(), &["scaling", "--lambda", "8,16,32", "--k", "1", "--l", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("norms.csv")).unwrap();
    assert!(csv.starts_with("lambda,k,l,component,l1,linf,cert\r\n"));
    assert_eq!(csv.lines().count(), 4);
    let slopes = json_file(&dir.path().join("slopes.json"));
    let list = slopes["slopes"].as_array().unwrap();
    assert_eq!(list.len(), 1);
    assert!(list[0]["slope"].as_f64().unwrap().is_finite());
    assert!(slopes["metadata"]["tolerances"]["kernel"]["nt_min"].as_u64().is_some());
}

#[test]
fn kernel_field_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = wave(dir.path(), &["kernel", "--lambda", "16", "--k", "1", "--l", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: Value = serde_json::from_slice(&out.stdout).unwrap();
    let (field, meta) = htwave::io::read_field(&dir.path().join("kernel.htwk")).unwrap();
    assert_eq!(field.index.k, 1);
    assert_eq!(field.index.l, Some(1));
    assert_eq!(meta.config_hash, summary["config_hash"].as_str().unwrap());
    let l1 = htwave::wave::l1_norm(&field);
    assert!((l1 - summary["l1"].as_f64().unwrap()).abs() <= 1e-12 * l1);
}

#[test]
fn checks_report_is_reproducible() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [&a, &b] {
        let out = wave(dir.path(), &["checks", "--only", "1,5,11"]);
        assert!(out.status.success());
        let stdout = String::from_utf8_lossy(&out.stdout);
        assert_eq!(stdout.lines().filter(|l| l.contains(" PASS ")).count(), 3, "{stdout}");
    }
    let read = |d: &tempfile::TempDir| fs::read(d.path().join("checks.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    let report = json_file(&a.path().join("checks.json"));
    assert_eq!(report["reports"].as_array().unwrap().len(), 3);
    let out = wave(a.path(), &["checks", "--only", "13"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn constant_multiplier_satisfies_the_condition() {
    let dir = tempfile::tempdir().unwrap();
    let out = wave(dir.path(), &["multiplier", "--multiplier", "constant"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["verdict"], "holds");
    let csv = fs::read_to_string(dir.path().join("multiplier_profile.csv")).unwrap();
    assert_eq!(csv.lines().count(), 32);
}
