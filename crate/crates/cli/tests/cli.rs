use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn biaslens(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_biaslens"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

/// Two-class 64×64 synthetic pair under `root`.
fn tiny_corpus(root: &Path) {
    let out = biaslens(&[
        "synth",
        "--out",
        path(root),
        "--classes",
        "2",
        "--samples-per-class",
        "8",
        "--seed",
        "3",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

fn quick_audit(data: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "audit",
        "--data",
        path(data),
        "--out",
        path(out),
        "--epochs",
        "1",
        "--batch-size",
        "8",
        "--crop-size",
        "16",
        "--seed",
        "42",
    ];
    args.extend_from_slice(extra);
    biaslens(&args)
}

fn without_timestamp(text: &str) -> Value {
    let mut v: Value = serde_json::from_str(text).unwrap();
    v.as_object_mut().unwrap().remove("timestamp");
    v
}

#[test]
fn audit_report_and_rerender() {
    let dir = tempfile::tempdir().unwrap();
    tiny_corpus(dir.path());
    let data = dir.path().join("biased");
    let out = dir.path().join("run");
    let run = quick_audit(&data, &out, &[]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));

    for name in ["report.json", "report.csv", "run_config.json", "split.json"] {
        assert!(out.join(name).is_file(), "{name} missing");
    }
    let report: Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let conditions = report["conditions"].as_array().unwrap();
    assert_eq!(conditions.len(), 5);
    let originals = conditions.iter().filter(|c| c["name"] == "original").count();
    assert_eq!(originals, 1);
    for c in conditions {
        let flag = c["flag"].as_str().unwrap();
        assert!(["BIAS_INDICATED", "NO_INDICATION", "EXCLUDED_FROM_RULE"].contains(&flag));
    }
    assert_eq!(report["crop_probe"]["size"], 16);

    let csv = dir.path().join("again.csv");
    let rerender = biaslens(&["report", path(&out), "--format", "csv", "--out", path(&csv)]);
    assert!(rerender.status.success());
    assert_eq!(fs::read(&csv).unwrap(), fs::read(out.join("report.csv")).unwrap());

    // A second run never replaces the first report and reproduces it.
    let first = fs::read_to_string(out.join("report.json")).unwrap();
    let again = quick_audit(&data, &out, &[]);
    assert!(again.status.success());
    assert_eq!(fs::read_to_string(out.join("report.json")).unwrap(), first);
    let moved: Vec<_> = fs::read_dir(&out)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.path().join("report.json").is_file())
        .collect();
    assert_eq!(moved.len(), 1);
    let second = fs::read_to_string(moved[0].path().join("report.json")).unwrap();
    assert_eq!(without_timestamp(&first), without_timestamp(&second));

    let third = quick_audit(&data, &out, &[]);
    assert_eq!(third.status.code(), Some(1));
    let forced = quick_audit(&data, &out, &["--force"]);
    assert!(forced.status.success());
}

#[test]
fn bad_transform_token_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = biaslens(&[
        "audit",
        "--data",
        path(dir.path()),
        "--out",
        path(&dir.path().join("r")),
        "--transforms",
        "wavelet:qux",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("qux"));
}

#[test]
fn runtime_failures_emit_a_json_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = biaslens(&[
        "audit",
        "--data",
        path(&dir.path().join("missing")),
        "--out",
        path(&dir.path().join("r")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    let line = stderr.lines().last().unwrap();
    let err: Value = serde_json::from_str(line).unwrap();
    assert!(err["error"].is_string() && err["message"].is_string());
}

#[test]
fn transform_and_crop_materialize_trees() {
    let dir = tempfile::tempdir().unwrap();
    tiny_corpus(dir.path());
    let data = dir.path().join("unbiased");
    let tout = dir.path().join("t");
    let t = biaslens(&["transform", "--data", path(&data), "--out", path(&tout), "--transforms", "median:3,median:3+wavelet:haar"]);
    assert!(t.status.success(), "{}", String::from_utf8_lossy(&t.stderr));
    assert!(tout.join("median-3").is_dir());
    assert!(tout.join("median-3_then_wavelet-haar").is_dir());

    let cout = dir.path().join("c");
    let c = biaslens(&["crop", "--data", path(&data), "--out", path(&cout), "--crop-size", "12"]);
    assert!(c.status.success(), "{}", String::from_utf8_lossy(&c.stderr));
    let class_dir = fs::read_dir(&cout).unwrap().next().unwrap().unwrap().path();
    let png = fs::read_dir(class_dir).unwrap().next().unwrap().unwrap().path();
    let img = biaslens::load_image(&png).unwrap();
    assert_eq!((img.height(), img.width()), (12, 12));
}
