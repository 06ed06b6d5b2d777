//! Black-box tests of the `skyirr` binary: flag contracts, exit codes,
//! artifact shapes.

use std::path::Path;
use std::process::{Command, Output};

fn skyirr(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_skyirr"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = skyirr(dir, args);
    assert!(
        out.status.success(),
        "skyirr {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn full_pipeline_smoke() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["synth", "--count", "500", "--out", "data", "--seed", "1"]);
    assert!(d.join("data/manifest.csv").exists());
    assert!(d.join("data/scene_00000.ppm").exists());

    ok(d, &["train-kmeans", "--manifest", "data/manifest.csv", "--k", "12", "--epochs", "3",
            "--seed", "1", "--out", "km.bin"]);
    ok(d, &["segment", "--model", "km.bin", "--image", "data/scene_00000.ppm",
            "--out", "seg.ppm"]);
    let seg = skyirr::imaging::load_ppm(d.join("seg.ppm")).unwrap();
    assert_eq!((seg.width, seg.height), (64, 64));

    ok(d, &["extract", "--model", "km.bin", "--manifest", "data/manifest.csv",
            "--out", "feats.csv"]);
    let feats = std::fs::read_to_string(d.join("feats.csv")).unwrap();
    let header = feats.lines().next().unwrap();
    assert_eq!(header.split(',').count(), 12 + 2, "k + ghi + label columns");

    let out = ok(d, &["train-classifier", "--features", "feats.csv", "--seed", "1",
                      "--out", "clf.bin", "--scaler-out", "clf_scaler.bin"]);
    assert!(out.contains("held-out accuracy"), "missing accuracy report: {out}");

    ok(d, &["train-regressor", "--features", "feats.csv", "--epochs", "5",
            "--batch-size", "32", "--seed", "1", "--out", "reg.bin",
            "--scaler-out", "reg_scaler.bin"]);

    let line = ok(d, &["classify", "--model", "clf.bin", "--scaler", "clf_scaler.bin",
                       "--image", "data/scene_00000.ppm", "--kmeans", "km.bin"]);
    let first = line.split_whitespace().next().unwrap();
    assert!(first == "clear" || first == "cloudy", "unexpected label {first}");

    let line = ok(d, &["estimate", "--model", "reg.bin", "--scaler", "reg_scaler.bin",
                       "--features", "feats.csv"]);
    let values: Vec<f64> = line.lines().map(|l| l.parse().unwrap()).collect();
    assert_eq!(values.len(), feats.lines().count() - 1);
    assert!(values.iter().all(|v| *v >= 0.0), "negative GHI estimate");

    ok(d, &["evaluate", "--features", "feats.csv", "--task", "classifier", "--folds", "5",
            "--seed", "1", "--out", "report.csv"]);
    let report = std::fs::read_to_string(d.join("report.csv")).unwrap();
    let lines: Vec<&str> = report.lines().collect();
    assert_eq!(lines[0], "fold,accuracy,r2,mae");
    assert_eq!(lines.len(), 1 + 5 + 2, "5 folds + mean + std");

    // aggregate row equals the mean of the fold rows
    let acc_of = |line: &str| line.split(',').nth(1).unwrap().parse::<f64>().unwrap();
    let mean: f64 = lines[1..6].iter().map(|l| acc_of(l)).sum::<f64>() / 5.0;
    let mean_row = acc_of(lines[6]);
    assert!((mean - mean_row).abs() < 1e-12);
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    // missing required flag
    let out = skyirr(d, &["classify", "--scaler", "s.bin", "--features", "f.csv"]);
    assert_eq!(out.status.code(), Some(2));
    // unknown flag
    let out = skyirr(d, &["synth", "--count", "1", "--out", "x", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
    // neither --image nor --features
    let out = skyirr(d, &["classify", "--model", "m.bin", "--scaler", "s.bin"]);
    assert_eq!(out.status.code(), Some(2));
    // --image without --kmeans
    let out = skyirr(d, &["classify", "--model", "m.bin", "--scaler", "s.bin",
                          "--image", "x.ppm"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    // missing input file
    let out = skyirr(d, &["segment", "--model", "km.bin", "--image", "a.ppm",
                          "--out", "s.ppm"]);
    assert_eq!(out.status.code(), Some(1));

    // model of the wrong kind
    ok(d, &["synth", "--count", "40", "--out", "data", "--seed", "2"]);
    ok(d, &["train-kmeans", "--manifest", "data/manifest.csv", "--k", "4", "--epochs", "2",
            "--seed", "2", "--out", "km.bin"]);
    let out = skyirr(d, &["classify", "--model", "km.bin", "--scaler", "km.bin",
                          "--features", "missing.csv"]);
    assert_eq!(out.status.code(), Some(1));

    // malformed manifest reports its line number
    std::fs::write(d.join("bad.csv"), "path,ghi,label\na.ppm,abc,clear\n").unwrap();
    let out = skyirr(d, &["extract", "--model", "km.bin", "--manifest", "bad.csv",
                          "--out", "f.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn synth_manifest_is_valid_and_seed_sensitive() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["synth", "--count", "30", "--out", "a", "--seed", "1"]);
    ok(d, &["synth", "--count", "30", "--out", "b", "--seed", "1"]);
    ok(d, &["synth", "--count", "30", "--out", "c", "--seed", "2"]);
    let a = std::fs::read(d.join("a/manifest.csv")).unwrap();
    let b = std::fs::read(d.join("b/manifest.csv")).unwrap();
    let c = std::fs::read(d.join("c/manifest.csv")).unwrap();
    assert_eq!(a, b, "same seed must give identical manifests");
    assert_ne!(a, c, "different seeds should give different scenes");
    let records = skyirr::manifest::parse_manifest(&String::from_utf8(a).unwrap()).unwrap();
    assert!(records.iter().all(|r| r.ghi.unwrap() > 0.0));
    assert!(records.iter().all(|r| r.label.is_some()));
}
