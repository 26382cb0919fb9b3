use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn sinlaw(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sinlaw"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

#[test]
fn charfn_prints_gaussian_values() {
    let dir = tempfile::tempdir().unwrap();
    let out = sinlaw(&["charfn", "--f", "gaussian", "--t", "0,1"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,phi,error"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 2);
    assert!((rows[0][1] - 1.0).abs() < 1e-12);
    assert!((rows[1][1] - (-0.5f64).exp()).abs() < 1e-9);
}

#[test]
fn selfcheck_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = sinlaw(&["selfcheck"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 4);
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["sample", "--f", "laplace"],
        vec!["sample", "--f", "gaussian", "--n", "0"],
        vec!["invert", "--psi", "cauchy", "--grid-size", "3"],
        vec!["frobnicate"],
        vec!["verify", "--samples", "missing.csv", "--target", "std_normal"],
    ] {
        assert_eq!(sinlaw(&args, dir.path()).status.code(), Some(2), "{args:?}");
    }
    assert_eq!(sinlaw(&["--help"], dir.path()).status.code(), Some(0));
}

#[test]
fn invert_writes_full_precision_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = sinlaw(&["--quiet", "invert", "--psi", "gaussian", "--grid-size", "64"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("f_table.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("u,f_of_u"));
    let mut prev = f64::INFINITY;
    for line in lines {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells.len(), 2);
        for c in &cells {
            let mantissa = c.split('e').next().unwrap().trim_start_matches('-');
            assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17, "{c}");
        }
        let (u, f): (f64, f64) = (cells[0].parse().unwrap(), cells[1].parse().unwrap());
        assert!(f < prev);
        assert!(((-2.0 * u.ln()).sqrt() - f).abs() < 1e-6);
        prev = f;
    }
    let meta = json(&dir.path().join("f_table.csv.meta.json"));
    assert_eq!(meta["command"], "invert");
    assert_eq!(meta["config_hash"].as_str().unwrap().len(), 64);
    assert!(meta.get("admissibility").is_some());
}

#[test]
fn sample_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    let out = sinlaw(&["--quiet", "sample", "--f", "gaussian", "--count", "5000", "--seed", "7"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let meta = json(&dir.path().join("samples.csv.meta.json"));
    for key in ["f_id", "n", "count", "seed", "resamples", "versions", "config_hash"] {
        assert!(meta.get(key).is_some(), "missing {key}");
    }
    assert_eq!(meta["seed"], 7);
    assert_eq!(meta["count"], 5000);

    let out = sinlaw(&["--quiet", "verify", "--samples", "samples.csv", "--target", "std_normal"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let report = json(&dir.path().join("report.json"));
    for key in ["ks", "ks_threshold", "pass", "ecf", "n", "count", "seed", "target"] {
        assert!(report.get(key).is_some(), "missing {key}");
    }
    assert_eq!(report["pass"], true);
    assert_eq!(report["ecf"].as_array().unwrap().len(), 4);

    // the wrong target fails the KS test with status 1
    let out = sinlaw(
        &["--quiet", "verify", "--samples", "samples.csv", "--target", "cauchy_gamma:5", "--report", "bad.json"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&dir.path().join("bad.json"))["pass"], false);
}

#[test]
fn rerun_with_same_config_is_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["--quiet", "sample", "--f", "cauchy", "--count", "2000", "--out", "a.csv"];
    sinlaw(&args, dir.path());
    let first = std::fs::read(dir.path().join("a.csv")).unwrap();
    let first_meta = json(&dir.path().join("a.csv.meta.json"));
    sinlaw(&args, dir.path());
    assert_eq!(std::fs::read(dir.path().join("a.csv")).unwrap(), first);
    assert_eq!(json(&dir.path().join("a.csv.meta.json"))["config_hash"], first_meta["config_hash"]);
    // no temporary files are left behind
    let mut names: Vec<String> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names, ["a.csv", "a.csv.meta.json"]);
}

#[test]
fn pipeline_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = sinlaw(
        &["--quiet", "pipeline", "--psi", "gaussian", "--count", "3000", "--grid-size", "128", "--out-dir", "run"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let run = dir.path().join("run");
    for name in ["f_table.csv", "samples.csv", "samples.csv.meta.json", "report.json", "pipeline.meta.json"] {
        assert!(run.join(name).exists(), "missing {name}");
    }
    assert_eq!(json(&run.join("report.json"))["pass"], true);
}

#[test]
fn transform_matches_gaussian() {
    let dir = tempfile::tempdir().unwrap();
    let out = sinlaw(&["transform", "--g", "gaussian", "--t", "2"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let value: f64 = text.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((value - (-2.0f64).exp()).abs() < 1e-9);
}
