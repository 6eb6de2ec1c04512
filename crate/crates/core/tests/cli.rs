use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn qcodelab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qcodelab")).args(args).output().expect("binary runs")
}

fn channel(name: &str) -> String {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "channels", name].iter().collect();
    path.to_str().unwrap().to_string()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn expander(dir: &Path) -> String {
    let path = dir.join("expander.json").to_str().unwrap().to_string();
    let out = qcodelab(&["codebook", "expander", "--n", "5", "--P", "3,2", "--rate", "0.5", "--seed", "1", "--out", &path]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    path
}

#[test]
fn types_lists_every_composition() {
    let out = qcodelab(&["types", "--n", "4", "--k", "3"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["count"], 15);
}

#[test]
fn expander_file_carries_header_and_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let path = expander(dir.path());
    let book: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(book["kind"], "expander");
    assert_eq!(book["n"], 5);
    assert_eq!(book["P"], serde_json::json!([3, 2]));
    assert!(book["lambda"].as_f64().unwrap() <= (-5.0f64 * 0.5 / 2.0).exp());
    assert!(!book["generators"].as_array().unwrap().is_empty());
}

#[test]
fn resolve_report_has_the_common_fields() {
    let dir = tempfile::tempdir().unwrap();
    let book = expander(dir.path());
    let out = qcodelab(&["resolve", "--channel", &channel("qubit_noisy.json"), "--codebook", &book]);
    assert_eq!(out.status.code(), Some(0));
    let report = json(&out);
    let report = report.as_array().map_or(report.clone(), |a| a[0].clone());
    for key in ["kind", "params", "measured", "bound", "alpha_star", "pass", "seed"] {
        assert!(report.get(key).is_some(), "missing {key}");
    }
    assert_eq!(report["kind"], "resolve");
    assert!(report["timings"].is_null());
    assert!(report["measured"].as_f64().unwrap() <= report["bound"].as_f64().unwrap());
}

#[test]
fn timings_and_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let book = expander(dir.path());
    let reports = dir.path().join("reports");
    let out = qcodelab(&[
        "resolve", "--channel", &channel("qubit_noisy.json"), "--codebook", &book, "--timings", "--format", "csv", "--out-dir",
        reports.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("kind,measured,bound,alpha_star,pass,seed"));
    let written: Vec<_> = std::fs::read_dir(&reports).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(written.len(), 1);
    assert_eq!(std::fs::read_to_string(&written[0]).unwrap(), text);

    let out = qcodelab(&["resolve", "--channel", &channel("qubit_noisy.json"), "--codebook", &book, "--timings"]);
    assert!(out.stdout.windows(13).any(|w| w == b"total_seconds"));
}

#[test]
fn bad_input_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = qcodelab(&["codebook", "good", "--n", "5", "--P", "3,3", "--rate", "0.3", "--out", "x.json"]);
    assert_eq!(out.status.code(), Some(2));
    let out = qcodelab(&["resolve", "--channel", "missing.json", "--codebook", "missing.json"]);
    assert_eq!(out.status.code(), Some(2));
    let out = qcodelab(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));

    let book = expander(dir.path());
    let mut doc: Value = serde_json::from_str(&std::fs::read_to_string(&book).unwrap()).unwrap();
    doc.as_object_mut().unwrap().remove("generators");
    let stripped = dir.path().join("stripped.json");
    std::fs::write(&stripped, doc.to_string()).unwrap();
    let out = qcodelab(&["resolve", "--channel", &channel("qubit_noisy.json"), "--codebook", stripped.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn coding_rejects_codebooks_without_a_good_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let book = expander(dir.path());
    let out = qcodelab(&["coding", "--channel", &channel("qubit_noisy.json"), "--codebook", &book]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn private_reports_both_halves() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("setwise.json");
    let out = qcodelab(&[
        "codebook", "setwise", "--n", "5", "--P", "3,2", "--rate", "0.6", "--rate-e", "0.3", "--generators", "4", "--seed", "2",
        "--out", path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let out = qcodelab(&["private", "--channel", &channel("wiretap.json"), "--codebook", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("private-correctness") && text.contains("private-secrecy"));
}
