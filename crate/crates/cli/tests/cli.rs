//! Runs the `hamsig` binary end to end and checks exit codes and outputs.

use std::path::Path;
use std::process::{Command, Output};

fn hamsig(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hamsig"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr_json(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().expect("an error line");
    serde_json::from_str(line).expect("stderr is one JSON line")
}

#[test]
fn synth_then_clean_has_no_violations() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let out = hamsig(&["synth", "--per-class", "4", "--seed", "5", "--out", path(&data)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(data.join("resolved_config.json").exists());
    let manifest = data.join("manifest.jsonl");
    let out = hamsig(&["clean", "--manifest", path(&manifest), "--out", path(&dir.path().join("clean"))]);
    assert_eq!(out.status.code(), Some(0));
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["violations"], 0);
    assert_eq!(summary["records"], 20);
}

#[test]
fn train_on_empty_manifest_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("manifest.jsonl");
    std::fs::write(&manifest, "").unwrap();
    let out = hamsig(&["train", "--manifest", path(&manifest), "--out", path(&dir.path().join("m"))]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr_json(&out);
    assert_eq!(err["error"], "empty_dataset");
    assert!(err["message"].as_str().unwrap().contains("empty dataset"));
}

#[test]
fn missing_file_exits_2_and_bad_config_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = hamsig(&["clean", "--manifest", path(&dir.path().join("nope.jsonl")), "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "io");

    let config = dir.path().join("c.json");
    std::fs::write(&config, r#"{"learning_rate": 0.01, "unknown_key": 1}"#).unwrap();
    let out = hamsig(&["train", "--manifest", "x", "--config", path(&config)]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"], "config");

    let out = hamsig(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"], "usage");
}

#[test]
fn corrupted_manifest_fails_clean_with_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    assert!(hamsig(&["synth", "--per-class", "1", "--out", path(&data)]).status.success());
    let manifest = data.join("manifest.jsonl");
    let mut text = std::fs::read_to_string(&manifest).unwrap();
    text.push_str("{not json}\n");
    std::fs::write(&manifest, text).unwrap();
    let out = hamsig(&["clean", "--manifest", path(&manifest), "--out", path(&dir.path().join("c"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(dir.path().join("c/clean_report.txt").exists());
}

const REPORT_KEYS: [&str; 7] = [
    "task",
    "generated_at",
    "model_sha256",
    "dataset_sha256",
    "config",
    "aggregate",
    "records",
];

const AGGREGATE_KEYS: [&str; 14] = [
    "input_snr_db",
    "output_snr_db",
    "snr_improvement_db",
    "spectrogram_mse_noisy",
    "spectrogram_mse_denoised",
    "ber_before",
    "ber_after",
    "accuracy",
    "precision",
    "recall",
    "f1",
    "confusion_matrix",
    "n_records",
    "mse_improved_fraction",
];

#[test]
fn full_pipeline_smoke() {
    let dir = tempfile::tempdir().unwrap();
    let d = |s: &str| dir.path().join(s);
    // 200 records: 40 per modulated class
    let out = hamsig(&["synth", "--per-class", "40", "--seed", "9", "--out", path(&d("data"))]);
    assert!(out.status.success());
    let manifest = d("data/manifest.jsonl");
    let out = hamsig(&[
        "train", "--manifest", path(&manifest), "--task", "classify", "--max-epochs", "3", "--out", path(&d("model")),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["model.hamnn", "history.json", "splits.json", "resolved_config.json"] {
        assert!(d("model").join(f).exists(), "{f}");
    }
    let out = hamsig(&[
        "eval",
        "--model",
        path(&d("model/model.hamnn")),
        "--manifest",
        path(&manifest),
        "--splits",
        path(&d("model/splits.json")),
        "--format",
        "markdown",
        "--out",
        path(&d("report")),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d("report/report.json")).unwrap()).unwrap();
    for k in REPORT_KEYS {
        assert!(report.get(k).is_some(), "{k}");
    }
    for k in AGGREGATE_KEYS {
        assert!(report["aggregate"].get(k).is_some(), "{k}");
    }
    assert_eq!(report["task"], "classify");
    assert_eq!(report["aggregate"]["n_records"], 30);
    let md = std::fs::read_to_string(d("report/report.md")).unwrap();
    assert!(md.contains("accuracy") && md.contains("confusion_matrix"));

    let signal = d("data/signals/cw-00000.f32");
    let out = hamsig(&[
        "classify", "--model", path(&d("model/model.hamnn")), "--input", path(&signal), "--out", path(&d("cls")),
    ]);
    assert!(out.status.success());
    let result: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(result["label"] == "clean" || result["label"] == "noisy");
    assert!(d("cls/result.json").exists());

    // a classifier cannot denoise
    let out = hamsig(&["denoise", "--model", path(&d("model/model.hamnn")), "--input", path(&signal)]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn augment_denoise_and_kfold_commands() {
    let dir = tempfile::tempdir().unwrap();
    let d = |s: &str| dir.path().join(s);
    assert!(hamsig(&["synth", "--per-class", "8", "--out", path(&d("data"))]).status.success());
    let manifest = d("data/manifest.jsonl");

    let aug = d("aug.json");
    std::fs::write(&aug, r#"{"ops": [{"op": "gain", "gain": 0.5}, {"op": "noise", "snr_db": 0.0}], "seed": 3}"#).unwrap();
    let out = hamsig(&["augment", "--manifest", path(&manifest), "--config", path(&aug), "--out", path(&d("aug"))]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = hamsig(&["clean", "--manifest", path(&d("aug/manifest.jsonl")), "--out", path(&d("augclean"))]);
    assert_eq!(out.status.code(), Some(0), "augmented manifest validates");
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["records"], 120);

    let out = hamsig(&[
        "train", "--manifest", path(&manifest), "--task", "denoise", "--max-epochs", "1", "--out", path(&d("dn")),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = hamsig(&[
        "denoise",
        "--model",
        path(&d("dn/model.hamnn")),
        "--input",
        path(&d("data/signals/cw-00002.f32")),
        "--out",
        path(&d("den")),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(d("den/denoised.wav").exists() && d("den/metrics.json").exists());

    let out = hamsig(&[
        "kfold", "--manifest", path(&manifest), "--k", "2", "--max-epochs", "1", "--out", path(&d("kf")),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(d("kf/kfold_report.json").exists());
    assert!(d("kf/fold_1/report.json").exists());
}
