//! Pipeline commands against real files in a temporary directory.

use hamsig::augment::AugmentOp;
use hamsig::io::read_manifest;
use hamsig::pipeline::{self, AugmentConfig, CleanConfig, EvalOptions, Task, TrainRunConfig};
use hamsig::synth::dataset::DatasetConfig;
use hamsig::{BinaryLabel, Error, SignalClass, SnrDb};

fn small_dataset(dir: &std::path::Path, per_class: usize, seed: u64) -> std::path::PathBuf {
    let mut c = pipeline::default_synth_config(per_class);
    c.master_seed = seed;
    pipeline::synth(&c, dir).unwrap();
    dir.join("manifest.jsonl")
}

#[test]
fn synth_is_byte_identical_across_runs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ma = small_dataset(a.path(), 2, 4);
    let mb = small_dataset(b.path(), 2, 4);
    assert_eq!(std::fs::read(&ma).unwrap(), std::fs::read(&mb).unwrap());
    for r in read_manifest(&ma).unwrap() {
        assert_eq!(
            std::fs::read(a.path().join(&r.path)).unwrap(),
            std::fs::read(b.path().join(&r.path)).unwrap()
        );
    }
}

#[test]
fn augment_relabels_noise_and_keeps_lengths_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = small_dataset(&dir.path().join("data"), 4, 1);
    let config = AugmentConfig {
        ops: vec![
            AugmentOp::Noise { snr_db: 0.0 },
            AugmentOp::CropPad { target_len: 6000 },
        ],
        seed: 2,
        include_source: false,
    };
    let out = dir.path().join("aug");
    let records = pipeline::augment(&manifest, &config, &out).unwrap();
    assert_eq!(records.len(), 40);
    for r in &records {
        if r.id.contains("-noise-") {
            // clean sources become 0 dB, noisy ones drop below 0 dB
            assert!(r.snr_db.db().unwrap() <= 0.0);
            assert_eq!(r.binary_label, Some(BinaryLabel::Noisy));
        } else {
            assert_eq!(r.n_samples(), 6000);
        }
    }
    let summary = pipeline::clean(&out.join("manifest.jsonl"), &CleanConfig::default(), &dir.path().join("c")).unwrap();
    assert!(summary.validation.is_valid(), "{:?}", summary.validation.violations);
}

#[test]
fn clean_filter_drops_flagged_records() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = small_dataset(&dir.path().join("data"), 6, 3);
    let config = CleanConfig {
        threshold: Some(1.0),
        filter: true,
        ..CleanConfig::default()
    };
    let out = dir.path().join("clean");
    let summary = pipeline::clean(&manifest, &config, &out).unwrap();
    let flagged = summary.outliers.as_ref().unwrap().flags.len();
    assert!(flagged > 0);
    let kept = read_manifest(&out.join("manifest.jsonl")).unwrap();
    assert_eq!(kept.len() + flagged, 30);
    assert_eq!(summary.n_kept, Some(kept.len()));
    assert!(out.join("clean_report.txt").exists());
}

#[test]
fn train_rejects_empty_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("manifest.jsonl");
    std::fs::write(&manifest, "").unwrap();
    let err = pipeline::train(&manifest, &TrainRunConfig::default(), dir.path(), &mut |_| {}).unwrap_err();
    assert!(matches!(err, Error::EmptyDataset(_)));
    assert_eq!(err.exit_code(), 1);
}

#[test]
fn invalid_manifest_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = small_dataset(&dir.path().join("data"), 1, 1);
    let text = std::fs::read_to_string(&manifest).unwrap().replacen("\"clean\"}", "\"noisy\"}", 1);
    std::fs::write(&manifest, text).unwrap();
    let err = pipeline::train(&manifest, &TrainRunConfig::default(), dir.path(), &mut |_| {}).unwrap_err();
    assert!(matches!(err, Error::InvalidDataset(_)), "{err}");
}

#[test]
fn denoiser_eval_reports_snr_and_ber() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let config = DatasetConfig {
        classes: [(SignalClass::Cw, 6), (SignalClass::Psk31, 6), (SignalClass::Am, 2)].into_iter().collect(),
        snr_grid: vec![SnrDb::Db(0.0)],
        duration_s: 1.0,
        sample_rate: 8000,
        master_seed: 8,
    };
    pipeline::synth(&config, &data).unwrap();
    let manifest = data.join("manifest.jsonl");
    let train = TrainRunConfig {
        task: Task::Denoise,
        batch_size: 4,
        max_epochs: 1,
        validation_fraction: 0.2,
        test_fraction: 0.2,
        ..TrainRunConfig::default()
    };
    let summary = pipeline::train(&manifest, &train, &dir.path().join("m"), &mut |_| {}).unwrap();
    assert_eq!(summary.n_skipped, 0);
    let report = pipeline::eval(
        &dir.path().join("m/model.hamnn"),
        &manifest,
        &EvalOptions::default(),
        &dir.path().join("r"),
    )
    .unwrap();
    assert_eq!(report.task, "denoise");
    assert_eq!(report.records.len(), 14);
    for r in &report.records {
        assert!(r.snr_improvement_db.is_some());
        let has_bits = r.class == "cw" || r.class == "psk31";
        assert_eq!(r.ber_before.is_some(), has_bits, "{}", r.id);
        if let Some(b) = r.ber_after {
            assert!((0.0..=1.0).contains(&b));
        }
    }
    assert!(report.aggregate.accuracy.is_none());
}

#[test]
fn eval_report_hash_tracks_dataset_content() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = small_dataset(&dir.path().join("data"), 2, 6);
    let train = TrainRunConfig {
        max_epochs: 1,
        validation_fraction: 0.3,
        test_fraction: 0.0,
        ..TrainRunConfig::default()
    };
    pipeline::train(&manifest, &train, &dir.path().join("m"), &mut |_| {}).unwrap();
    let model = dir.path().join("m/model.hamnn");
    let before = pipeline::eval(&model, &manifest, &EvalOptions::default(), &dir.path().join("r1")).unwrap();
    let signal = dir.path().join("data/signals/cw-00000.f32");
    let mut bytes = std::fs::read(&signal).unwrap();
    bytes[0] ^= 1;
    std::fs::write(&signal, bytes).unwrap();
    let after = pipeline::eval(&model, &manifest, &EvalOptions::default(), &dir.path().join("r2")).unwrap();
    assert_ne!(before.dataset_sha256, after.dataset_sha256);
    assert_eq!(before.model_sha256, after.model_sha256);
}
