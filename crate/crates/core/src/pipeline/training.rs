//! Training commands: a single train/val/test run and k-fold cross-validation.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::evaluate::{evaluate_records, EvalRecords};
use super::{ensure_dir, write_json, write_resolved, Dataset, HISTORY_FILE, MODEL_FILE, REPORT_JSON, SPLITS_FILE};
use crate::error::{Error, Result};
use crate::eval::report::{sha256_hex, AggregateMetrics};
use crate::nn::{build_classifier, build_denoiser, kfold_split, model_to_bytes, train_with_progress};
use crate::nn::{EpochRecord, Example, History, LossKind, Model, TrainConfig};
use crate::rng::{derive_seed, SeededRng};
use crate::signal::SignalClass;
use crate::tasks::{classifier_example, denoiser_example};

const SPLIT_SALT: u64 = 0x5b11_7000;
const INIT_SALT: u64 = 0x1417_0000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    /// Binary clean/noisy classifier.
    Classify,
    /// Spectral-mask denoiser.
    Denoise,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::Classify => "classify",
            Task::Denoise => "denoise",
        }
    }
}

impl std::str::FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "classify" => Ok(Task::Classify),
            "denoise" => Ok(Task::Denoise),
            other => Err(Error::Config(format!("unknown task {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainRunConfig {
    pub task: Task,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub loss: LossKind,
    pub seed: u64,
    pub validation_fraction: f64,
    /// Held out for evaluation; may be zero.
    pub test_fraction: f64,
}

impl Default for TrainRunConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            task: Task::Classify,
            learning_rate: t.learning_rate,
            batch_size: t.batch_size,
            max_epochs: t.max_epochs,
            patience: t.patience,
            loss: t.loss,
            seed: t.seed,
            validation_fraction: t.validation_fraction,
            test_fraction: 0.15,
        }
    }
}

impl TrainRunConfig {
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            max_epochs: self.max_epochs,
            patience: self.patience,
            loss: self.loss,
            seed: self.seed,
            validation_fraction: self.validation_fraction,
        }
    }

    fn validate(&self) -> Result<()> {
        self.train_config().validate()?;
        if !(0.0..1.0).contains(&self.test_fraction)
            || self.test_fraction + self.validation_fraction >= 1.0
        {
            return Err(Error::Config(format!(
                "test_fraction {} must be in [0, 1) and leave room for training",
                self.test_fraction
            )));
        }
        Ok(())
    }
}

/// Record ids of each split.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Splits {
    pub task: Option<Task>,
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
}

impl Splits {
    pub fn subset(&self, name: &str) -> Result<&[String]> {
        match name {
            "train" => Ok(&self.train),
            "val" => Ok(&self.val),
            "test" => Ok(&self.test),
            other => Err(Error::Config(format!("unknown subset {other:?}; use train, val or test"))),
        }
    }
}

/// Examples for the records a task can use, with their record indices.
pub(crate) struct TaskData {
    pub indices: Vec<usize>,
    pub examples: Vec<Example>,
    /// Stratification key per example.
    pub strata: Vec<String>,
    pub n_skipped: usize,
}

/// Classify uses every labelled record. Denoise uses modulated records
/// with a numeric SNR whose stored file the generator reproduces, so the
/// clean reference is known.
pub(crate) fn task_data(data: &Dataset, task: Task) -> Result<TaskData> {
    let mut out = TaskData {
        indices: Vec::new(),
        examples: Vec::new(),
        strata: Vec::new(),
        n_skipped: 0,
    };
    for (i, record) in data.records.iter().enumerate() {
        let example = match task {
            Task::Classify => match record.binary_label {
                Some(label) => Some((classifier_example(&data.signal(record)?, label)?, label.as_str().to_string())),
                None => None,
            },
            Task::Denoise => {
                if record.class == SignalClass::Noise || record.snr_db.db().is_none() {
                    None
                } else {
                    let stored = data.signal(record)?;
                    match data.regenerate(record, &stored)? {
                        Some(r) => Some((denoiser_example(&r.clean, &stored)?, record.class.to_string())),
                        None => None,
                    }
                }
            }
        };
        match example {
            Some((ex, key)) => {
                if let Some(first) = out.examples.first() {
                    if first.input.shape() != ex.input.shape() {
                        return Err(Error::InvalidDataset(format!(
                            "record {} has input shape {:?}, expected {:?}; all records need one length",
                            record.id,
                            ex.input.shape(),
                            first.input.shape()
                        )));
                    }
                }
                out.indices.push(i);
                out.examples.push(ex);
                out.strata.push(key);
            }
            None => out.n_skipped += 1,
        }
    }
    if out.examples.is_empty() {
        return Err(Error::EmptyDataset(format!(
            "no records in {} usable for the {} task",
            data.manifest.display(),
            task.as_str()
        )));
    }
    Ok(out)
}

/// Stratified split of positions `0..strata.len()` into train/val/test.
/// Within each stratum the order is shuffled and the first
/// `round(n·test)` go to test, the next `round(n·val)` to validation.
pub fn stratified_split(strata: &[String], val_fraction: f64, test_fraction: f64, seed: u64) -> [Vec<usize>; 3] {
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, s) in strata.iter().enumerate() {
        groups.entry(s).or_default().push(i);
    }
    let mut rng = SeededRng::new(seed);
    let (mut train, mut val, mut test) = (Vec::new(), Vec::new(), Vec::new());
    for members in groups.values_mut() {
        rng.shuffle(members);
        let n = members.len() as f64;
        let n_test = (n * test_fraction).round() as usize;
        let n_val = ((n * val_fraction).round() as usize).min(members.len() - n_test);
        test.extend_from_slice(&members[..n_test]);
        val.extend_from_slice(&members[n_test..n_test + n_val]);
        train.extend_from_slice(&members[n_test + n_val..]);
    }
    for v in [&mut train, &mut val, &mut test] {
        v.sort_unstable();
    }
    [train, val, test]
}

fn build_model(task: Task, input_shape: &[usize], seed: u64) -> Result<Model> {
    let seed = derive_seed(seed, INIT_SALT);
    match task {
        Task::Classify => build_classifier(input_shape, 1, seed),
        Task::Denoise => build_denoiser(input_shape, seed),
    }
}

fn pick(examples: &[Example], positions: &[usize]) -> Vec<Example> {
    positions.iter().map(|&p| examples[p].clone()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub task: Task,
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    pub n_skipped: usize,
    pub model_sha256: String,
    pub history: History,
}

/// Trains one model. Writes the model, its history, the split ids and the
/// resolved config to `out_dir`.
pub fn train(
    manifest: &Path,
    config: &TrainRunConfig,
    out_dir: &Path,
    progress: &mut dyn FnMut(&EpochRecord),
) -> Result<TrainSummary> {
    config.validate()?;
    let data = Dataset::open(manifest)?;
    let td = task_data(&data, config.task)?;
    let [tr, va, te] = stratified_split(
        &td.strata,
        config.validation_fraction,
        config.test_fraction,
        derive_seed(config.seed, SPLIT_SALT),
    );
    let model = build_model(config.task, td.examples[0].input.shape(), config.seed)?;
    let (model, history) = train_with_progress(
        model,
        &pick(&td.examples, &tr),
        &pick(&td.examples, &va),
        &config.train_config(),
        progress,
    )?;

    ensure_dir(out_dir)?;
    let ids = |ps: &[usize]| -> Vec<String> { ps.iter().map(|&p| data.records[td.indices[p]].id.clone()).collect() };
    let splits = Splits {
        task: Some(config.task),
        train: ids(&tr),
        val: ids(&va),
        test: ids(&te),
    };
    let bytes = model_to_bytes(&model);
    let path = out_dir.join(MODEL_FILE);
    std::fs::write(&path, &bytes).map_err(|e| Error::io(&path, e))?;
    write_json(&out_dir.join(HISTORY_FILE), &history)?;
    write_json(&out_dir.join(SPLITS_FILE), &splits)?;
    write_resolved(out_dir, config)?;
    Ok(TrainSummary {
        task: config.task,
        n_train: tr.len(),
        n_val: va.len(),
        n_test: te.len(),
        n_skipped: td.n_skipped,
        model_sha256: sha256_hex(&bytes),
        history,
    })
}

fn default_k() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KfoldConfig {
    #[serde(default = "default_k")]
    pub k: usize,
    pub task: Task,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub loss: LossKind,
    pub seed: u64,
    /// Share of each fold's training part held out for early stopping.
    pub validation_fraction: f64,
}

impl Default for KfoldConfig {
    fn default() -> Self {
        let t = TrainRunConfig::default();
        Self {
            k: default_k(),
            task: t.task,
            learning_rate: t.learning_rate,
            batch_size: t.batch_size,
            max_epochs: t.max_epochs,
            patience: t.patience,
            loss: t.loss,
            seed: t.seed,
            validation_fraction: t.validation_fraction,
        }
    }
}

impl KfoldConfig {
    fn run_config(&self) -> TrainRunConfig {
        TrainRunConfig {
            task: self.task,
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            max_epochs: self.max_epochs,
            patience: self.patience,
            loss: self.loss,
            seed: self.seed,
            validation_fraction: self.validation_fraction,
            test_fraction: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    pub best_epoch: usize,
    pub aggregate: AggregateMetrics,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Population standard deviation; `None` when no fold has the metric.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Some(Self { mean, std: var.sqrt() })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KfoldSummary {
    pub task: Task,
    pub k: usize,
    pub folds: Vec<FoldResult>,
    pub accuracy: Option<MeanStd>,
    pub f1: Option<MeanStd>,
    pub snr_improvement_db: Option<MeanStd>,
}

/// Stratified k-fold cross-validation. Fold `i` is held out for testing
/// while the rest is split into train and validation. Writes
/// `fold_i/{history,report}.json` and `kfold_report.json`.
pub fn kfold(manifest: &Path, config: &KfoldConfig, out_dir: &Path) -> Result<KfoldSummary> {
    let run = config.run_config();
    run.validate()?;
    let data = Dataset::open(manifest)?;
    let td = task_data(&data, config.task)?;
    let folds = kfold_split(&td.strata, config.k, derive_seed(config.seed, SPLIT_SALT))?;
    ensure_dir(out_dir)?;
    write_resolved(out_dir, config)?;

    let mut results = Vec::with_capacity(folds.len());
    for (f, test_fold) in folds.iter().enumerate() {
        let rest: Vec<usize> = (0..td.examples.len()).filter(|p| !test_fold.contains(p)).collect();
        let rest_strata: Vec<String> = rest.iter().map(|&p| td.strata[p].clone()).collect();
        let [tr, va, _] = stratified_split(
            &rest_strata,
            config.validation_fraction,
            0.0,
            derive_seed(config.seed, SPLIT_SALT + 1 + f as u64),
        );
        let tr: Vec<usize> = tr.iter().map(|&i| rest[i]).collect();
        let va: Vec<usize> = va.iter().map(|&i| rest[i]).collect();
        let model = build_model(config.task, td.examples[0].input.shape(), derive_seed(config.seed, f as u64))?;
        let (model, history) = train_with_progress(
            model,
            &pick(&td.examples, &tr),
            &pick(&td.examples, &va),
            &run.train_config(),
            &mut |_| {},
        )?;
        let test_records: Vec<usize> = test_fold.iter().map(|&p| td.indices[p]).collect();
        let EvalRecords { records, classification, .. } = evaluate_records(&model, &data, &test_records)?;
        let aggregate = AggregateMetrics::from_records(&records, classification);
        let dir = out_dir.join(format!("fold_{f}"));
        ensure_dir(&dir)?;
        write_json(&dir.join(HISTORY_FILE), &history)?;
        write_json(
            &dir.join(REPORT_JSON),
            &serde_json::json!({ "fold": f, "aggregate": aggregate, "records": records }),
        )?;
        results.push(FoldResult {
            fold: f,
            n_train: tr.len(),
            n_val: va.len(),
            n_test: test_fold.len(),
            best_epoch: history.best_epoch,
            aggregate,
        });
    }
    let collect = |g: fn(&AggregateMetrics) -> Option<f64>| -> Option<MeanStd> {
        MeanStd::of(&results.iter().filter_map(|r| g(&r.aggregate)).collect::<Vec<_>>())
    };
    let summary = KfoldSummary {
        task: config.task,
        k: config.k,
        accuracy: collect(|a| a.accuracy),
        f1: collect(|a| a.f1),
        snr_improvement_db: collect(|a| a.snr_improvement_db),
        folds: results,
    };
    write_json(&out_dir.join("kfold_report.json"), &summary)?;
    Ok(summary)
}
