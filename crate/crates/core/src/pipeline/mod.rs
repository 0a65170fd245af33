//! The end-to-end commands behind the `hamsig` binary. Every command takes
//! a typed config, writes its outputs plus `resolved_config.json` into an
//! output directory, and is deterministic given its inputs and seed.

mod data;
mod evaluate;
mod training;

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::clean::validate_manifest;
use crate::error::{Error, Result};
use crate::io::{data_root, read_raw_f32};
use crate::record::DatasetRecord;
use crate::signal::SampleBuffer;
use crate::synth::dataset::{render_record, Rendered};

pub use data::{augment, clean, default_synth_config, synth, AugmentConfig, CleanConfig, CleanSummary};
pub use evaluate::{classify, denoise_file, eval, ClassifyResult, DenoiseSummary, EvalOptions};
pub use training::{kfold, train, KfoldConfig, KfoldSummary, Splits, Task, TrainRunConfig, TrainSummary};

pub const RESOLVED_CONFIG_FILE: &str = "resolved_config.json";
pub const MODEL_FILE: &str = "model.hamnn";
pub const HISTORY_FILE: &str = "history.json";
pub const SPLITS_FILE: &str = "splits.json";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_MARKDOWN: &str = "report.md";

/// Reads a JSON config, or `default` when no file is given.
/// Unknown keys are rejected by the config types themselves.
pub fn read_config_or<T: DeserializeOwned>(path: Option<&Path>, default: T) -> Result<T> {
    match path {
        None => Ok(default),
        Some(p) => read_config_file(p),
    }
}

pub fn read_config_file<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub(crate) fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub(crate) fn write_resolved<T: Serialize>(out_dir: &Path, config: &T) -> Result<()> {
    write_json(&out_dir.join(RESOLVED_CONFIG_FILE), config)
}

/// A manifest that passed validation, with its data root.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub manifest: PathBuf,
    pub root: PathBuf,
    pub records: Vec<DatasetRecord>,
}

impl Dataset {
    /// Reads and validates a manifest; any violation is an error.
    pub fn open(manifest: &Path) -> Result<Self> {
        let root = data_root(manifest);
        let (report, records) = validate_manifest(manifest, &root)?;
        if !report.is_valid() {
            let first = &report.violations[0];
            return Err(Error::InvalidDataset(format!(
                "{} violation(s) in {}; first: line {}: {}",
                report.violations.len(),
                manifest.display(),
                first.line,
                first.message
            )));
        }
        Ok(Self {
            manifest: manifest.to_path_buf(),
            root,
            records,
        })
    }

    pub fn signal_path(&self, record: &DatasetRecord) -> PathBuf {
        self.root.join(&record.path)
    }

    pub fn signal(&self, record: &DatasetRecord) -> Result<SampleBuffer> {
        read_raw_f32(&self.signal_path(record), record.sample_rate)
    }

    pub fn files(&self) -> Vec<PathBuf> {
        self.records.iter().map(|r| self.signal_path(r)).collect()
    }

    /// The record's generator output when it reproduces the stored file
    /// exactly (at 32-bit precision); `None` for edited or augmented data.
    pub fn regenerate(&self, record: &DatasetRecord, stored: &SampleBuffer) -> Result<Option<Rendered>> {
        let rendered = match render_record(record) {
            Ok(r) => r,
            Err(_) => return Ok(None),
        };
        let same = rendered.observed.len() == stored.len()
            && rendered
                .observed
                .samples()
                .iter()
                .zip(stored.samples())
                .all(|(a, b)| (*a as f32) as f64 == *b);
        Ok(same.then_some(rendered))
    }
}
