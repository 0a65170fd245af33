//! Dataset commands: synthesis, augmentation and cleaning.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ensure_dir, write_json, write_resolved, Dataset};
use crate::augment::{apply, AugmentOp, AugmentSpec};
use crate::clean::outliers::{detect_outliers, FeatureTable, OutlierMethod, OutlierReport, MIN_RECORDS};
use crate::clean::validate::ValidationReport;
use crate::dsp::extract_features;
use crate::error::{Error, Result};
use crate::io::{write_manifest, write_raw_f32};
use crate::record::{binary_label_for, DatasetRecord, SnrDb};
use crate::rng::derive_seed;
use crate::signal::SignalClass;
use crate::synth::dataset::{synth_dataset, DatasetConfig, MANIFEST_FILE, SIGNAL_DIR};

/// Five modulated classes, `per_class` records each, cycling through
/// clean, 25, 0 and 5 dB so both binary labels are balanced.
pub fn default_synth_config(per_class: usize) -> DatasetConfig {
    DatasetConfig {
        classes: SignalClass::MODULATED.iter().map(|&c| (c, per_class)).collect(),
        snr_grid: vec![SnrDb::Clean, SnrDb::Db(25.0), SnrDb::Db(0.0), SnrDb::Db(5.0)],
        duration_s: 1.0,
        sample_rate: crate::signal::DEFAULT_SAMPLE_RATE,
        master_seed: 0,
    }
}

pub fn synth(config: &DatasetConfig, out_dir: &Path) -> Result<Vec<DatasetRecord>> {
    ensure_dir(out_dir)?;
    let records = synth_dataset(config, out_dir)?;
    write_resolved(out_dir, config)?;
    Ok(records)
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AugmentConfig {
    /// Each op is applied to every source record, producing one new record.
    pub ops: Vec<AugmentOp>,
    #[serde(default)]
    pub seed: u64,
    /// Copy the source records into the output dataset as well.
    #[serde(default = "default_true")]
    pub include_source: bool,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            ops: vec![AugmentOp::Gain { gain: 0.8 }, AugmentOp::Noise { snr_db: 10.0 }],
            seed: 0,
            include_source: true,
        }
    }
}

/// SNR after adding independent noise at `added` dB relative to a signal
/// that already had noise at `existing`. Noise powers add.
pub fn combined_snr(existing: SnrDb, added: f64) -> f64 {
    match existing {
        SnrDb::Clean => added,
        SnrDb::Db(s) => -10.0 * (10f64.powf(-s / 10.0) + 10f64.powf(-added / 10.0)).log10(),
    }
}

/// Writes a self-contained dataset to `out_dir`: optionally the sources,
/// plus one record per (source, op). Returns the output records.
pub fn augment(manifest: &Path, config: &AugmentConfig, out_dir: &Path) -> Result<Vec<DatasetRecord>> {
    if config.ops.is_empty() {
        return Err(Error::Config("augment needs at least one op".into()));
    }
    for op in &config.ops {
        op.validate()?;
    }
    let data = Dataset::open(manifest)?;
    ensure_dir(&out_dir.join(SIGNAL_DIR))?;
    let mut out = Vec::new();
    for (i, record) in data.records.iter().enumerate() {
        let buf = data.signal(record)?;
        if config.include_source {
            let path = format!("{SIGNAL_DIR}/{}.f32", record.id);
            write_raw_f32(&out_dir.join(&path), &buf)?;
            out.push(DatasetRecord {
                path,
                ..record.clone()
            });
        }
        let record_seed = derive_seed(config.seed, i as u64);
        for (k, op) in config.ops.iter().enumerate() {
            let spec = AugmentSpec {
                op: *op,
                seed: derive_seed(record_seed, k as u64),
            };
            let augmented = apply(&buf, &spec)?;
            let id = format!("{}-{}-{k}", record.id, op.name());
            let path = format!("{SIGNAL_DIR}/{id}.f32");
            write_raw_f32(&out_dir.join(&path), &augmented)?;
            let snr_db = match op {
                AugmentOp::Noise { snr_db } => SnrDb::Db(combined_snr(record.snr_db, *snr_db)),
                _ => record.snr_db,
            };
            out.push(DatasetRecord {
                id,
                path,
                class: record.class,
                snr_db,
                seed: record.seed,
                duration_s: augmented.len() as f64 / augmented.sample_rate() as f64,
                sample_rate: record.sample_rate,
                binary_label: binary_label_for(snr_db),
            });
        }
    }
    write_manifest(&out_dir.join(MANIFEST_FILE), &out)?;
    write_resolved(out_dir, config)?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[derive(Default)]
pub struct CleanConfig {
    #[serde(default)]
    pub method: OutlierMethod,
    /// Defaults to the method's own threshold.
    #[serde(default)]
    pub threshold: Option<f64>,
    /// Write a manifest without the flagged records.
    #[serde(default)]
    pub filter: bool,
}


#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleanSummary {
    pub validation: ValidationReport,
    /// Absent when the manifest is invalid or too small for statistics.
    pub outliers: Option<OutlierReport>,
    pub n_kept: Option<usize>,
}

/// Validates a manifest and flags feature outliers. Writes
/// `clean_report.json` and `clean_report.txt`, plus a filtered dataset
/// when asked. An invalid manifest is reported, not raised.
pub fn clean(manifest: &Path, config: &CleanConfig, out_dir: &Path) -> Result<CleanSummary> {
    ensure_dir(out_dir)?;
    write_resolved(out_dir, config)?;
    let root = crate::io::data_root(manifest);
    let (validation, records) = crate::clean::validate_manifest(manifest, &root)?;
    let mut summary = CleanSummary {
        validation,
        outliers: None,
        n_kept: None,
    };
    if summary.validation.is_valid() {
        let data = Dataset {
            manifest: manifest.to_path_buf(),
            root,
            records,
        };
        if data.records.len() >= MIN_RECORDS {
            let features = data
                .records
                .iter()
                .map(|r| extract_features(&data.signal(r)?, None))
                .collect::<Result<Vec<_>>>()?;
            let table =
                FeatureTable::from_features(data.records.iter().map(|r| r.id.as_str()).zip(&features))?;
            let threshold = config.threshold.unwrap_or(config.method.default_threshold());
            summary.outliers = Some(detect_outliers(&table, config.method, threshold)?);
        }
        if config.filter {
            summary.n_kept = Some(write_filtered(&data, summary.outliers.as_ref(), out_dir)?);
        }
    }
    write_json(&out_dir.join("clean_report.json"), &summary)?;
    let path = out_dir.join("clean_report.txt");
    fs::write(&path, render_clean_text(&summary)).map_err(|e| Error::io(&path, e))?;
    Ok(summary)
}

fn write_filtered(data: &Dataset, outliers: Option<&OutlierReport>, out_dir: &Path) -> Result<usize> {
    let flagged = outliers.map(|o| o.flagged_ids()).unwrap_or_default();
    ensure_dir(&out_dir.join(SIGNAL_DIR))?;
    let mut kept = Vec::new();
    for record in &data.records {
        if flagged.contains(&record.id.as_str()) {
            continue;
        }
        let path = format!("{SIGNAL_DIR}/{}.f32", record.id);
        let dest = out_dir.join(&path);
        fs::copy(data.signal_path(record), &dest).map_err(|e| Error::io(&dest, e))?;
        kept.push(DatasetRecord {
            path,
            ..record.clone()
        });
    }
    write_manifest(&out_dir.join(MANIFEST_FILE), &kept)?;
    Ok(kept.len())
}

fn render_clean_text(summary: &CleanSummary) -> String {
    let mut s = summary.validation.render_text();
    match &summary.outliers {
        Some(o) => {
            s.push_str(&format!(
                "outliers ({:?}, threshold {}): {} of {} records\n",
                o.method,
                o.threshold,
                o.flags.len(),
                o.n_records
            ));
            for f in &o.flags {
                let reasons: Vec<String> = f
                    .reasons
                    .iter()
                    .map(|r| format!("{}={:.4} (stat {:.3})", r.feature, r.value, r.statistic))
                    .collect();
                s.push_str(&format!("  {:<24} {}\n", f.id, reasons.join(", ")));
            }
        }
        None => s.push_str("outliers: not computed\n"),
    }
    if let Some(n) = summary.n_kept {
        s.push_str(&format!("filtered manifest: {n} records kept\n"));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noise_powers_add() {
        assert_eq!(combined_snr(SnrDb::Clean, 7.0), 7.0);
        // two equal noise sources double the noise power
        assert!((combined_snr(SnrDb::Db(10.0), 10.0) - (10.0 - 10.0 * 2f64.log10())).abs() < 1e-12);
    }

    #[test]
    fn default_config_round_trips() {
        let c = AugmentConfig::default();
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<AugmentConfig>(&text).unwrap(), c);
        assert!(serde_json::from_str::<CleanConfig>(r#"{"bogus": 1}"#).is_err());
    }
}
