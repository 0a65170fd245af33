//! Manifest consistency checks against the files on disk.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::record::{binary_label_for, DatasetRecord, SnrDb};
use crate::signal::SignalClass;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Malformed,
    InvalidField,
    DuplicateId,
    MissingFile,
    WrongLength,
    LabelMismatch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub line: usize,
    pub id: Option<String>,
    pub kind: ViolationKind,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub n_records: usize,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn count(&self, kind: ViolationKind) -> usize {
        self.violations.iter().filter(|v| v.kind == kind).count()
    }

    pub fn render_text(&self) -> String {
        let mut out = format!(
            "manifest validation: {} records, {} violation(s)\n",
            self.n_records,
            self.violations.len()
        );
        for v in &self.violations {
            let _ = writeln!(
                out,
                "  line {:>5}  {:<14} {:<16} {}",
                v.line,
                format!("{:?}", v.kind),
                v.id.as_deref().unwrap_or("-"),
                v.message
            );
        }
        out
    }
}

/// Parsed records of a manifest (lines that failed to parse are skipped).
pub fn validate_manifest(manifest_path: &Path, data_root: &Path) -> Result<(ValidationReport, Vec<DatasetRecord>)> {
    let text = fs::read_to_string(manifest_path).map_err(|e| Error::io(manifest_path, e))?;
    Ok(validate_manifest_text(&text, data_root))
}

pub fn validate_manifest_text(text: &str, data_root: &Path) -> (ValidationReport, Vec<DatasetRecord>) {
    let mut violations = Vec::new();
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    let mut n_records = 0;
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        n_records += 1;
        let lineno = i + 1;
        let mut push = |id: Option<String>, kind, message: String| {
            violations.push(Violation {
                line: lineno,
                id,
                kind,
                message,
            })
        };
        let value: serde_json::Value = match serde_json::from_str(line) {
            Ok(v) => v,
            Err(e) => {
                push(None, ViolationKind::Malformed, e.to_string());
                continue;
            }
        };
        let raw_id = value.get("id").and_then(|v| v.as_str()).map(str::to_owned);
        let record: DatasetRecord = match serde_json::from_value(value) {
            Ok(r) => r,
            Err(e) => {
                push(raw_id, ViolationKind::InvalidField, e.to_string());
                continue;
            }
        };
        let id = Some(record.id.clone());
        if !seen.insert(record.id.clone()) {
            push(id.clone(), ViolationKind::DuplicateId, "id already used".into());
        }
        if record.class == SignalClass::Noise && record.snr_db == SnrDb::Clean {
            push(
                id.clone(),
                ViolationKind::InvalidField,
                "noise records need a numeric snr_db".into(),
            );
        }
        if !(record.duration_s > 0.0) || record.sample_rate == 0 {
            push(
                id.clone(),
                ViolationKind::InvalidField,
                "duration_s and sample_rate must be positive".into(),
            );
        }
        let expected_label = binary_label_for(record.snr_db);
        if record.binary_label != expected_label {
            push(
                id.clone(),
                ViolationKind::LabelMismatch,
                format!(
                    "binary_label {:?} inconsistent with snr_db {} (expected {:?})",
                    record.binary_label.map(|l| l.as_str()),
                    record.snr_db,
                    expected_label.map(|l| l.as_str())
                ),
            );
        }
        let path = data_root.join(&record.path);
        match fs::metadata(&path) {
            Err(_) => push(
                id.clone(),
                ViolationKind::MissingFile,
                format!("{} not found", path.display()),
            ),
            Ok(meta) => {
                let expected = 4 * record.n_samples() as u64;
                if meta.len() != expected {
                    push(
                        id.clone(),
                        ViolationKind::WrongLength,
                        format!("{} bytes, expected {expected}", meta.len()),
                    );
                }
            }
        }
        records.push(record);
    }
    (
        ValidationReport {
            n_records,
            violations,
        },
        records,
    )
}
