use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::eval::metrics::ClassificationReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Markdown,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            other => Err(Error::param(format!("unknown report format {other:?}"))),
        }
    }
}

/// Per-record metrics. Fields that do not apply to the task are null.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordMetrics {
    pub id: String,
    pub class: String,
    pub label: Option<String>,
    pub predicted: Option<String>,
    pub score: Option<f64>,
    pub input_snr_db: Option<f64>,
    pub output_snr_db: Option<f64>,
    pub snr_improvement_db: Option<f64>,
    pub spectrogram_mse_noisy: Option<f64>,
    pub spectrogram_mse_denoised: Option<f64>,
    pub ber_before: Option<f64>,
    pub ber_after: Option<f64>,
}

impl RecordMetrics {
    pub fn new(id: impl Into<String>, class: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            class: class.into(),
            label: None,
            predicted: None,
            score: None,
            input_snr_db: None,
            output_snr_db: None,
            snr_improvement_db: None,
            spectrogram_mse_noisy: None,
            spectrogram_mse_denoised: None,
            ber_before: None,
            ber_after: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateMetrics {
    pub n_records: usize,
    pub input_snr_db: Option<f64>,
    pub output_snr_db: Option<f64>,
    pub snr_improvement_db: Option<f64>,
    pub spectrogram_mse_noisy: Option<f64>,
    pub spectrogram_mse_denoised: Option<f64>,
    /// Share of records whose denoised spectrogram is closer to the clean one.
    pub mse_improved_fraction: Option<f64>,
    pub ber_before: Option<f64>,
    pub ber_after: Option<f64>,
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub confusion_matrix: Option<Vec<Vec<usize>>>,
    pub classification: Option<ClassificationReport>,
}

/// Mean of the values that are present, or `None` when there are none.
pub fn mean_present(values: impl IntoIterator<Item = Option<f64>>) -> Option<f64> {
    let (sum, n) = values
        .into_iter()
        .flatten()
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

impl AggregateMetrics {
    pub fn from_records(records: &[RecordMetrics], classification: Option<ClassificationReport>) -> Self {
        let mean = |f: fn(&RecordMetrics) -> Option<f64>| mean_present(records.iter().map(f));
        let compared: Vec<bool> = records
            .iter()
            .filter_map(|r| Some(r.spectrogram_mse_denoised? < r.spectrogram_mse_noisy?))
            .collect();
        Self {
            n_records: records.len(),
            input_snr_db: mean(|r| r.input_snr_db),
            output_snr_db: mean(|r| r.output_snr_db),
            snr_improvement_db: mean(|r| r.snr_improvement_db),
            spectrogram_mse_noisy: mean(|r| r.spectrogram_mse_noisy),
            spectrogram_mse_denoised: mean(|r| r.spectrogram_mse_denoised),
            mse_improved_fraction: (!compared.is_empty())
                .then(|| compared.iter().filter(|&&b| b).count() as f64 / compared.len() as f64),
            ber_before: mean(|r| r.ber_before),
            ber_after: mean(|r| r.ber_after),
            accuracy: classification.as_ref().map(|c| c.accuracy),
            precision: classification.as_ref().map(|c| c.macro_precision),
            recall: classification.as_ref().map(|c| c.macro_recall),
            f1: classification.as_ref().map(|c| c.macro_f1),
            confusion_matrix: classification.as_ref().map(|c| c.confusion_matrix.clone()),
            classification,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub task: String,
    /// The only field that differs between identical runs.
    pub generated_at: String,
    pub model_sha256: String,
    pub dataset_sha256: String,
    pub config: serde_json::Value,
    pub aggregate: AggregateMetrics,
    pub records: Vec<RecordMetrics>,
}

pub const TIMESTAMP_KEY: &str = "generated_at";

pub fn timestamp_now() -> String {
    humantime::format_rfc3339_seconds(std::time::SystemTime::now()).to_string()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::with_capacity(2 * bytes.len()), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

/// Digest over a manifest and every file it references, in manifest order.
pub fn dataset_sha256(manifest: &Path, files: &[std::path::PathBuf]) -> Result<String> {
    let mut h = Sha256::new();
    h.update(std::fs::read(manifest).map_err(|e| Error::io(manifest, e))?);
    for f in files {
        h.update(std::fs::read(f).map_err(|e| Error::io(f, e))?);
    }
    Ok(hex(&h.finalize()))
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.6}"))
}

pub fn render_markdown(report: &EvalReport) -> String {
    let a = &report.aggregate;
    let mut s = String::new();
    let _ = writeln!(s, "# Evaluation report ({})\n", report.task);
    let _ = writeln!(s, "- generated_at: {}", report.generated_at);
    let _ = writeln!(s, "- model_sha256: `{}`", report.model_sha256);
    let _ = writeln!(s, "- dataset_sha256: `{}`", report.dataset_sha256);
    let _ = writeln!(s, "- n_records: {}\n", a.n_records);
    let _ = writeln!(s, "| metric | value |\n|---|---|");
    for (name, v) in [
        ("input_snr_db", a.input_snr_db),
        ("output_snr_db", a.output_snr_db),
        ("snr_improvement_db", a.snr_improvement_db),
        ("spectrogram_mse_noisy", a.spectrogram_mse_noisy),
        ("spectrogram_mse_denoised", a.spectrogram_mse_denoised),
        ("mse_improved_fraction", a.mse_improved_fraction),
        ("ber_before", a.ber_before),
        ("ber_after", a.ber_after),
        ("accuracy", a.accuracy),
        ("precision", a.precision),
        ("recall", a.recall),
        ("f1", a.f1),
    ] {
        let _ = writeln!(s, "| {name} | {} |", cell(v));
    }
    if let Some(c) = &a.classification {
        let _ = writeln!(s, "\n## confusion_matrix\n\nRows are true classes, columns predictions.\n");
        let _ = writeln!(s, "| | {} |", c.classes.join(" | "));
        let _ = writeln!(s, "|---|{}", "---|".repeat(c.classes.len()));
        for (name, row) in c.classes.iter().zip(&c.confusion_matrix) {
            let cells: Vec<String> = row.iter().map(usize::to_string).collect();
            let _ = writeln!(s, "| {name} | {} |", cells.join(" | "));
        }
        let _ = writeln!(s, "\n| class | precision | recall | f1 | support |\n|---|---|---|---|---|");
        for m in &c.per_class {
            let _ = writeln!(
                s,
                "| {} | {:.6} | {:.6} | {:.6} | {} |",
                m.class, m.precision, m.recall, m.f1, m.support
            );
        }
    }
    s
}

pub fn report_to_json(report: &EvalReport) -> Result<String> {
    let mut s = serde_json::to_string_pretty(report)?;
    s.push('\n');
    Ok(s)
}

pub fn emit_report(report: &EvalReport, path: &Path, format: ReportFormat) -> Result<()> {
    let text = match format {
        ReportFormat::Json => report_to_json(report)?,
        ReportFormat::Markdown => render_markdown(report),
    };
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
