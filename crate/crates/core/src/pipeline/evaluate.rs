//! Model evaluation over a manifest and single-file inference.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::training::Splits;
use super::{ensure_dir, read_config_file, write_json, write_resolved, Dataset, REPORT_JSON, REPORT_MARKDOWN};
use crate::error::{Error, Result};
use crate::eval::report::{dataset_sha256, emit_report, sha256_hex, timestamp_now};
use crate::eval::{
    ber, classification_report, cw_unit_bits, decode_psk31, psk31_bits_within, snr_improvement, spectrogram_mse,
    AggregateMetrics, ClassificationReport, EvalReport, RecordMetrics, ReportFormat, SnrImprovement,
};
use crate::io::{read_raw_f32, wav_read, wav_write};
use crate::nn::{model_from_bytes, Model};
use crate::record::BinaryLabel;
use crate::signal::SampleBuffer;
use crate::synth::dataset::Truth;
use crate::tasks::{classifier_input, denoise, label_for_score, spectrogram};

const LABELS: [&str; 2] = ["clean", "noisy"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    /// `splits.json` from a training run; without it every record is used.
    pub splits: Option<PathBuf>,
    /// Which split to evaluate when `splits` is given.
    pub subset: String,
    pub format: ReportFormat,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            splits: None,
            subset: "test".into(),
            format: ReportFormat::Json,
        }
    }
}

pub(crate) fn load_model_bytes(path: &Path) -> Result<(Model, Vec<u8>)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok((model_from_bytes(&bytes)?, bytes))
}

pub(crate) struct EvalRecords {
    pub records: Vec<RecordMetrics>,
    pub classification: Option<ClassificationReport>,
    pub n_skipped: usize,
}

/// Transmitted and received bit streams for the decodable classes.
fn bits_pair(truth: &Truth, buf: &SampleBuffer) -> Result<Option<(Vec<bool>, Vec<bool>)>> {
    match truth {
        Truth::Psk31 { bits, carrier_freq } => {
            let tx = psk31_bits_within(bits, buf.len(), buf.sample_rate()).to_vec();
            Ok(Some((tx, decode_psk31(buf, *carrier_freq)?)))
        }
        Truth::Cw { timeline, tone_freq } => {
            let tx = timeline.unit_bits_within(buf.len());
            let rx = cw_unit_bits(buf, timeline.wpm, *tone_freq, tx.len())?;
            Ok(Some((tx, rx)))
        }
        _ => Ok(None),
    }
}

fn record_ber(truth: &Truth, buf: &SampleBuffer) -> Result<Option<f64>> {
    match bits_pair(truth, buf)? {
        Some((tx, rx)) if !tx.is_empty() => Ok(Some(ber(&tx, &rx)?)),
        _ => Ok(None),
    }
}

/// Per-record metrics for the records at `indices`. Classifier models
/// score every record; denoisers skip records without a regenerable clean
/// reference.
pub(crate) fn evaluate_records(model: &Model, data: &Dataset, indices: &[usize]) -> Result<EvalRecords> {
    let mut out = Vec::with_capacity(indices.len());
    let mut n_skipped = 0;
    if model.is_classifier() {
        let (mut preds, mut labels) = (Vec::new(), Vec::new());
        for &i in indices {
            let record = &data.records[i];
            let score = model.predict(&classifier_input(&data.signal(record)?)?)?.data()[0];
            let predicted = label_for_score(score);
            let mut m = RecordMetrics::new(&record.id, record.class.as_str());
            m.score = Some(score);
            m.predicted = Some(predicted.as_str().into());
            if let Some(label) = record.binary_label {
                m.label = Some(label.as_str().into());
                labels.push(label.as_str());
                preds.push(predicted.as_str());
            }
            out.push(m);
        }
        let classification = if labels.is_empty() {
            None
        } else {
            Some(classification_report(&preds, &labels, &LABELS)?)
        };
        return Ok(EvalRecords {
            records: out,
            classification,
            n_skipped,
        });
    }
    for &i in indices {
        let record = &data.records[i];
        let noisy = data.signal(record)?;
        let Some(rendered) = data.regenerate(record, &noisy)? else {
            n_skipped += 1;
            continue;
        };
        let clean = &rendered.clean;
        let denoised = denoise(model, &noisy)?;
        let snr = snr_improvement(clean, &noisy, &denoised)?;
        let clean_spec = spectrogram(clean)?;
        let mut m = RecordMetrics::new(&record.id, record.class.as_str());
        m.label = record.binary_label.map(|l: BinaryLabel| l.as_str().into());
        m.input_snr_db = Some(snr.input_db);
        m.output_snr_db = Some(snr.output_db);
        m.snr_improvement_db = Some(snr.delta_db);
        m.spectrogram_mse_noisy = Some(spectrogram_mse(&spectrogram(&noisy)?, &clean_spec)?);
        m.spectrogram_mse_denoised = Some(spectrogram_mse(&spectrogram(&denoised)?, &clean_spec)?);
        m.ber_before = record_ber(&rendered.truth, &noisy)?;
        m.ber_after = record_ber(&rendered.truth, &denoised)?;
        out.push(m);
    }
    Ok(EvalRecords {
        records: out,
        classification: None,
        n_skipped,
    })
}

fn select(data: &Dataset, options: &EvalOptions) -> Result<Vec<usize>> {
    let Some(path) = &options.splits else {
        return Ok((0..data.records.len()).collect());
    };
    let splits: Splits = read_config_file(path)?;
    splits
        .subset(&options.subset)?
        .iter()
        .map(|id| {
            data.records
                .iter()
                .position(|r| &r.id == id)
                .ok_or_else(|| Error::InvalidDataset(format!("split id {id:?} is not in the manifest")))
        })
        .collect()
}

/// Evaluates a saved model on a manifest and writes `report.json`, plus
/// `report.md` for the markdown format. The report embeds content hashes,
/// never paths, so identical inputs give identical reports.
pub fn eval(model_path: &Path, manifest: &Path, options: &EvalOptions, out_dir: &Path) -> Result<EvalReport> {
    let (model, bytes) = load_model_bytes(model_path)?;
    let data = Dataset::open(manifest)?;
    let indices = select(&data, options)?;
    if indices.is_empty() {
        return Err(Error::EmptyDataset("no records selected for evaluation".into()));
    }
    let result = evaluate_records(&model, &data, &indices)?;
    let task = if model.is_classifier() { "classify" } else { "denoise" };
    let report = EvalReport {
        task: task.into(),
        generated_at: timestamp_now(),
        model_sha256: sha256_hex(&bytes),
        dataset_sha256: dataset_sha256(manifest, &data.files())?,
        config: serde_json::json!({
            "subset": options.splits.as_ref().map(|_| options.subset.clone()),
            "n_selected": indices.len(),
            "n_skipped": result.n_skipped,
        }),
        aggregate: AggregateMetrics::from_records(&result.records, result.classification),
        records: result.records,
    };
    ensure_dir(out_dir)?;
    write_resolved(out_dir, options)?;
    emit_report(&report, &out_dir.join(REPORT_JSON), ReportFormat::Json)?;
    if options.format == ReportFormat::Markdown {
        emit_report(&report, &out_dir.join(REPORT_MARKDOWN), ReportFormat::Markdown)?;
    }
    Ok(report)
}

/// Reads a PCM16 WAV, or a raw float32 file at `sample_rate`.
pub fn read_signal(path: &Path, sample_rate: u32) -> Result<SampleBuffer> {
    let is_wav = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("wav"));
    if is_wav {
        wav_read(path)
    } else {
        read_raw_f32(path, sample_rate)
    }
}

/// Samples covered by the model's spectrogram input.
fn model_span(model: &Model) -> Result<usize> {
    let shape = model.input_shape();
    let (bins, frames) = (shape[0], shape[1]);
    let fft = 2 * (bins - 1);
    if fft != crate::dsp::DEFAULT_FFT_SIZE || frames == 0 {
        return Err(Error::Shape {
            layer: 0,
            message: format!("model input {shape:?} does not match a {} point STFT", crate::dsp::DEFAULT_FFT_SIZE),
        });
    }
    Ok((frames - 1) * crate::dsp::DEFAULT_HOP + fft)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenoiseSummary {
    pub n_samples: usize,
    pub sample_rate: u32,
    pub n_blocks: usize,
    /// Present when a clean reference was supplied.
    pub snr: Option<SnrImprovement>,
}

/// Denoises a whole file in consecutive model-sized blocks (the last one
/// zero-padded). Writes `denoised.wav` and `metrics.json`.
pub fn denoise_file(
    model_path: &Path,
    input: &Path,
    sample_rate: u32,
    reference: Option<&Path>,
    out_dir: &Path,
) -> Result<DenoiseSummary> {
    let (model, _) = load_model_bytes(model_path)?;
    if model.is_classifier() {
        return Err(Error::Config("denoise needs a denoiser model, got a classifier".into()));
    }
    let span = model_span(&model)?;
    let noisy = read_signal(input, sample_rate)?;
    let mut out = Vec::with_capacity(noisy.len());
    let mut n_blocks = 0;
    for chunk in noisy.samples().chunks(span) {
        let block = noisy.with_samples(chunk.to_vec())?.fit_to(span)?;
        let d = denoise(&model, &block)?;
        out.extend_from_slice(&d.samples()[..chunk.len()]);
        n_blocks += 1;
    }
    let denoised = noisy.with_samples(out)?;
    let snr = match reference {
        Some(p) => {
            let clean = read_signal(p, noisy.sample_rate())?;
            Some(snr_improvement(&clean, &noisy, &denoised)?)
        }
        None => None,
    };
    let summary = DenoiseSummary {
        n_samples: denoised.len(),
        sample_rate: denoised.sample_rate(),
        n_blocks,
        snr,
    };
    ensure_dir(out_dir)?;
    wav_write(&denoised, &out_dir.join("denoised.wav"))?;
    write_json(&out_dir.join("metrics.json"), &summary)?;
    write_resolved(
        out_dir,
        &serde_json::json!({ "sample_rate": sample_rate, "reference": reference.is_some() }),
    )?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyResult {
    pub label: String,
    /// Probability that the input is noisy.
    pub score: f64,
}

/// Scores one file, truncated or zero-padded to the model's span.
pub fn classify(model_path: &Path, input: &Path, sample_rate: u32) -> Result<ClassifyResult> {
    let (model, _) = load_model_bytes(model_path)?;
    if !model.is_classifier() {
        return Err(Error::Config("classify needs a classifier model, got a denoiser".into()));
    }
    let span = model_span(&model)?;
    let buf = read_signal(input, sample_rate)?.fit_to(span)?;
    let score = model.predict(&classifier_input(&buf)?)?.data()[0];
    Ok(ClassifyResult {
        label: label_for_score(score).as_str().into(),
        score,
    })
}
