//! Linear-phase windowed-sinc FIR filters (Hamming window).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::SampleBuffer;

pub const MIN_TAPS: usize = 11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterKind {
    Lowpass,
    Highpass,
    Bandpass,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FirFilter {
    pub taps: Vec<f64>,
    pub kind: FilterKind,
    pub cutoffs: Vec<f64>,
    pub sample_rate: u32,
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

fn hamming(n_taps: usize) -> Vec<f64> {
    let m = (n_taps - 1) as f64;
    (0..n_taps)
        .map(|i| 0.54 - 0.46 * (2.0 * PI * i as f64 / m).cos())
        .collect()
}

/// Unit-DC-gain lowpass prototype.
fn lowpass_taps(cutoff: f64, n_taps: usize, sample_rate: u32) -> Vec<f64> {
    let fc = cutoff / sample_rate as f64;
    let mid = (n_taps / 2) as isize;
    let window = hamming(n_taps);
    let raw: Vec<f64> = (0..n_taps)
        .map(|i| {
            let k = (i as isize - mid) as f64;
            2.0 * fc * sinc(2.0 * fc * k) * window[i]
        })
        .collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|h| h / sum).collect()
}

fn symmetrize(taps: &mut [f64]) {
    let n = taps.len();
    for i in 0..n / 2 {
        let avg = 0.5 * (taps[i] + taps[n - 1 - i]);
        taps[i] = avg;
        taps[n - 1 - i] = avg;
    }
}

pub fn design_fir(
    kind: FilterKind,
    cutoffs: &[f64],
    n_taps: usize,
    sample_rate: u32,
) -> Result<FirFilter> {
    if n_taps < MIN_TAPS || n_taps.is_multiple_of(2) {
        return Err(Error::param(format!(
            "n_taps must be odd and >= {MIN_TAPS}, got {n_taps}"
        )));
    }
    let nyquist = sample_rate as f64 / 2.0;
    let expected = if kind == FilterKind::Bandpass { 2 } else { 1 };
    if cutoffs.len() != expected {
        return Err(Error::param(format!(
            "{kind:?} takes {expected} cutoff(s), got {}",
            cutoffs.len()
        )));
    }
    if let Some(c) = cutoffs.iter().find(|&&c| !(c > 0.0 && c < nyquist)) {
        return Err(Error::param(format!(
            "cutoff {c} Hz must lie strictly inside (0, {nyquist})"
        )));
    }
    let mid = n_taps / 2;
    let mut taps = match kind {
        FilterKind::Lowpass => lowpass_taps(cutoffs[0], n_taps, sample_rate),
        FilterKind::Highpass => {
            let mut h: Vec<f64> = lowpass_taps(cutoffs[0], n_taps, sample_rate)
                .into_iter()
                .map(|x| -x)
                .collect();
            h[mid] += 1.0;
            h
        }
        FilterKind::Bandpass => {
            let (lo, hi) = (cutoffs[0], cutoffs[1]);
            if lo >= hi {
                return Err(Error::param(format!(
                    "bandpass edges must increase, got {lo}..{hi}"
                )));
            }
            let upper = lowpass_taps(hi, n_taps, sample_rate);
            let lower = lowpass_taps(lo, n_taps, sample_rate);
            upper.iter().zip(&lower).map(|(a, b)| a - b).collect()
        }
    };
    symmetrize(&mut taps);
    Ok(FirFilter {
        taps,
        kind,
        cutoffs: cutoffs.to_vec(),
        sample_rate,
    })
}

impl FirFilter {
    /// Magnitude response at `freq` by direct DTFT evaluation.
    pub fn gain_at(&self, freq: f64) -> f64 {
        let w = 2.0 * PI * freq / self.sample_rate as f64;
        let (re, im) = self
            .taps
            .iter()
            .enumerate()
            .fold((0.0, 0.0), |(re, im), (n, h)| {
                (re + h * (w * n as f64).cos(), im - h * (w * n as f64).sin())
            });
        (re * re + im * im).sqrt()
    }

    pub fn gain_db(&self, freq: f64) -> f64 {
        20.0 * self.gain_at(freq).log10()
    }
}

/// Direct-form convolution with the group delay removed, so the output is
/// aligned with and as long as the input.
pub fn apply_fir(buf: &SampleBuffer, filter: &FirFilter) -> Result<SampleBuffer> {
    let taps = &filter.taps;
    let x = buf.samples();
    if x.len() < taps.len() {
        return Err(Error::TooShort {
            len: x.len(),
            needed: taps.len(),
            hint: "FIR input must be at least as long as the filter",
        });
    }
    let delay = (taps.len() - 1) / 2;
    let n = x.len();
    let out = (0..n)
        .map(|i| {
            // y[i] = Σ_k h[k]·x[i + delay − k]
            let lo = (i + delay + 1).saturating_sub(n);
            let hi = (i + delay).min(taps.len() - 1);
            (lo..=hi).map(|k| taps[k] * x[i + delay - k]).sum()
        })
        .collect();
    buf.with_samples(out)
}
