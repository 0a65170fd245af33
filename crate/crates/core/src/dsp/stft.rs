//! Short-time Fourier transform with a periodic Hann window and its
//! weighted overlap-add inverse.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dsp::fft::{forward_plan, inverse_plan};
use crate::dsp::matrix::Matrix;
use crate::error::{Error, Result};
use crate::signal::SampleBuffer;

pub const DEFAULT_FFT_SIZE: usize = 256;
pub const DEFAULT_HOP: usize = 128;

/// Floor below which the overlap-added window energy counts as zero.
const WINDOW_ENERGY_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    Hann,
}

/// Periodic Hann window of length `n`.
pub fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect()
}

/// Magnitude time-frequency matrix `[freq_bins × frames]` with the STFT
/// parameters that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub magnitudes: Matrix,
    pub phases: Option<Matrix>,
    pub fft_size: usize,
    pub hop: usize,
    pub window: Window,
    pub sample_rate: u32,
    /// Length of the analysed signal, restored by `istft`.
    pub n_samples: usize,
}

impl Spectrogram {
    pub fn n_bins(&self) -> usize {
        self.magnitudes.rows()
    }

    pub fn n_frames(&self) -> usize {
        self.magnitudes.cols()
    }

    pub fn bin_width_hz(&self) -> f64 {
        self.sample_rate as f64 / self.fft_size as f64
    }

    pub fn bin_frequency(&self, bin: usize) -> f64 {
        bin as f64 * self.bin_width_hz()
    }

    /// Bin holding the largest magnitude in `frame`.
    pub fn peak_bin(&self, frame: usize) -> usize {
        (0..self.n_bins())
            .max_by(|&a, &b| {
                self.magnitudes
                    .get(a, frame)
                    .total_cmp(&self.magnitudes.get(b, frame))
            })
            .unwrap_or(0)
    }

    pub fn same_geometry(&self, other: &Spectrogram) -> bool {
        self.magnitudes.shape() == other.magnitudes.shape()
            && self.fft_size == other.fft_size
            && self.hop == other.hop
            && self.sample_rate == other.sample_rate
    }

    /// Copy with magnitudes replaced (phases kept).
    pub fn with_magnitudes(&self, magnitudes: Matrix) -> Result<Self> {
        if magnitudes.shape() != self.magnitudes.shape() {
            return Err(Error::param("replacement magnitudes change the geometry"));
        }
        Ok(Self {
            magnitudes,
            ..self.clone()
        })
    }
}

pub fn frame_count(signal_len: usize, fft_size: usize, hop: usize) -> usize {
    if signal_len < fft_size {
        0
    } else {
        1 + (signal_len - fft_size) / hop
    }
}

fn check_geometry(fft_size: usize, hop: usize) -> Result<()> {
    if fft_size < 2 {
        return Err(Error::param("fft_size must be at least 2"));
    }
    if hop == 0 || hop > fft_size {
        return Err(Error::param(format!(
            "hop {hop} must be in 1..={fft_size}"
        )));
    }
    Ok(())
}

pub fn stft(buf: &SampleBuffer, fft_size: usize, hop: usize) -> Result<Spectrogram> {
    check_geometry(fft_size, hop)?;
    let x = buf.samples();
    if x.len() < fft_size {
        return Err(Error::TooShort {
            len: x.len(),
            needed: fft_size,
            hint: "pad the buffer to at least fft_size samples",
        });
    }
    let frames = frame_count(x.len(), fft_size, hop);
    let bins = fft_size / 2 + 1;
    let window = hann(fft_size);
    let plan = forward_plan(fft_size);
    let mut magnitudes = Matrix::zeros(bins, frames);
    let mut phases = Matrix::zeros(bins, frames);
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft_size];
    for f in 0..frames {
        let start = f * hop;
        for (i, s) in scratch.iter_mut().enumerate() {
            *s = Complex64::new(x[start + i] * window[i], 0.0);
        }
        plan.process(&mut scratch);
        for (k, v) in scratch.iter().take(bins).enumerate() {
            magnitudes.set(k, f, v.norm());
            phases.set(k, f, v.arg());
        }
    }
    Ok(Spectrogram {
        magnitudes,
        phases: Some(phases),
        fft_size,
        hop,
        window: Window::Hann,
        sample_rate: buf.sample_rate(),
        n_samples: x.len(),
    })
}

/// Smallest overlap-added window energy over one hop period in steady state.
fn min_window_energy(window: &[f64], hop: usize) -> f64 {
    (0..hop)
        .map(|r| {
            (r..window.len())
                .step_by(hop)
                .map(|i| window[i] * window[i])
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
}

pub fn istft(spec: &Spectrogram) -> Result<SampleBuffer> {
    let phases = spec
        .phases
        .as_ref()
        .ok_or_else(|| Error::param("spectrogram has no phases; cannot reconstruct"))?;
    let n = spec.fft_size;
    check_geometry(n, spec.hop)?;
    if spec.n_bins() != n / 2 + 1 {
        return Err(Error::param("bin count does not match fft_size"));
    }
    let window = hann(n);
    let full_coverage = min_window_energy(&window, spec.hop);
    if full_coverage < WINDOW_ENERGY_FLOOR {
        return Err(Error::param(format!(
            "Hann window with fft_size {n} and hop {} does not overlap-add to a nonzero sum",
            spec.hop
        )));
    }
    let frames = spec.n_frames();
    let covered = if frames == 0 { 0 } else { (frames - 1) * spec.hop + n };
    let out_len = spec.n_samples.max(covered).max(1);
    let mut out = vec![0.0; out_len];
    let mut norm = vec![0.0; out_len];
    let plan = inverse_plan(n);
    let mut scratch = vec![Complex64::new(0.0, 0.0); n];
    let bins = spec.n_bins();
    for f in 0..frames {
        for k in 0..bins {
            let v = Complex64::from_polar(spec.magnitudes.get(k, f), phases.get(k, f));
            scratch[k] = v;
            if k > 0 && k < n - k {
                scratch[n - k] = v.conj();
            }
        }
        scratch[0].im = 0.0;
        if n.is_multiple_of(2) {
            scratch[n / 2].im = 0.0;
        }
        plan.process(&mut scratch);
        let start = f * spec.hop;
        for i in 0..n {
            out[start + i] += scratch[i].re / n as f64 * window[i];
            norm[start + i] += window[i] * window[i];
        }
    }
    // Near the ends only one tapered frame contributes. Clamping the
    // normalizer there keeps a modified spectrogram from being amplified by
    // 1/w² while leaving fully covered samples exact.
    for (o, w) in out.iter_mut().zip(&norm) {
        *o /= w.max(full_coverage);
    }
    out.truncate(spec.n_samples.max(1));
    SampleBuffer::new(out, spec.sample_rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::tones::gen_tone;

    #[test]
    fn frame_and_bin_counts() {
        let b = SampleBuffer::zeros(8000, 8000).unwrap();
        let s = stft(&b, 256, 128).unwrap();
        assert_eq!(s.n_frames(), 61);
        assert_eq!(s.n_bins(), 129);
    }

    #[test]
    fn short_buffer_asks_for_padding() {
        let b = SampleBuffer::zeros(100, 8000).unwrap();
        match stft(&b, 256, 128) {
            Err(Error::TooShort { hint, .. }) => assert!(hint.contains("pad")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn dc_energy_stays_in_the_hann_mainlobe() {
        let b = SampleBuffer::new(vec![1.0; 1024], 8000).unwrap();
        let s = stft(&b, 256, 128).unwrap();
        for f in 0..s.n_frames() {
            let dc = s.magnitudes.get(0, f);
            assert!((dc - 128.0).abs() < 1e-9);
            // the periodic Hann transform is nonzero only at bins 0 and ±1
            assert!((s.magnitudes.get(1, f) - 64.0).abs() < 1e-9);
            for k in 2..s.n_bins() {
                assert!(s.magnitudes.get(k, f) < 1e-6 * dc);
            }
        }
    }

    #[test]
    fn bin_centred_tone_peaks_at_its_bin() {
        let k = 19;
        let freq = k as f64 * 8000.0 / 256.0;
        let b = gen_tone(freq, 1.0, 1.0, 8000, 0.2).unwrap();
        let s = stft(&b, 256, 128).unwrap();
        for f in 1..s.n_frames() - 1 {
            assert_eq!(s.peak_bin(f), k);
        }
    }

    #[test]
    fn round_trip_tone() {
        let b = gen_tone(600.0, 1.0, 1.0, 8000, 0.0).unwrap();
        let y = istft(&stft(&b, 256, 128).unwrap()).unwrap();
        assert_eq!(y.len(), b.len());
        let interior = 256..b.len() - 256;
        let err: f64 = interior
            .clone()
            .map(|i| (y.samples()[i] - b.samples()[i]).powi(2))
            .sum::<f64>()
            / interior.len() as f64;
        assert!(err.sqrt() < 1e-6);
    }

    #[test]
    fn zero_magnitudes_give_silence() {
        let b = gen_tone(600.0, 1.0, 0.25, 8000, 0.0).unwrap();
        let s = stft(&b, 256, 128).unwrap();
        let z = s.with_magnitudes(Matrix::zeros(129, s.n_frames())).unwrap();
        assert!(istft(&z).unwrap().samples().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn missing_phases_is_an_error() {
        let b = gen_tone(600.0, 1.0, 0.25, 8000, 0.0).unwrap();
        let mut s = stft(&b, 256, 128).unwrap();
        s.phases = None;
        assert!(istft(&s).is_err());
    }

    #[test]
    fn rejects_non_overlapping_hop() {
        let b = gen_tone(600.0, 1.0, 0.25, 8000, 0.0).unwrap();
        let s = stft(&b, 256, 256).unwrap();
        assert!(istft(&s).is_err());
    }
}
