//! Mel filterbank and MFCCs.

use std::f64::consts::PI;

use crate::dsp::matrix::Matrix;
use crate::dsp::stft::Spectrogram;
use crate::error::{Error, Result};

pub const DEFAULT_N_MELS: usize = 26;
pub const DEFAULT_N_MFCC: usize = 13;
pub const LOG_ENERGY_FLOOR: f64 = 1e-10;

pub fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

pub fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Triangular filters on mel-spaced centres, `[n_mels × (fft_size/2 + 1)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MelFilterbank {
    pub n_mels: usize,
    pub weights: Matrix,
    pub f_min: f64,
    pub f_max: f64,
    pub fft_size: usize,
    pub sample_rate: u32,
}

pub fn mel_filterbank(
    n_mels: usize,
    fft_size: usize,
    sample_rate: u32,
    f_min: f64,
    f_max: f64,
) -> Result<MelFilterbank> {
    let nyquist = sample_rate as f64 / 2.0;
    if n_mels == 0 {
        return Err(Error::param("n_mels must be positive"));
    }
    if !(0.0 <= f_min && f_min < f_max && f_max <= nyquist) {
        return Err(Error::param(format!(
            "need 0 <= f_min < f_max <= {nyquist}, got {f_min}..{f_max}"
        )));
    }
    let bins = fft_size / 2 + 1;
    let (mel_lo, mel_hi) = (hz_to_mel(f_min), hz_to_mel(f_max));
    let edges: Vec<f64> = (0..n_mels + 2)
        .map(|i| mel_to_hz(mel_lo + (mel_hi - mel_lo) * i as f64 / (n_mels + 1) as f64))
        .collect();
    let bin_hz = sample_rate as f64 / fft_size as f64;
    let mut weights = Matrix::zeros(n_mels, bins);
    for m in 0..n_mels {
        let (left, centre, right) = (edges[m], edges[m + 1], edges[m + 2]);
        for k in 0..bins {
            let f = k as f64 * bin_hz;
            let w = if f > left && f <= centre {
                (f - left) / (centre - left)
            } else if f > centre && f < right {
                (right - f) / (right - centre)
            } else {
                0.0
            };
            weights.set(m, k, w);
        }
    }
    Ok(MelFilterbank {
        n_mels,
        weights,
        f_min,
        f_max,
        fft_size,
        sample_rate,
    })
}

/// Orthonormal DCT-II basis, `[n_out × n_in]`.
pub fn dct_matrix(n_out: usize, n_in: usize) -> Matrix {
    let mut d = Matrix::zeros(n_out, n_in);
    let n = n_in as f64;
    for k in 0..n_out {
        let scale = if k == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
        for m in 0..n_in {
            d.set(k, m, scale * (PI * k as f64 * (m as f64 + 0.5) / n).cos());
        }
    }
    d
}

/// Cepstral coefficients `[n_mfcc × frames]` from filterbank power energies.
pub fn mfcc(spec: &Spectrogram, bank: &MelFilterbank, n_mfcc: usize) -> Result<Matrix> {
    if n_mfcc > bank.n_mels {
        return Err(Error::param(format!(
            "n_mfcc {n_mfcc} exceeds n_mels {}",
            bank.n_mels
        )));
    }
    if bank.weights.cols() != spec.n_bins() {
        return Err(Error::param(format!(
            "filterbank has {} bins, spectrogram {}",
            bank.weights.cols(),
            spec.n_bins()
        )));
    }
    let dct = dct_matrix(n_mfcc, bank.n_mels);
    let frames = spec.n_frames();
    let mut out = Matrix::zeros(n_mfcc, frames);
    let mut log_energy = vec![0.0; bank.n_mels];
    for f in 0..frames {
        for (m, e) in log_energy.iter_mut().enumerate() {
            let energy: f64 = bank
                .weights
                .row(m)
                .iter()
                .enumerate()
                .map(|(k, w)| w * spec.magnitudes.get(k, f).powi(2))
                .sum();
            *e = energy.max(LOG_ENERGY_FLOOR).ln();
        }
        for c in 0..n_mfcc {
            let v: f64 = dct.row(c).iter().zip(&log_energy).map(|(d, e)| d * e).sum();
            out.set(c, f, v);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::stft::stft;
    use crate::signal::SampleBuffer;

    #[test]
    fn mel_scale_round_trip() {
        for f in [0.0, 100.0, 700.0, 3999.0] {
            assert!((mel_to_hz(hz_to_mel(f)) - f).abs() < 1e-9);
        }
        assert!((hz_to_mel(700.0) - 2595.0 * 2f64.log10()).abs() < 1e-12);
    }

    #[test]
    fn filterbank_covers_interior_bins() {
        let bank = mel_filterbank(26, 256, 8000, 0.0, 4000.0).unwrap();
        for k in 1..128 {
            let total: f64 = (0..26).map(|m| bank.weights.get(m, k)).sum();
            assert!(total > 0.0, "bin {k} uncovered");
        }
        for m in 0..25 {
            let overlap = (0..129).any(|k| bank.weights.get(m, k) > 0.0 && bank.weights.get(m + 1, k) > 0.0);
            assert!(overlap, "filters {m} and {} do not overlap", m + 1);
        }
        assert!(bank.weights.data().iter().all(|&w| w >= 0.0));
    }

    #[test]
    fn dct_rows_are_orthonormal() {
        for (rows, cols) in [(26, 26), (13, 26)] {
            let d = dct_matrix(rows, cols);
            for i in 0..rows {
                for j in 0..rows {
                    let dot: f64 = d.row(i).iter().zip(d.row(j)).map(|(a, b)| a * b).sum();
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((dot - want).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn silent_input_gives_constant_cepstrum() {
        let b = SampleBuffer::zeros(2048, 8000).unwrap();
        let s = stft(&b, 256, 128).unwrap();
        let bank = mel_filterbank(26, 256, 8000, 0.0, 4000.0).unwrap();
        let c = mfcc(&s, &bank, 13).unwrap();
        assert_eq!(c.shape(), (13, s.n_frames()));
        let c0 = 26f64.sqrt() * LOG_ENERGY_FLOOR.ln();
        for f in 0..s.n_frames() {
            assert!((c.get(0, f) - c0).abs() < 1e-9);
            for k in 1..13 {
                assert!(c.get(k, f).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn too_many_coefficients() {
        let b = SampleBuffer::zeros(512, 8000).unwrap();
        let s = stft(&b, 256, 128).unwrap();
        let bank = mel_filterbank(10, 256, 8000, 0.0, 4000.0).unwrap();
        assert!(mfcc(&s, &bank, 13).is_err());
    }
}
