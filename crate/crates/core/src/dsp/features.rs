//! Per-record feature vectors and the CNN input transform.

use serde::{Deserialize, Serialize};

use crate::dsp::matrix::Matrix;
use crate::dsp::mfcc::{mel_filterbank, mfcc, DEFAULT_N_MELS, DEFAULT_N_MFCC};
use crate::dsp::normalize::minmax_normalize;
use crate::dsp::stats::{estimate_snr, spectral_entropy, time_stats};
use crate::dsp::stft::{stft, Spectrogram, DEFAULT_FFT_SIZE, DEFAULT_HOP};
use crate::error::{Error, Result};
use crate::signal::SampleBuffer;

/// Magnitude scale inside the log compression `log(1 + m/scale)`.
pub const LOG_COMPRESSION_SCALE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub kurtosis: f64,
    pub spectral_entropy: f64,
    pub snr_db: Option<f64>,
    pub mfcc: Matrix,
}

impl FeatureVector {
    /// Scalar features by name, in a fixed order.
    pub fn scalars(&self) -> Vec<(&'static str, f64)> {
        let mut v = vec![
            ("mean", self.mean),
            ("variance", self.variance),
            ("skewness", self.skewness),
            ("kurtosis", self.kurtosis),
            ("spectral_entropy", self.spectral_entropy),
        ];
        if let Some(snr) = self.snr_db {
            v.push(("snr_db", snr));
        }
        v
    }
}

/// Mean over frames of the per-frame entropy of `|X|²`; all-zero frames are skipped.
pub fn mean_spectral_entropy(spec: &Spectrogram) -> Result<f64> {
    let mut total = 0.0;
    let mut count = 0usize;
    for f in 0..spec.n_frames() {
        let power: Vec<f64> = spec.magnitudes.column(f).iter().map(|m| m * m).collect();
        if power.iter().all(|&p| p == 0.0) {
            continue;
        }
        total += spectral_entropy(&power)?;
        count += 1;
    }
    if count == 0 {
        return Err(Error::param("spectrogram is silent; entropy undefined"));
    }
    Ok(total / count as f64)
}

/// Moments, spectral entropy, MFCCs, and SNR when a clean reference is known.
pub fn extract_features(buf: &SampleBuffer, reference: Option<&SampleBuffer>) -> Result<FeatureVector> {
    let stats = time_stats(buf)?;
    let spec = stft(buf, DEFAULT_FFT_SIZE, DEFAULT_HOP)?;
    let entropy = mean_spectral_entropy(&spec).unwrap_or(0.0);
    let bank = mel_filterbank(
        DEFAULT_N_MELS,
        DEFAULT_FFT_SIZE,
        buf.sample_rate(),
        0.0,
        buf.nyquist(),
    )?;
    let snr_db = reference.map(|r| estimate_snr(buf, r)).transpose()?;
    Ok(FeatureVector {
        mean: stats.mean,
        variance: stats.variance,
        skewness: stats.skewness,
        kurtosis: stats.kurtosis,
        spectral_entropy: entropy,
        snr_db,
        mfcc: mfcc(&spec, &bank, DEFAULT_N_MFCC)?,
    })
}

/// Network input: `log(1 + m/1e-6)` per cell, then min-max to [0, 1] over the
/// whole spectrogram.
pub fn log_minmax(magnitudes: &Matrix) -> Matrix {
    let compressed: Vec<f64> = magnitudes
        .data()
        .iter()
        .map(|m| (m / LOG_COMPRESSION_SCALE).ln_1p())
        .collect();
    Matrix::from_vec(magnitudes.rows(), magnitudes.cols(), minmax_normalize(&compressed))
        .expect("shape preserved")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{channel::gaussian_noise, gen_tone};

    #[test]
    fn white_noise_entropy_is_high() {
        let buf = SampleBuffer::new(gaussian_noise(8000, 1.0, 77), 8000).unwrap();
        let spec = stft(&buf, 256, 128).unwrap();
        let h = mean_spectral_entropy(&spec).unwrap();
        assert!(h > 0.9, "{h}");
    }

    #[test]
    fn tone_entropy_is_low() {
        let buf = gen_tone(1000.0, 1.0, 1.0, 8000, 0.0).unwrap();
        let spec = stft(&buf, 256, 128).unwrap();
        assert!(mean_spectral_entropy(&spec).unwrap() < 0.3);
    }

    #[test]
    fn features_of_a_tone() {
        let buf = gen_tone(600.0, 1.0, 1.0, 8000, 0.0).unwrap();
        let fv = extract_features(&buf, Some(&buf)).unwrap();
        assert!((fv.variance - 0.5).abs() < 1e-3);
        assert_eq!(fv.snr_db, Some(100.0));
        assert_eq!(fv.mfcc.shape(), (13, 61));
        assert_eq!(fv.scalars().len(), 6);
    }

    #[test]
    fn log_minmax_bounds() {
        let m = Matrix::from_vec(2, 2, vec![0.0, 1e-3, 2.0, 0.5]).unwrap();
        let n = log_minmax(&m);
        assert_eq!(n.data()[0], 0.0);
        assert_eq!(n.data()[2], 1.0);
    }
}
