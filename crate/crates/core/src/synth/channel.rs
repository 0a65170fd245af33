//! Channel impairments: additive white Gaussian noise and linear frequency drift.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use crate::dsp::fft::analytic_signal;
use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::signal::SampleBuffer;

/// `len` i.i.d. zero-mean Gaussian samples with the given variance.
pub fn gaussian_noise(len: usize, variance: f64, seed: u64) -> Vec<f64> {
    let sigma = variance.max(0.0).sqrt();
    let mut rng = SeededRng::new(seed);
    (0..len).map(|_| sigma * rng.gaussian()).collect()
}

/// Noise variance that puts a signal of power `signal_power` at `snr_db`.
pub fn noise_variance_for(signal_power: f64, snr_db: f64) -> f64 {
    signal_power / 10f64.powf(snr_db / 10.0)
}

/// Adds Gaussian noise scaled so that `P(buf)/P(noise)` is `snr_db`.
pub fn add_awgn(buf: &SampleBuffer, snr_db: f64, seed: u64) -> Result<SampleBuffer> {
    if !snr_db.is_finite() {
        return Err(Error::param(format!("snr_db must be finite, got {snr_db}")));
    }
    let power = buf.power();
    if power == 0.0 {
        return Err(Error::ZeroPower("signal"));
    }
    let noise = gaussian_noise(buf.len(), noise_variance_for(power, snr_db), seed);
    buf.with_samples(buf.samples().iter().zip(&noise).map(|(s, n)| s + n).collect())
}

/// Shifts every spectral component by `drift_hz_per_s · t`, heterodyning the
/// analytic signal with a linear chirp and keeping the real part.
pub fn apply_drift(buf: &SampleBuffer, drift_hz_per_s: f64) -> Result<SampleBuffer> {
    if drift_hz_per_s == 0.0 {
        return Ok(buf.clone());
    }
    if !drift_hz_per_s.is_finite() {
        return Err(Error::param("drift must be finite"));
    }
    let sr = buf.sample_rate() as f64;
    let z = analytic_signal(buf.samples());
    let out = z
        .iter()
        .enumerate()
        .map(|(n, v)| {
            let t = n as f64 / sr;
            let chirp = Complex64::from_polar(1.0, PI * drift_hz_per_s * t * t);
            (v * chirp).re
        })
        .collect();
    buf.with_samples(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::tones::gen_tone;

    #[test]
    fn awgn_variance_matches_ratio() {
        assert!((noise_variance_for(0.5, 10.0) - 0.05).abs() < 1e-15);
    }

    #[test]
    fn awgn_is_deterministic() {
        let s = gen_tone(600.0, 1.0, 1.0, 8000, 0.0).unwrap();
        let a = add_awgn(&s, 5.0, 99).unwrap();
        let b = add_awgn(&s, 5.0, 99).unwrap();
        assert!(a
            .samples()
            .iter()
            .zip(b.samples())
            .all(|(x, y)| x.to_bits() == y.to_bits()));
        let c = add_awgn(&s, 5.0, 100).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn awgn_zero_power_errors() {
        let z = SampleBuffer::zeros(100, 8000).unwrap();
        assert!(matches!(add_awgn(&z, 10.0, 1), Err(Error::ZeroPower(_))));
    }

    #[test]
    fn zero_drift_is_identity() {
        let s = gen_tone(600.0, 1.0, 1.0, 8000, 0.3).unwrap();
        assert_eq!(apply_drift(&s, 0.0).unwrap(), s);
    }
}
