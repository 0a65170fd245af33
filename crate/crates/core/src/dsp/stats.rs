//! Time-domain moments, spectral entropy and reference-based SNR.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{mean_power, SampleBuffer};

const DEGENERATE_VARIANCE: f64 = 1e-12;

/// Residual power below `P(reference)·1e-10` reads as this many dB.
pub const SNR_CLAMP_DB: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeStats {
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    /// Excess kurtosis (normal = 0).
    pub kurtosis: f64,
}

/// Population mean, variance, skewness and excess kurtosis.
pub fn moments(xs: &[f64]) -> Result<TimeStats> {
    if xs.len() < 2 {
        return Err(Error::TooShort {
            len: xs.len(),
            needed: 2,
            hint: "moments need at least two samples",
        });
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in xs {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    if m2 < DEGENERATE_VARIANCE {
        return Ok(TimeStats {
            mean,
            variance: m2,
            skewness: 0.0,
            kurtosis: 0.0,
        });
    }
    Ok(TimeStats {
        mean,
        variance: m2,
        skewness: m3 / m2.powf(1.5),
        kurtosis: m4 / (m2 * m2) - 3.0,
    })
}

pub fn time_stats(buf: &SampleBuffer) -> Result<TimeStats> {
    moments(buf.samples())
}

/// Normalized Shannon entropy of a power distribution, in [0, 1].
pub fn spectral_entropy(power: &[f64]) -> Result<f64> {
    if power.len() < 2 {
        return Err(Error::param("spectral entropy needs at least 2 bins"));
    }
    if power.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
        return Err(Error::param("spectrum values must be finite and nonnegative"));
    }
    let total: f64 = power.iter().sum();
    if total <= 0.0 {
        return Err(Error::param("spectral entropy of an all-zero spectrum is undefined"));
    }
    let h: f64 = power
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| {
            let q = p / total;
            -q * q.ln()
        })
        .sum();
    Ok((h / (power.len() as f64).ln()).clamp(0.0, 1.0))
}

/// `10·log10(P(reference) / P(observed − reference))`, clamped at +100 dB.
pub fn estimate_snr(observed: &SampleBuffer, reference: &SampleBuffer) -> Result<f64> {
    if observed.len() != reference.len() {
        return Err(Error::LengthMismatch {
            left: observed.len(),
            right: reference.len(),
        });
    }
    if observed.sample_rate() != reference.sample_rate() {
        return Err(Error::param(format!(
            "sample rates differ: {} vs {}",
            observed.sample_rate(),
            reference.sample_rate()
        )));
    }
    let p_ref = reference.power();
    if p_ref == 0.0 {
        return Err(Error::ZeroPower("reference"));
    }
    let residual: Vec<f64> = observed
        .samples()
        .iter()
        .zip(reference.samples())
        .map(|(o, r)| o - r)
        .collect();
    let p_res = mean_power(&residual);
    if p_res < p_ref * 1e-10 {
        return Ok(SNR_CLAMP_DB);
    }
    Ok(10.0 * (p_ref / p_res).log10())
}
