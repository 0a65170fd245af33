//! Time-domain signal types shared by every stage.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_SAMPLE_RATE: u32 = 8000;

/// Uniformly sampled, real-valued, mono baseband signal.
///
/// Invariants: `sample_rate > 0`, at least one sample, every sample finite.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBuffer {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl SampleBuffer {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::param("sample_rate must be positive"));
        }
        if samples.is_empty() {
            return Err(Error::param("sample buffer must hold at least one sample"));
        }
        if let Some(i) = samples.iter().position(|x| !x.is_finite()) {
            return Err(Error::param(format!("sample {i} is not finite")));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn zeros(len: usize, sample_rate: u32) -> Result<Self> {
        Self::new(vec![0.0; len], sample_rate)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn nyquist(&self) -> f64 {
        self.sample_rate as f64 / 2.0
    }

    /// Mean power, `mean(x²)`.
    pub fn power(&self) -> f64 {
        mean_power(&self.samples)
    }

    /// A buffer with the same sample rate and new content.
    pub fn with_samples(&self, samples: Vec<f64>) -> Result<Self> {
        Self::new(samples, self.sample_rate)
    }

    /// Truncate or zero-pad to exactly `len` samples.
    pub fn fit_to(mut self, len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::param("target length must be positive"));
        }
        self.samples.resize(len, 0.0);
        Ok(self)
    }
}

pub fn mean_power(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64
}

/// Number of samples spanned by `duration_s` at `sample_rate`.
pub fn sample_count(duration_s: f64, sample_rate: u32) -> Result<usize> {
    if !(duration_s > 0.0) || !duration_s.is_finite() {
        return Err(Error::param(format!(
            "duration must be positive, got {duration_s}"
        )));
    }
    if sample_rate == 0 {
        return Err(Error::param("sample_rate must be positive"));
    }
    let n = (duration_s * sample_rate as f64).round() as usize;
    if n == 0 {
        return Err(Error::param(format!(
            "duration {duration_s} s is shorter than one sample"
        )));
    }
    Ok(n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignalClass {
    Cw,
    Am,
    Fm,
    Psk31,
    Fsk8,
    Noise,
}

impl SignalClass {
    pub const ALL: [SignalClass; 6] = [
        SignalClass::Cw,
        SignalClass::Am,
        SignalClass::Fm,
        SignalClass::Psk31,
        SignalClass::Fsk8,
        SignalClass::Noise,
    ];

    /// The five modulated classes (everything except pure noise).
    pub const MODULATED: [SignalClass; 5] = [
        SignalClass::Cw,
        SignalClass::Am,
        SignalClass::Fm,
        SignalClass::Psk31,
        SignalClass::Fsk8,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SignalClass::Cw => "cw",
            SignalClass::Am => "am",
            SignalClass::Fm => "fm",
            SignalClass::Psk31 => "psk31",
            SignalClass::Fsk8 => "fsk8",
            SignalClass::Noise => "noise",
        }
    }
}

impl fmt::Display for SignalClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SignalClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SignalClass::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::param(format!("unknown signal class {s:?}")))
    }
}
