//! Seeded signal augmentations.

pub mod vocoder;

use serde::{Deserialize, Serialize};

use crate::dsp::fft::fft_real;
use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::signal::SampleBuffer;
use crate::synth::channel::add_awgn;

pub use vocoder::time_stretch;

pub const MAX_SEMITONES: f64 = 12.0;

/// Fraction of signal power below the frequency that pitch shifting must
/// keep under Nyquist.
pub const PITCH_ROLLOFF: f64 = 0.99;

/// Gaussian noise at `snr_db` relative to the buffer's own power.
pub fn inject_noise(buf: &SampleBuffer, snr_db: f64, seed: u64) -> Result<SampleBuffer> {
    add_awgn(buf, snr_db, seed)
}

pub fn amplitude_scale(buf: &SampleBuffer, gain: f64) -> Result<SampleBuffer> {
    if !(gain >= 0.0) || !gain.is_finite() {
        return Err(Error::param(format!("gain must be finite and >= 0, got {gain}")));
    }
    buf.with_samples(buf.samples().iter().map(|x| gain * x).collect())
}

/// Linear-interpolation resampler: output sample `m` reads input position `m/ratio`.
pub fn resample_linear(xs: &[f64], ratio: f64) -> Vec<f64> {
    let out_len = ((xs.len() as f64 * ratio).round() as usize).max(1);
    let last = xs.len() - 1;
    (0..out_len)
        .map(|m| {
            let pos = m as f64 / ratio;
            let i = pos.floor() as usize;
            if i >= last {
                return xs[last];
            }
            let frac = pos - i as f64;
            xs[i] * (1.0 - frac) + xs[i + 1] * frac
        })
        .collect()
}

/// Frequency below which `fraction` of the signal power lies.
pub fn rolloff_frequency(buf: &SampleBuffer, fraction: f64) -> f64 {
    let spec = fft_real(buf.samples());
    let half = buf.len() / 2 + 1;
    let power: Vec<f64> = spec.iter().take(half).map(|v| v.norm_sqr()).collect();
    let total: f64 = power.iter().sum();
    if total == 0.0 {
        return 0.0;
    }
    let mut acc = 0.0;
    for (k, p) in power.iter().enumerate() {
        acc += p;
        if acc >= fraction * total {
            return k as f64 * buf.sample_rate() as f64 / buf.len() as f64;
        }
    }
    buf.nyquist()
}

/// Shifts pitch by `semitones`, keeping the length: resample by
/// `2^(−semitones/12)`, then time-stretch back.
pub fn pitch_shift(buf: &SampleBuffer, semitones: f64) -> Result<SampleBuffer> {
    if !(semitones.abs() <= MAX_SEMITONES) {
        return Err(Error::param(format!(
            "pitch shift {semitones} semitones exceeds ±{MAX_SEMITONES}"
        )));
    }
    let scale = 2f64.powf(semitones / 12.0);
    if semitones > 0.0 {
        let top = rolloff_frequency(buf, PITCH_ROLLOFF) * scale;
        if top >= buf.nyquist() {
            return Err(Error::param(format!(
                "shifting by {semitones} semitones moves content to {top:.1} Hz, past Nyquist {}",
                buf.nyquist()
            )));
        }
    }
    let ratio = 1.0 / scale;
    let resampled = buf.with_samples(resample_linear(buf.samples(), ratio))?;
    time_stretch(&resampled, scale)?.fit_to(buf.len())
}

/// Crops at a seeded offset or zero-pads with a seeded lead/trail split.
pub fn random_crop_pad(buf: &SampleBuffer, target_len: usize, seed: u64) -> Result<SampleBuffer> {
    if target_len == 0 {
        return Err(Error::param("target length must be positive"));
    }
    let len = buf.len();
    let mut rng = SeededRng::new(seed);
    let out = if len > target_len {
        let offset = rng.below((len - target_len + 1) as u64) as usize;
        buf.samples()[offset..offset + target_len].to_vec()
    } else if len < target_len {
        let lead = rng.below((target_len - len + 1) as u64) as usize;
        let mut v = vec![0.0; target_len];
        v[lead..lead + len].copy_from_slice(buf.samples());
        v
    } else {
        buf.samples().to_vec()
    };
    buf.with_samples(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum AugmentOp {
    Noise { snr_db: f64 },
    Stretch { factor: f64 },
    Pitch { semitones: f64 },
    Gain { gain: f64 },
    CropPad { target_len: usize },
}

impl AugmentOp {
    pub fn name(&self) -> &'static str {
        match self {
            AugmentOp::Noise { .. } => "noise",
            AugmentOp::Stretch { .. } => "stretch",
            AugmentOp::Pitch { .. } => "pitch",
            AugmentOp::Gain { .. } => "gain",
            AugmentOp::CropPad { .. } => "crop_pad",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            AugmentOp::Stretch { factor } if !(factor > 0.0) => {
                Err(Error::param("stretch factor must be positive"))
            }
            AugmentOp::CropPad { target_len: 0 } => Err(Error::param("target length must be positive")),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentSpec {
    #[serde(flatten)]
    pub op: AugmentOp,
    pub seed: u64,
}

pub fn apply(buf: &SampleBuffer, spec: &AugmentSpec) -> Result<SampleBuffer> {
    spec.op.validate()?;
    match spec.op {
        AugmentOp::Noise { snr_db } => inject_noise(buf, snr_db, spec.seed),
        AugmentOp::Stretch { factor } => time_stretch(buf, factor),
        AugmentOp::Pitch { semitones } => pitch_shift(buf, semitones),
        AugmentOp::Gain { gain } => amplitude_scale(buf, gain),
        AugmentOp::CropPad { target_len } => random_crop_pad(buf, target_len, spec.seed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::gen_tone;

    fn tone() -> SampleBuffer {
        gen_tone(600.0, 1.0, 1.0, 8000, 0.0).unwrap()
    }

    #[test]
    fn gain_examples() {
        let b = tone();
        assert_eq!(amplitude_scale(&b, 1.0).unwrap(), b);
        assert!(amplitude_scale(&b, 0.0).unwrap().samples().iter().all(|&x| x == 0.0));
        let doubled = amplitude_scale(&b, 2.0).unwrap();
        assert!((doubled.power() - 4.0 * b.power()).abs() < 1e-9);
        assert!(amplitude_scale(&b, -1.0).is_err());
    }

    #[test]
    fn crop_pad_equal_is_identity() {
        let b = tone();
        assert_eq!(random_crop_pad(&b, 8000, 3).unwrap(), b);
    }

    #[test]
    fn crop_is_a_contiguous_slice() {
        let b = tone();
        let c = random_crop_pad(&b, 4000, 9).unwrap();
        assert_eq!(c.len(), 4000);
        let found = b
            .samples()
            .windows(4000)
            .any(|w| w == c.samples());
        assert!(found);
    }

    #[test]
    fn pad_keeps_input_in_order() {
        let b = SampleBuffer::new((1..=4000).map(|i| i as f64).collect(), 8000).unwrap();
        let p = random_crop_pad(&b, 8000, 21).unwrap();
        assert_eq!(p.len(), 8000);
        let nonzero: Vec<f64> = p.samples().iter().copied().filter(|&x| x != 0.0).collect();
        assert_eq!(nonzero, b.samples());
    }

    #[test]
    fn crop_pad_is_seed_deterministic() {
        let b = tone();
        assert_eq!(
            random_crop_pad(&b, 3000, 5).unwrap(),
            random_crop_pad(&b, 3000, 5).unwrap()
        );
    }

    #[test]
    fn resample_identity_ratio() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        assert_eq!(resample_linear(&xs, 1.0), xs.to_vec());
        assert_eq!(resample_linear(&xs, 2.0), vec![1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0, 8.0]);
    }

    #[test]
    fn pitch_limits() {
        let b = tone();
        assert!(pitch_shift(&b, 13.0).is_err());
        let high = gen_tone(3000.0, 1.0, 1.0, 8000, 0.0).unwrap();
        assert!(pitch_shift(&high, 7.0).is_err());
        assert!(pitch_shift(&high, -7.0).is_ok());
    }

    #[test]
    fn spec_json_shape() {
        let s: AugmentSpec = serde_json::from_str(r#"{"op":"crop_pad","target_len":10,"seed":4}"#).unwrap();
        assert_eq!(s.op, AugmentOp::CropPad { target_len: 10 });
        assert!(apply(&tone(), &AugmentSpec { op: AugmentOp::CropPad { target_len: 0 }, seed: 0 }).is_err());
    }
}
