//! Phase-vocoder time stretching.

use std::f64::consts::PI;

use crate::dsp::matrix::Matrix;
use crate::dsp::stft::{istft, stft, Spectrogram, Window};
use crate::error::{Error, Result};
use crate::signal::SampleBuffer;

pub const VOCODER_FFT: usize = 1024;
pub const VOCODER_HOP: usize = 256;

pub const MIN_STRETCH: f64 = 0.5;
pub const MAX_STRETCH: f64 = 2.0;

fn wrap_phase(x: f64) -> f64 {
    x - 2.0 * PI * ((x + PI) / (2.0 * PI)).floor()
}

/// Stretches duration by `factor` (output length `round(len·factor)`)
/// while keeping frequencies in place.
pub fn time_stretch(buf: &SampleBuffer, factor: f64) -> Result<SampleBuffer> {
    if !(MIN_STRETCH..=MAX_STRETCH).contains(&factor) {
        return Err(Error::param(format!(
            "stretch factor {factor} outside [{MIN_STRETCH}, {MAX_STRETCH}]"
        )));
    }
    let n = VOCODER_FFT;
    let hop = VOCODER_HOP;
    let target_len = ((buf.len() as f64 * factor).round() as usize).max(1);

    // Centre the first frame on sample 0 and leave room past the end.
    let mut padded = vec![0.0; n / 2];
    padded.extend_from_slice(buf.samples());
    padded.extend(std::iter::repeat_n(0.0, n / 2 + n));
    let analysis = stft(&buf.with_samples(padded)?, n, hop)?;
    let in_phases = analysis.phases.as_ref().expect("stft keeps phases");
    let frames_in = analysis.n_frames();
    let bins = analysis.n_bins();

    let rate = 1.0 / factor;
    let steps: Vec<f64> = (0..)
        .map(|j| j as f64 * rate)
        .take_while(|&s| s < (frames_in - 1) as f64)
        .collect();
    let mut mags = Matrix::zeros(bins, steps.len());
    let mut phases = Matrix::zeros(bins, steps.len());
    let expected: Vec<f64> = (0..bins)
        .map(|k| 2.0 * PI * k as f64 * hop as f64 / n as f64)
        .collect();
    let mut acc: Vec<f64> = (0..bins).map(|k| in_phases.get(k, 0)).collect();
    for (j, &s) in steps.iter().enumerate() {
        let i = s.floor() as usize;
        let alpha = s - i as f64;
        for k in 0..bins {
            let m0 = analysis.magnitudes.get(k, i);
            let m1 = analysis.magnitudes.get(k, i + 1);
            mags.set(k, j, (1.0 - alpha) * m0 + alpha * m1);
            phases.set(k, j, acc[k]);
            let dphi = in_phases.get(k, i + 1) - in_phases.get(k, i) - expected[k];
            acc[k] += expected[k] + wrap_phase(dphi);
        }
    }

    let synth = Spectrogram {
        magnitudes: mags,
        phases: Some(phases),
        fft_size: n,
        hop,
        window: Window::Hann,
        sample_rate: buf.sample_rate(),
        n_samples: (steps.len() - 1) * hop + n,
    };
    let y = istft(&synth)?.into_samples();
    let mut out: Vec<f64> = y.into_iter().skip(n / 2).take(target_len).collect();
    out.resize(target_len, 0.0);
    buf.with_samples(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::gen_tone;

    #[test]
    fn wrap_phase_range() {
        for x in [-10.0, -PI, 0.0, 3.0, PI, 7.5] {
            let w = wrap_phase(x);
            assert!((-PI..PI).contains(&w));
            assert!(((x - w) / (2.0 * PI)).fract().abs() < 1e-12);
        }
    }

    #[test]
    fn unit_factor_is_near_identity() {
        let b = gen_tone(600.0, 1.0, 1.0, 8000, 0.0).unwrap();
        let y = time_stretch(&b, 1.0).unwrap();
        assert_eq!(y.len(), b.len());
        let err = b
            .samples()
            .iter()
            .zip(y.samples())
            .map(|(a, c)| (a - c).powi(2))
            .sum::<f64>()
            / b.len() as f64;
        assert!(err.sqrt() < 0.05 * b.power().sqrt());
    }

    #[test]
    fn factor_out_of_range() {
        let b = gen_tone(600.0, 1.0, 0.1, 8000, 0.0).unwrap();
        assert!(time_stretch(&b, 0.4).is_err());
        assert!(time_stretch(&b, 2.1).is_err());
    }
}
