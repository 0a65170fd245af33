//! Glue between signals and the two networks: spectrogram inputs, training
//! targets, and applying a trained mask.

use crate::dsp::{istft, log_minmax, stft, Matrix, Spectrogram, DEFAULT_FFT_SIZE, DEFAULT_HOP};
use crate::error::{Error, Result};
use crate::nn::{Example, Model, Tensor};
use crate::record::BinaryLabel;
use crate::signal::SampleBuffer;

pub fn spectrogram(buf: &SampleBuffer) -> Result<Spectrogram> {
    stft(buf, DEFAULT_FFT_SIZE, DEFAULT_HOP)
}

/// `[bins, frames, 1]` log-compressed, min-max normalized magnitudes.
pub fn network_input(spec: &Spectrogram) -> Tensor {
    let m = log_minmax(&spec.magnitudes);
    Tensor::new(vec![m.rows(), m.cols(), 1], m.into_data()).expect("matrix shape matches")
}

pub fn classifier_input(buf: &SampleBuffer) -> Result<Tensor> {
    Ok(network_input(&spectrogram(buf)?))
}

pub fn classifier_example(buf: &SampleBuffer, label: BinaryLabel) -> Result<Example> {
    Ok(Example {
        input: classifier_input(buf)?,
        target: vec![label.target()],
    })
}

/// Score of the binary head mapped to a label (threshold 0.5).
pub fn label_for_score(score: f64) -> BinaryLabel {
    if score >= 0.5 {
        BinaryLabel::Noisy
    } else {
        BinaryLabel::Clean
    }
}

/// Ideal ratio mask `min(1, |clean| / |noisy|)`, zero where the noisy cell is zero.
pub fn ratio_mask(clean: &Spectrogram, noisy: &Spectrogram) -> Result<Vec<f64>> {
    if !clean.same_geometry(noisy) {
        return Err(Error::param("clean and noisy spectrograms differ in geometry"));
    }
    Ok(clean
        .magnitudes
        .data()
        .iter()
        .zip(noisy.magnitudes.data())
        .map(|(&c, &n)| if n > 0.0 { (c / n).min(1.0) } else { 0.0 })
        .collect())
}

pub fn denoiser_example(clean: &SampleBuffer, noisy: &SampleBuffer) -> Result<Example> {
    let cs = spectrogram(clean)?;
    let ns = spectrogram(noisy)?;
    Ok(Example {
        input: network_input(&ns),
        target: ratio_mask(&cs, &ns)?,
    })
}

/// Multiplies the noisy magnitudes by `mask` and resynthesizes with the noisy phase.
pub fn apply_mask(noisy_spec: &Spectrogram, mask: &[f64]) -> Result<SampleBuffer> {
    let m = &noisy_spec.magnitudes;
    if mask.len() != m.data().len() {
        return Err(Error::LengthMismatch {
            left: mask.len(),
            right: m.data().len(),
        });
    }
    let masked: Vec<f64> = m.data().iter().zip(mask).map(|(a, b)| a * b).collect();
    istft(&noisy_spec.with_magnitudes(Matrix::from_vec(m.rows(), m.cols(), masked)?)?)
}

/// Runs the denoiser on a noisy buffer and returns the resynthesized audio.
pub fn denoise(model: &Model, noisy: &SampleBuffer) -> Result<SampleBuffer> {
    let spec = spectrogram(noisy)?;
    let mask = model.predict(&network_input(&spec))?;
    apply_mask(&spec, mask.data())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{channel::add_awgn, gen_tone};

    #[test]
    fn one_second_gives_paper_geometry() {
        let x = classifier_input(&gen_tone(900.0, 0.5, 1.0, 8000, 0.0).unwrap()).unwrap();
        assert_eq!(x.shape(), &[129, 61, 1]);
        assert!(x.data().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn unit_mask_reconstructs_input() {
        let clean = gen_tone(900.0, 0.5, 1.0, 8000, 0.0).unwrap();
        let noisy = add_awgn(&clean, 0.0, 4).unwrap();
        let spec = spectrogram(&noisy).unwrap();
        let back = apply_mask(&spec, &vec![1.0; spec.magnitudes.data().len()]).unwrap();
        // interior samples are covered by two frames and reconstruct exactly
        for i in 256..7680 {
            assert!((back.samples()[i] - noisy.samples()[i]).abs() < 1e-9);
        }
        let ex = denoiser_example(&clean, &noisy).unwrap();
        assert!(ex.target.iter().all(|v| (0.0..=1.0).contains(v)));
    }
}
