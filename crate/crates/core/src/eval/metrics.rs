use serde::{Deserialize, Serialize};

use crate::dsp::{estimate_snr, Spectrogram};
use crate::error::{Error, Result};
use crate::signal::SampleBuffer;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrImprovement {
    pub input_db: f64,
    pub output_db: f64,
    pub delta_db: f64,
}

pub fn snr_improvement(clean: &SampleBuffer, noisy: &SampleBuffer, denoised: &SampleBuffer) -> Result<SnrImprovement> {
    let input_db = estimate_snr(noisy, clean)?;
    let output_db = estimate_snr(denoised, clean)?;
    Ok(SnrImprovement {
        input_db,
        output_db,
        delta_db: output_db - input_db,
    })
}

/// Mean squared difference of linear magnitudes.
pub fn spectrogram_mse(a: &Spectrogram, b: &Spectrogram) -> Result<f64> {
    if !a.same_geometry(b) {
        return Err(Error::param(format!(
            "spectrogram geometry differs: {:?} vs {:?}",
            a.magnitudes.shape(),
            b.magnitudes.shape()
        )));
    }
    let n = a.magnitudes.data().len() as f64;
    Ok(a.magnitudes
        .data()
        .iter()
        .zip(b.magnitudes.data())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / n)
}

/// Fraction of transmitted bits received wrongly. Bits missing from `rx`
/// count as errors; surplus received bits are ignored.
pub fn ber(tx: &[bool], rx: &[bool]) -> Result<f64> {
    if tx.is_empty() {
        return Err(Error::param("bit error rate of an empty transmission"));
    }
    let common = tx.len().min(rx.len());
    let wrong = tx.iter().zip(rx).filter(|(a, b)| a != b).count() + (tx.len() - common);
    Ok(wrong as f64 / tx.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub classes: Vec<String>,
    pub accuracy: f64,
    pub per_class: Vec<ClassMetrics>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    /// Rows are true classes, columns predictions, both in `classes` order.
    pub confusion_matrix: Vec<Vec<usize>>,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn classification_report<S: AsRef<str>>(preds: &[S], labels: &[S], classes: &[S]) -> Result<ClassificationReport> {
    if preds.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: preds.len(),
            right: labels.len(),
        });
    }
    if labels.is_empty() {
        return Err(Error::EmptyDataset("no labels to score".into()));
    }
    let names: Vec<String> = classes.iter().map(|c| c.as_ref().to_string()).collect();
    let index = |s: &str| names.iter().position(|c| c == s).ok_or_else(|| Error::UnknownLabel(s.to_string()));
    let k = names.len();
    let mut cm = vec![vec![0usize; k]; k];
    for (p, l) in preds.iter().zip(labels) {
        cm[index(l.as_ref())?][index(p.as_ref())?] += 1;
    }
    let correct: usize = (0..k).map(|i| cm[i][i]).sum();
    let per_class: Vec<ClassMetrics> = (0..k)
        .map(|i| {
            let support: usize = cm[i].iter().sum();
            let predicted: usize = cm.iter().map(|row| row[i]).sum();
            let precision = ratio(cm[i][i], predicted);
            let recall = ratio(cm[i][i], support);
            let f1 = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            };
            ClassMetrics {
                class: names[i].clone(),
                precision,
                recall,
                f1,
                support,
            }
        })
        .collect();
    let mean = |f: fn(&ClassMetrics) -> f64| per_class.iter().map(f).sum::<f64>() / k.max(1) as f64;
    Ok(ClassificationReport {
        accuracy: ratio(correct, labels.len()),
        macro_precision: mean(|c| c.precision),
        macro_recall: mean(|c| c.recall),
        macro_f1: mean(|c| c.f1),
        classes: names,
        per_class,
        confusion_matrix: cm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::stft;
    use crate::synth::channel::{add_awgn, gaussian_noise};
    use crate::synth::gen_tone;

    #[test]
    fn snr_identity_and_perfect() {
        let clean = gen_tone(700.0, 0.5, 1.0, 8000, 0.0).unwrap();
        let noisy = add_awgn(&clean, 0.0, 1).unwrap();
        let id = snr_improvement(&clean, &noisy, &noisy).unwrap();
        assert_eq!(id.delta_db, 0.0);
        let perfect = snr_improvement(&clean, &noisy, &clean).unwrap();
        assert_eq!(perfect.output_db, 100.0);
        let avg: Vec<f64> = clean.samples().iter().zip(noisy.samples()).map(|(c, n)| 0.5 * (c + n)).collect();
        let half = snr_improvement(&clean, &noisy, &clean.with_samples(avg).unwrap()).unwrap();
        // the residual (n - c)/2 has a quarter of the power: +10·log10(4) dB
        assert!((half.delta_db - 10.0 * 4f64.log10()).abs() < 1e-9, "{half:?}");
    }

    #[test]
    fn mse_properties() {
        let a = stft(&SampleBuffer::new(gaussian_noise(2048, 1.0, 2), 8000).unwrap(), 256, 128).unwrap();
        let b = stft(&SampleBuffer::new(gaussian_noise(2048, 1.0, 3), 8000).unwrap(), 256, 128).unwrap();
        assert_eq!(spectrogram_mse(&a, &a).unwrap(), 0.0);
        assert_eq!(spectrogram_mse(&a, &b).unwrap(), spectrogram_mse(&b, &a).unwrap());
        let shifted = a.with_magnitudes(a.magnitudes.map(|m| m + 0.25)).unwrap();
        assert!((spectrogram_mse(&a, &shifted).unwrap() - 0.0625).abs() < 1e-12);
        let short = stft(&SampleBuffer::new(gaussian_noise(1024, 1.0, 3), 8000).unwrap(), 256, 128).unwrap();
        assert!(spectrogram_mse(&a, &short).is_err());
    }

    #[test]
    fn ber_rules() {
        let tx: Vec<bool> = (0..100).map(|i| i % 3 == 0).collect();
        assert_eq!(ber(&tx, &tx).unwrap(), 0.0);
        let inv: Vec<bool> = tx.iter().map(|b| !b).collect();
        assert_eq!(ber(&tx, &inv).unwrap(), 1.0);
        assert!((ber(&tx, &tx[..90]).unwrap() - 0.10).abs() < 1e-15);
        assert!(ber(&[], &tx).is_err());
    }

    #[test]
    fn classification_cases() {
        let r = classification_report(&["a", "b"], &["a", "b"], &["a", "b"]).unwrap();
        assert_eq!((r.accuracy, r.macro_f1), (1.0, 1.0));
        assert_eq!(r.confusion_matrix, vec![vec![1, 0], vec![0, 1]]);

        let r = classification_report(&["x"; 4], &["x", "x", "y", "y"], &["x", "y"]).unwrap();
        assert_eq!(r.accuracy, 0.5);
        assert_eq!((r.per_class[0].recall, r.per_class[1].recall), (1.0, 0.0));
        assert_eq!(r.per_class[1].precision, 0.0);

        let r = classification_report(&["a", "a", "b", "c"], &["a", "b", "b", "c"], &["a", "b", "c"]).unwrap();
        assert_eq!(r.accuracy, 0.75);
        assert_eq!((r.per_class[0].precision, r.per_class[0].recall), (0.5, 1.0));
        let trace: usize = (0..3).map(|i| r.confusion_matrix[i][i]).sum();
        assert_eq!(trace as f64 / 4.0, r.accuracy);

        assert!(matches!(
            classification_report(&["q"], &["a"], &["a"]),
            Err(Error::UnknownLabel(_))
        ));
    }
}
