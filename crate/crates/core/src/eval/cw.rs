//! Genie-aided CW receiver: the tone frequency and keying speed are known.

use crate::error::{Error, Result};
use crate::signal::SampleBuffer;
use crate::synth::morse::{decode_symbol, unit_seconds};

pub const CW_WINDOW_S: f64 = 0.010;
/// Envelope spread (90th over 10th percentile energy) below which the input
/// is treated as unkeyed. Exponentially distributed noise energies give a
/// spread of about 22.
pub const MIN_KEYING_SPREAD: f64 = 100.0;

#[derive(Debug, Clone, PartialEq)]
pub struct CwDecode {
    pub text: String,
    pub keying_detected: bool,
}

/// Squared DFT magnitude of `xs` at `freq` (Goertzel recurrence).
pub fn goertzel_power(xs: &[f64], freq: f64, sample_rate: u32) -> f64 {
    let w = 2.0 * std::f64::consts::PI * freq / sample_rate as f64;
    let coeff = 2.0 * w.cos();
    let (mut s1, mut s2) = (0.0, 0.0);
    for &x in xs {
        let s = x + coeff * s1 - s2;
        s2 = s1;
        s1 = s;
    }
    (s1 * s1 + s2 * s2 - coeff * s1 * s2).max(0.0)
}

/// Tone energy over consecutive non-overlapping 10 ms windows.
pub fn cw_envelope(buf: &SampleBuffer, tone_freq: f64) -> Vec<f64> {
    let win = ((CW_WINDOW_S * buf.sample_rate() as f64).round() as usize).max(1);
    buf.samples()
        .chunks_exact(win)
        .map(|c| goertzel_power(c, tone_freq, buf.sample_rate()))
        .collect()
}

pub(crate) fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Midpoint of the 10th and 90th percentiles, or `None` when the spread is
/// too small to indicate keying.
pub(crate) fn keying_threshold(energies: &[f64]) -> Option<f64> {
    let mut sorted = energies.to_vec();
    sorted.sort_by(f64::total_cmp);
    let p10 = percentile(&sorted, 0.1);
    let p90 = percentile(&sorted, 0.9);
    if !(p90 > 0.0) || p90 < MIN_KEYING_SPREAD * p10 {
        return None;
    }
    Some(0.5 * (p10 + p90))
}

pub fn decode_cw(buf: &SampleBuffer, wpm: f64, tone_freq: f64) -> Result<CwDecode> {
    if !(wpm > 0.0 && wpm.is_finite()) {
        return Err(Error::param(format!("wpm must be positive, got {wpm}")));
    }
    let env = cw_envelope(buf, tone_freq);
    let none = CwDecode {
        text: String::new(),
        keying_detected: false,
    };
    let Some(threshold) = keying_threshold(&env) else {
        return Ok(none);
    };
    let units_per_window = CW_WINDOW_S / unit_seconds(wpm);

    let mut runs: Vec<(bool, usize)> = Vec::new();
    for e in env {
        let on = e > threshold;
        match runs.last_mut() {
            Some((state, n)) if *state == on => *n += 1,
            _ => runs.push((on, 1)),
        }
    }
    // leading and trailing silence carry no information
    while runs.first().is_some_and(|r| !r.0) {
        runs.remove(0);
    }
    while runs.last().is_some_and(|r| !r.0) {
        runs.pop();
    }
    if runs.is_empty() {
        return Ok(none);
    }

    let mut text = String::new();
    let mut symbol = String::new();
    let flush = |symbol: &mut String, text: &mut String| {
        if !symbol.is_empty() {
            text.push(decode_symbol(symbol).unwrap_or('?'));
            symbol.clear();
        }
    };
    for (on, windows) in runs {
        let units = windows as f64 * units_per_window;
        if on {
            symbol.push(if units < 2.0 { '.' } else { '-' });
        } else if units >= 5.0 {
            flush(&mut symbol, &mut text);
            text.push(' ');
        } else if units >= 2.0 {
            flush(&mut symbol, &mut text);
        }
    }
    flush(&mut symbol, &mut text);
    Ok(CwDecode {
        text,
        keying_detected: true,
    })
}

/// Key state per Morse unit, sampled over the middle half of each unit and
/// thresholded with the same percentile rule. This is the bit stream used
/// for CW bit error rates.
pub fn cw_unit_bits(buf: &SampleBuffer, wpm: f64, tone_freq: f64, n_units: usize) -> Result<Vec<bool>> {
    if !(wpm > 0.0 && wpm.is_finite()) {
        return Err(Error::param(format!("wpm must be positive, got {wpm}")));
    }
    let unit = unit_seconds(wpm) * buf.sample_rate() as f64;
    let xs = buf.samples();
    let energies: Vec<f64> = (0..n_units)
        .map_while(|k| {
            let a = ((k as f64 + 0.25) * unit).round() as usize;
            let b = (((k as f64 + 0.75) * unit).round() as usize).min(xs.len());
            (a < b).then(|| goertzel_power(&xs[a..b], tone_freq, buf.sample_rate()))
        })
        .collect();
    Ok(match keying_threshold(&energies) {
        Some(t) => energies.iter().map(|&e| e > t).collect(),
        None => vec![false; energies.len()],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::channel::{add_awgn, gaussian_noise};
    use crate::synth::gen_cw;

    #[test]
    fn clean_round_trip() {
        let (buf, _) = gen_cw("HELLO WORLD", 20.0, 700.0, 8000, 8.0).unwrap();
        let d = decode_cw(&buf, 20.0, 700.0).unwrap();
        assert!(d.keying_detected);
        assert_eq!(d.text, "HELLO WORLD");
    }

    #[test]
    fn paris_at_ten_db_through_bandpass() {
        use crate::clean::{apply_fir, design_fir, FilterKind};
        let (buf, _) = gen_cw("PARIS", 20.0, 700.0, 8000, 3.5).unwrap();
        let noisy = add_awgn(&buf, 10.0, 42).unwrap();
        let bp = design_fir(FilterKind::Bandpass, &[600.0, 800.0], 255, 8000).unwrap();
        let d = decode_cw(&apply_fir(&noisy, &bp).unwrap(), 20.0, 700.0).unwrap();
        assert_eq!(d.text, "PARIS");
    }

    #[test]
    fn noise_is_unkeyed() {
        let buf = SampleBuffer::new(gaussian_noise(16000, 0.1, 5), 8000).unwrap();
        let d = decode_cw(&buf, 20.0, 700.0).unwrap();
        assert!(!d.keying_detected);
        assert!(d.text.is_empty());
    }

    #[test]
    fn unit_bits_match_timeline() {
        let (buf, tl) = gen_cw("CQ DX", 25.0, 650.0, 8000, 3.0).unwrap();
        let tx = tl.unit_bits_within(buf.len());
        let rx = cw_unit_bits(&buf, 25.0, 650.0, tx.len()).unwrap();
        assert_eq!(rx, tx);
        let noisy = add_awgn(&buf, 5.0, 3).unwrap();
        let rx = cw_unit_bits(&noisy, 25.0, 650.0, tx.len()).unwrap();
        assert_eq!(rx, tx);
    }

    #[test]
    fn goertzel_matches_bin() {
        let xs: Vec<f64> = (0..80).map(|n| (2.0 * std::f64::consts::PI * 1000.0 * n as f64 / 8000.0).sin()).collect();
        // a full-scale sine on an exact bin has |X|² = (N/2)²
        assert!((goertzel_power(&xs, 1000.0, 8000) - 1600.0).abs() < 1e-6);
    }
}
