//! Differential BPSK at 31.25 baud with cosine-shaped phase reversals.
//!
//! A `0` bit reverses the carrier phase, a `1` keeps it. Each reversal is a
//! half-cosine amplitude transition one symbol long, centred on the symbol
//! boundary, so the envelope passes through zero exactly at the boundary and
//! every symbol centre carries full amplitude. The sign before the first
//! symbol is `+1`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::signal::SampleBuffer;
use crate::synth::tones::{check_below_nyquist, phase_at};

pub const PSK31_BAUD: f64 = 31.25;

pub fn symbol_len(sample_rate: u32) -> usize {
    (sample_rate as f64 / PSK31_BAUD).round() as usize
}

/// Carrier sign held at each symbol centre.
pub fn symbol_signs(bits: &[bool]) -> Vec<f64> {
    let mut sign = 1.0;
    bits.iter()
        .map(|&b| {
            if !b {
                sign = -sign;
            }
            sign
        })
        .collect()
}

pub fn gen_psk31(bits: &[bool], carrier_freq: f64, sample_rate: u32) -> Result<SampleBuffer> {
    if bits.is_empty() {
        return Err(Error::param("PSK31 needs at least one bit"));
    }
    check_below_nyquist("PSK31 carrier", carrier_freq, sample_rate)?;
    let t = symbol_len(sample_rate);
    if t < 2 {
        return Err(Error::param("sample rate too low for PSK31"));
    }
    let half = t as f64 / 2.0;
    let signs = symbol_signs(bits);
    let mut samples = Vec::with_capacity(bits.len() * t);
    for (k, &sign) in signs.iter().enumerate() {
        let prev = if k == 0 { 1.0 } else { signs[k - 1] };
        let reversal_in = !bits[k];
        let reversal_out = bits.get(k + 1).is_some_and(|b| !b);
        for p in 0..t {
            let pos = p as f64;
            let amp = if pos < half && reversal_in {
                prev * (PI * (pos + half) / t as f64).cos()
            } else if pos >= half && reversal_out {
                sign * (PI * (pos - half) / t as f64).cos()
            } else {
                sign
            };
            let n = k * t + p;
            samples.push(amp * phase_at(carrier_freq, n, sample_rate).sin());
        }
    }
    SampleBuffer::new(samples, sample_rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::tones::gen_tone;

    #[test]
    fn all_ones_is_a_pure_tone() {
        let b = gen_psk31(&[true; 4], 1000.0, 8000).unwrap();
        assert_eq!(b.len(), 1024);
        let tone = gen_tone(1000.0, 1.0, 1024.0 / 8000.0, 8000, 0.0).unwrap();
        assert_eq!(b, tone);
        assert!((b.power() - 0.5).abs() < 1e-3);
    }

    #[test]
    fn single_zero_ends_reversed() {
        let b = gen_psk31(&[false], 1000.0, 8000).unwrap();
        let n = b.len() - 1;
        let continuous = phase_at(1000.0, n, 8000).sin();
        assert!((b.samples()[n] + continuous).abs() < 1e-12);
        // envelope passes through zero at the start boundary
        assert!(b.samples()[0].abs() < 1e-12);
    }

    #[test]
    fn reversal_envelope_is_continuous() {
        let bits = [true, false, false, true, false];
        let b = gen_psk31(&bits, 1000.0, 8000).unwrap();
        let max_step = b
            .samples()
            .windows(2)
            .map(|w| (w[1] - w[0]).abs())
            .fold(0.0, f64::max);
        // a 1 kHz unit sine moves at most 2π·1000/8000 ≈ 0.785 per sample
        assert!(max_step < 0.8, "{max_step}");
    }

    #[test]
    fn signs_follow_differential_rule() {
        assert_eq!(symbol_signs(&[true, false, true, false]), vec![1.0, -1.0, -1.0, 1.0]);
    }
}
