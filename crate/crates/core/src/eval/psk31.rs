//! Coherent differential PSK31 receiver with known carrier and symbol timing.

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::signal::SampleBuffer;
use crate::synth::psk31::symbol_len;

/// Baseband correlation of each complete symbol with the carrier.
pub fn psk31_correlations(buf: &SampleBuffer, carrier_freq: f64) -> Result<Vec<Complex64>> {
    let t = symbol_len(buf.sample_rate());
    if buf.len() < t {
        return Err(Error::TooShort {
            len: buf.len(),
            needed: t,
            hint: "PSK31 decoding needs at least one full symbol",
        });
    }
    let w = 2.0 * std::f64::consts::PI * carrier_freq / buf.sample_rate() as f64;
    Ok(buf
        .samples()
        .chunks_exact(t)
        .enumerate()
        .map(|(k, sym)| {
            sym.iter()
                .enumerate()
                .map(|(p, &x)| x * Complex64::from_polar(1.0, -w * (k * t + p) as f64))
                .sum()
        })
        .collect())
}

/// One bit per complete symbol: `1` when the phase is kept relative to the
/// previous symbol, `0` on a reversal. Before the first symbol the carrier
/// sign is `+1`, whose correlation with `e^{-jωn}` points along `-j`.
pub fn decode_psk31(buf: &SampleBuffer, carrier_freq: f64) -> Result<Vec<bool>> {
    let corr = psk31_correlations(buf, carrier_freq)?;
    let mut prev = Complex64::new(0.0, -1.0);
    Ok(corr
        .into_iter()
        .map(|c| {
            let bit = (c * prev.conj()).re > 0.0;
            prev = c;
            bit
        })
        .collect())
}

/// Transmitted bits that fall within complete symbols of an `n_samples` buffer.
pub fn psk31_bits_within(bits: &[bool], n_samples: usize, sample_rate: u32) -> &[bool] {
    let n = n_samples / symbol_len(sample_rate);
    &bits[..n.min(bits.len())]
}
