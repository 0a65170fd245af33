//! Sinusoidal building blocks and the tonal modulation proxies.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::signal::{sample_count, SampleBuffer};

pub(crate) fn phase_at(freq: f64, n: usize, sample_rate: u32) -> f64 {
    2.0 * PI * freq * n as f64 / sample_rate as f64
}

pub(crate) fn check_below_nyquist(what: &str, freq: f64, sample_rate: u32) -> Result<()> {
    let nyquist = sample_rate as f64 / 2.0;
    if !freq.is_finite() || freq < 0.0 || freq >= nyquist {
        return Err(Error::param(format!(
            "{what} {freq} Hz must lie in [0, {nyquist}) Hz"
        )));
    }
    Ok(())
}

/// `amplitude · sin(2π·freq·n/sample_rate + phase)` for `round(duration_s·sample_rate)` samples.
pub fn gen_tone(
    freq: f64,
    amplitude: f64,
    duration_s: f64,
    sample_rate: u32,
    phase: f64,
) -> Result<SampleBuffer> {
    check_below_nyquist("tone frequency", freq, sample_rate)?;
    if !(amplitude >= 0.0) {
        return Err(Error::param(format!("amplitude must be >= 0, got {amplitude}")));
    }
    let n = sample_count(duration_s, sample_rate)?;
    let samples = (0..n)
        .map(|i| amplitude * (phase_at(freq, i, sample_rate) + phase).sin())
        .collect();
    SampleBuffer::new(samples, sample_rate)
}

/// Double-sideband AM with a sinusoidal modulating tone, normalized so the
/// envelope peak equals `amplitude`.
pub fn gen_am(
    carrier_freq: f64,
    mod_freq: f64,
    depth: f64,
    amplitude: f64,
    duration_s: f64,
    sample_rate: u32,
) -> Result<SampleBuffer> {
    if !(0.0..=1.0).contains(&depth) {
        return Err(Error::param(format!("AM depth {depth} outside [0, 1]")));
    }
    check_below_nyquist("AM carrier", carrier_freq, sample_rate)?;
    check_below_nyquist("AM modulating tone", mod_freq, sample_rate)?;
    check_below_nyquist("AM upper sideband", carrier_freq + mod_freq, sample_rate)?;
    let n = sample_count(duration_s, sample_rate)?;
    let norm = 1.0 / (1.0 + depth);
    let samples = (0..n)
        .map(|i| {
            let envelope = 1.0 + depth * phase_at(mod_freq, i, sample_rate).sin();
            amplitude * norm * envelope * phase_at(carrier_freq, i, sample_rate).sin()
        })
        .collect();
    SampleBuffer::new(samples, sample_rate)
}

/// Sinusoidally modulated FM: `sin(2π·fc·t + (deviation/mod_freq)·sin(2π·mod_freq·t))`.
pub fn gen_fm(
    carrier_freq: f64,
    mod_freq: f64,
    deviation: f64,
    amplitude: f64,
    duration_s: f64,
    sample_rate: u32,
) -> Result<SampleBuffer> {
    if !(deviation >= 0.0) {
        return Err(Error::param(format!("FM deviation must be >= 0, got {deviation}")));
    }
    if deviation > 0.0 && !(mod_freq > 0.0) {
        return Err(Error::param("FM with nonzero deviation needs mod_freq > 0"));
    }
    if deviation > carrier_freq {
        return Err(Error::param(format!(
            "FM deviation {deviation} Hz exceeds carrier {carrier_freq} Hz"
        )));
    }
    check_below_nyquist("FM carrier", carrier_freq, sample_rate)?;
    check_below_nyquist("FM peak frequency", carrier_freq + deviation, sample_rate)?;
    let n = sample_count(duration_s, sample_rate)?;
    let index = if deviation == 0.0 { 0.0 } else { deviation / mod_freq };
    let samples = (0..n)
        .map(|i| {
            let wobble = index * phase_at(mod_freq, i, sample_rate).sin();
            amplitude * (phase_at(carrier_freq, i, sample_rate) + wobble).sin()
        })
        .collect();
    SampleBuffer::new(samples, sample_rate)
}

pub const FSK8_TONES: u8 = 8;

/// Phase-continuous 8-FSK: symbol `s` transmits `base_freq + s·spacing` for
/// `round(sample_rate/baud)` samples.
pub fn gen_fsk8(
    symbols: &[u8],
    base_freq: f64,
    spacing: f64,
    baud: f64,
    amplitude: f64,
    sample_rate: u32,
) -> Result<SampleBuffer> {
    if symbols.is_empty() {
        return Err(Error::param("FSK8 needs at least one symbol"));
    }
    if let Some(&s) = symbols.iter().find(|&&s| s >= FSK8_TONES) {
        return Err(Error::param(format!("FSK8 symbol {s} outside 0..=7")));
    }
    if !(spacing > 0.0) || !(baud > 0.0) {
        return Err(Error::param("FSK8 spacing and baud must be positive"));
    }
    check_below_nyquist("FSK8 base frequency", base_freq, sample_rate)?;
    check_below_nyquist(
        "FSK8 top tone",
        base_freq + (FSK8_TONES - 1) as f64 * spacing,
        sample_rate,
    )?;
    let symbol_len = (sample_rate as f64 / baud).round() as usize;
    if symbol_len == 0 {
        return Err(Error::param(format!("FSK8 baud {baud} exceeds the sample rate")));
    }
    let mut samples = Vec::with_capacity(symbols.len() * symbol_len);
    let mut phase = 0.0f64;
    for &s in symbols {
        let step = 2.0 * PI * (base_freq + s as f64 * spacing) / sample_rate as f64;
        for _ in 0..symbol_len {
            samples.push(amplitude * phase.sin());
            phase = (phase + step) % (2.0 * PI);
        }
    }
    SampleBuffer::new(samples, sample_rate)
}

pub fn fsk8_symbol_len(baud: f64, sample_rate: u32) -> usize {
    (sample_rate as f64 / baud).round() as usize
}
