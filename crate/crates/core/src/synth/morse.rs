//! Morse code table, keying timeline and the CW generator.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::signal::{sample_count, SampleBuffer};
use crate::synth::tones::{check_below_nyquist, phase_at};

/// International Morse code for the supported alphabet.
const MORSE_TABLE: [(char, &str); 36] = [
    ('A', ".-"),
    ('B', "-..."),
    ('C', "-.-."),
    ('D', "-.."),
    ('E', "."),
    ('F', "..-."),
    ('G', "--."),
    ('H', "...."),
    ('I', ".."),
    ('J', ".---"),
    ('K', "-.-"),
    ('L', ".-.."),
    ('M', "--"),
    ('N', "-."),
    ('O', "---"),
    ('P', ".--."),
    ('Q', "--.-"),
    ('R', ".-."),
    ('S', "..."),
    ('T', "-"),
    ('U', "..-"),
    ('V', "...-"),
    ('W', ".--"),
    ('X', "-..-"),
    ('Y', "-.--"),
    ('Z', "--.."),
    ('0', "-----"),
    ('1', ".----"),
    ('2', "..---"),
    ('3', "...--"),
    ('4', "....-"),
    ('5', "....."),
    ('6', "-...."),
    ('7', "--..."),
    ('8', "---.."),
    ('9', "----."),
];

pub const MORSE_ALPHABET: &str = "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";

pub const DOT_UNITS: u32 = 1;
pub const DASH_UNITS: u32 = 3;
pub const ELEMENT_GAP_UNITS: u32 = 1;
pub const CHAR_GAP_UNITS: u32 = 3;
pub const WORD_GAP_UNITS: u32 = 7;

/// Raised-cosine keying edge length.
pub const KEY_EDGE_S: f64 = 0.005;

pub fn encode_char(c: char) -> Option<&'static str> {
    MORSE_TABLE
        .iter()
        .find(|(k, _)| *k == c)
        .map(|(_, code)| *code)
}

pub fn decode_symbol(code: &str) -> Option<char> {
    MORSE_TABLE
        .iter()
        .find(|(_, v)| *v == code)
        .map(|(k, _)| *k)
}

/// Seconds per Morse unit (PARIS standard).
pub fn unit_seconds(wpm: f64) -> f64 {
    1.2 / wpm
}

/// Splits text into words, collapsing runs of spaces, and checks the alphabet.
pub fn words(text: &str) -> Result<Vec<&str>> {
    if let Some(c) = text
        .chars()
        .find(|c| *c != ' ' && encode_char(*c).is_none())
    {
        return Err(Error::UnsupportedChar(c));
    }
    Ok(text.split(' ').filter(|w| !w.is_empty()).collect())
}

/// Canonical form of a Morse message: single spaces, no leading/trailing space.
pub fn normalize_text(text: &str) -> Result<String> {
    Ok(words(text)?.join(" "))
}

/// Key-down/key-up runs measured in Morse units, without the trailing gap.
pub fn unit_pattern(text: &str) -> Result<Vec<(bool, u32)>> {
    let words = words(text)?;
    if words.is_empty() {
        return Err(Error::param("Morse text contains no characters"));
    }
    let mut pattern = Vec::new();
    for (wi, word) in words.iter().enumerate() {
        if wi > 0 {
            pattern.push((false, WORD_GAP_UNITS));
        }
        for (ci, c) in word.chars().enumerate() {
            if ci > 0 {
                pattern.push((false, CHAR_GAP_UNITS));
            }
            let code = encode_char(c).ok_or(Error::UnsupportedChar(c))?;
            for (ei, e) in code.chars().enumerate() {
                if ei > 0 {
                    pattern.push((false, ELEMENT_GAP_UNITS));
                }
                pattern.push((true, if e == '.' { DOT_UNITS } else { DASH_UNITS }));
            }
        }
    }
    Ok(pattern)
}

/// Per-unit key state (true = key down) for a message.
pub fn unit_bits(text: &str) -> Result<Vec<bool>> {
    Ok(unit_pattern(text)?
        .into_iter()
        .flat_map(|(on, units)| std::iter::repeat_n(on, units as usize))
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct KeySegment {
    pub on: bool,
    pub start: usize,
    pub len: usize,
    pub units: u32,
}

/// Exact keying of a generated CW buffer, in samples and units.
#[derive(Debug, Clone, PartialEq)]
pub struct CwTimeline {
    pub text: String,
    pub wpm: f64,
    pub unit_samples: f64,
    pub segments: Vec<KeySegment>,
}

impl CwTimeline {
    pub fn total_units(&self) -> u32 {
        self.segments.iter().map(|s| s.units).sum()
    }

    /// Key state per unit.
    pub fn unit_bits(&self) -> Vec<bool> {
        self.segments
            .iter()
            .flat_map(|s| std::iter::repeat_n(s.on, s.units as usize))
            .collect()
    }

    /// Key state per unit, limited to units that end within `n_samples`.
    pub fn unit_bits_within(&self, n_samples: usize) -> Vec<bool> {
        let full_units = (n_samples as f64 / self.unit_samples).floor() as usize;
        let mut bits = self.unit_bits();
        bits.truncate(full_units);
        bits
    }
}

fn key_envelope(len: usize, edge: usize) -> impl Iterator<Item = f64> {
    let ramp = edge.min(len / 2);
    (0..len).map(move |i| {
        let from_edge = i.min(len - 1 - i);
        if from_edge < ramp {
            0.5 * (1.0 - (PI * (from_edge as f64 + 0.5) / ramp as f64).cos())
        } else {
            1.0
        }
    })
}

/// On/off-keyed carrier at `tone_freq`, unit amplitude, truncated or
/// zero-padded to `duration_s`.
pub fn gen_cw(
    text: &str,
    wpm: f64,
    tone_freq: f64,
    sample_rate: u32,
    duration_s: f64,
) -> Result<(SampleBuffer, CwTimeline)> {
    if !(wpm > 0.0) || !wpm.is_finite() {
        return Err(Error::param(format!("wpm must be positive, got {wpm}")));
    }
    check_below_nyquist("CW tone", tone_freq, sample_rate)?;
    let n_out = sample_count(duration_s, sample_rate)?;
    let pattern = unit_pattern(text)?;
    let unit_samples = unit_seconds(wpm) * sample_rate as f64;

    let mut segments = Vec::with_capacity(pattern.len());
    let mut elapsed_units = 0u32;
    for (on, units) in pattern {
        let start = (elapsed_units as f64 * unit_samples).round() as usize;
        elapsed_units += units;
        let end = (elapsed_units as f64 * unit_samples).round() as usize;
        segments.push(KeySegment {
            on,
            start,
            len: end - start,
            units,
        });
    }

    let edge = (KEY_EDGE_S * sample_rate as f64).round() as usize;
    let mut samples = vec![0.0; n_out];
    for seg in segments.iter().filter(|s| s.on) {
        for (k, env) in key_envelope(seg.len, edge).enumerate() {
            let n = seg.start + k;
            if n >= n_out {
                break;
            }
            samples[n] = env * phase_at(tone_freq, n, sample_rate).sin();
        }
    }

    let timeline = CwTimeline {
        text: normalize_text(text)?,
        wpm,
        unit_samples,
        segments,
    };
    Ok((SampleBuffer::new(samples, sample_rate)?, timeline))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_dot_is_one_unit() {
        let (buf, tl) = gen_cw("E", 20.0, 600.0, 8000, 1.0).unwrap();
        assert_eq!(tl.segments.len(), 1);
        assert_eq!(tl.segments[0].start, 0);
        assert_eq!(tl.segments[0].len, 480);
        assert!(buf.samples()[480..].iter().all(|&x| x == 0.0));
        // ramps live inside the key-down span
        let peak = buf.samples()[..480].iter().fold(0.0f64, |m, x| m.max(x.abs()));
        assert!(peak > 0.99);
    }

    #[test]
    fn single_dash_is_three_units() {
        let (_, tl) = gen_cw("T", 20.0, 600.0, 8000, 1.0).unwrap();
        assert_eq!(tl.segments[0].len, 1440);
    }

    #[test]
    fn paris_is_43_units() {
        // P .--. = 1+1+3+1+3+1+1 = 11, A .- = 5, R .-. = 7, I .. = 3, S ... = 5
        // elements 31 + four inter-character gaps 12 = 43 (50 minus the word gap)
        let hand: u32 = 11 + 5 + 7 + 3 + 5 + 4 * 3;
        assert_eq!(hand, 43);
        let (_, tl) = gen_cw("PARIS", 20.0, 600.0, 8000, 3.0).unwrap();
        assert_eq!(tl.total_units(), hand);
    }

    #[test]
    fn unsupported_char_is_named() {
        match gen_cw("SOS!", 20.0, 600.0, 8000, 1.0) {
            Err(Error::UnsupportedChar('!')) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            gen_cw("sos", 20.0, 600.0, 8000, 1.0),
            Err(Error::UnsupportedChar('s'))
        ));
    }

    #[test]
    fn spaces_collapse() {
        assert_eq!(normalize_text("  HI   THERE ").unwrap(), "HI THERE");
        let a = unit_bits("HI THERE").unwrap();
        let b = unit_bits(" HI  THERE").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn envelope_is_symmetric_and_bounded() {
        let env: Vec<f64> = key_envelope(480, 40).collect();
        for i in 0..480 {
            assert!((env[i] - env[479 - i]).abs() < 1e-15);
            assert!((0.0..=1.0).contains(&env[i]));
        }
        assert_eq!(env[240], 1.0);
    }

    #[test]
    fn output_is_truncated_to_duration() {
        let (buf, _) = gen_cw("HELLO WORLD", 20.0, 600.0, 8000, 0.5).unwrap();
        assert_eq!(buf.len(), 4000);
    }
}
