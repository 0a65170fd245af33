//! Canonical 44-byte-header PCM16 mono WAV.

use std::path::Path;

use crate::error::{Error, Result};
use crate::signal::SampleBuffer;

pub const WAV_HEADER_LEN: usize = 44;

fn quantize(x: f64) -> i16 {
    // f64::round rounds half away from zero
    (x.clamp(-1.0, 1.0) * 32767.0).round() as i16
}

pub fn wav_to_bytes(buf: &SampleBuffer) -> Vec<u8> {
    let data_len = (2 * buf.len()) as u32;
    let sr = buf.sample_rate();
    let mut out = Vec::with_capacity(WAV_HEADER_LEN + data_len as usize);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes()); // PCM
    out.extend_from_slice(&1u16.to_le_bytes()); // mono
    out.extend_from_slice(&sr.to_le_bytes());
    out.extend_from_slice(&(2 * sr).to_le_bytes()); // byte rate
    out.extend_from_slice(&2u16.to_le_bytes()); // block align
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for &x in buf.samples() {
        out.extend_from_slice(&quantize(x).to_le_bytes());
    }
    out
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

/// Reads PCM16 mono. Chunks other than `fmt ` and `data` are skipped.
pub fn wav_from_bytes(bytes: &[u8]) -> Result<SampleBuffer> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(Error::BadMagic {
            expected: b"RIFF....WAVE".to_vec(),
            found: bytes[..bytes.len().min(12)].to_vec(),
        });
    }
    let mut pos = 12;
    let mut fmt: Option<(u16, u16, u32, u16)> = None;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32_at(bytes, pos + 4) as usize;
        let body = pos + 8;
        if id == b"fmt " {
            if size < 16 || body + 16 > bytes.len() {
                return Err(Error::Truncated {
                    what: "WAV fmt chunk",
                    expected: 16,
                    actual: bytes.len().saturating_sub(body).min(size) as u64,
                });
            }
            let format = u16_at(bytes, body);
            let channels = u16_at(bytes, body + 2);
            let rate = u32_at(bytes, body + 4);
            let bits = u16_at(bytes, body + 14);
            if format != 1 {
                return Err(Error::UnsupportedWav {
                    field: "format_code",
                    value: format.to_string(),
                });
            }
            if channels != 1 {
                return Err(Error::UnsupportedWav {
                    field: "channels",
                    value: channels.to_string(),
                });
            }
            if bits != 16 {
                return Err(Error::UnsupportedWav {
                    field: "bits_per_sample",
                    value: bits.to_string(),
                });
            }
            fmt = Some((format, channels, rate, bits));
        } else if id == b"data" {
            let Some((_, _, rate, _)) = fmt else {
                return Err(Error::Malformed {
                    what: "WAV file",
                    message: "data chunk before fmt chunk".into(),
                });
            };
            let available = bytes.len() - body;
            if available < size {
                return Err(Error::Truncated {
                    what: "WAV data chunk",
                    expected: size as u64,
                    actual: available as u64,
                });
            }
            if !size.is_multiple_of(2) {
                return Err(Error::Malformed {
                    what: "WAV data chunk",
                    message: format!("odd byte length {size}"),
                });
            }
            let samples = bytes[body..body + size]
                .chunks_exact(2)
                .map(|c| i16::from_le_bytes([c[0], c[1]]) as f64 / 32768.0)
                .collect();
            return SampleBuffer::new(samples, rate);
        }
        pos = body + size + (size & 1);
    }
    Err(Error::Malformed {
        what: "WAV file",
        message: if fmt.is_none() { "no fmt chunk" } else { "no data chunk" }.into(),
    })
}

pub fn wav_write(buf: &SampleBuffer, path: &Path) -> Result<()> {
    std::fs::write(path, wav_to_bytes(buf)).map_err(|e| Error::io(path, e))
}

pub fn wav_read(path: &Path) -> Result<SampleBuffer> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    wav_from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::gen_tone;

    #[test]
    fn header_fields() {
        let b = wav_to_bytes(&SampleBuffer::new(vec![0.0; 10], 8000).unwrap());
        assert_eq!(b.len(), 64);
        assert_eq!(&b[0..4], b"RIFF");
        assert_eq!(&b[8..12], b"WAVE");
        assert_eq!(u16_at(&b, 20), 1);
        assert_eq!(u16_at(&b, 22), 1);
        assert_eq!(u32_at(&b, 24), 8000);
        assert_eq!(u32_at(&b, 40), 20);
    }

    #[test]
    fn quantization_bound_and_clamp() {
        let tone = gen_tone(440.0, 0.9, 0.1, 8000, 0.0).unwrap();
        let back = wav_from_bytes(&wav_to_bytes(&tone)).unwrap();
        assert_eq!(back.sample_rate(), 8000);
        for (a, b) in tone.samples().iter().zip(back.samples()) {
            assert!((a - b).abs() <= 1.0 / 32768.0 + 1e-4);
        }
        let over = wav_to_bytes(&SampleBuffer::new(vec![1.5, -1.5, 0.5 / 32767.0], 8000).unwrap());
        assert_eq!(i16::from_le_bytes([over[44], over[45]]), 32767);
        assert_eq!(i16::from_le_bytes([over[46], over[47]]), -32767);
        assert_eq!(i16::from_le_bytes([over[48], over[49]]), 1);
    }

    #[test]
    fn rejects_stereo_and_float() {
        let mut b = wav_to_bytes(&SampleBuffer::new(vec![0.0; 4], 8000).unwrap());
        b[22] = 2;
        assert!(matches!(wav_from_bytes(&b), Err(Error::UnsupportedWav { field: "channels", .. })));
        b[22] = 1;
        b[20] = 3;
        assert!(matches!(wav_from_bytes(&b), Err(Error::UnsupportedWav { field: "format_code", .. })));
        b[20] = 1;
        let cut = &b[..b.len() - 1];
        assert!(matches!(wav_from_bytes(cut), Err(Error::Truncated { .. })));
    }
}
