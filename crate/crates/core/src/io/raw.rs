//! Headerless little-endian 32-bit float signal files.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::signal::SampleBuffer;

pub fn encode_f32le(samples: &[f64]) -> Vec<u8> {
    samples
        .iter()
        .flat_map(|&x| (x as f32).to_le_bytes())
        .collect()
}

pub fn decode_f32le(bytes: &[u8]) -> Result<Vec<f64>> {
    if !bytes.len().is_multiple_of(4) {
        return Err(Error::Malformed {
            what: "raw float32 file",
            message: format!("length {} is not a multiple of 4", bytes.len()),
        });
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect())
}

pub fn write_raw_f32(path: &Path, buf: &SampleBuffer) -> Result<()> {
    fs::write(path, encode_f32le(buf.samples())).map_err(|e| Error::io(path, e))
}

pub fn read_raw_f32(path: &Path, sample_rate: u32) -> Result<SampleBuffer> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    SampleBuffer::new(decode_f32le(&bytes)?, sample_rate)
}
