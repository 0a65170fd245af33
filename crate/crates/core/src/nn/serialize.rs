//! Model container: `HAMNN1\n`, a little-endian u64 header length, a JSON
//! header, then the parameter tensors as little-endian f32 in header order.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::model::{LayerSpec, Model};
use crate::nn::tensor::Tensor;

pub const MAGIC: &[u8; 7] = b"HAMNN1\n";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamEntry {
    pub name: String,
    pub shape: Vec<usize>,
    /// Byte offset from the start of the parameter section.
    pub offset: u64,
    pub length: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelHeader {
    pub format_version: u32,
    pub input_shape: Vec<usize>,
    pub layers: Vec<LayerSpec>,
    pub params: Vec<ParamEntry>,
}

pub fn model_to_bytes(model: &Model) -> Vec<u8> {
    let mut offset = 0u64;
    let params = model
        .param_names()
        .into_iter()
        .zip(model.params())
        .map(|(name, t)| {
            let length = 4 * t.len() as u64;
            let e = ParamEntry {
                name,
                shape: t.shape().to_vec(),
                offset,
                length,
            };
            offset += length;
            e
        })
        .collect();
    let header = ModelHeader {
        format_version: FORMAT_VERSION,
        input_shape: model.input_shape().to_vec(),
        layers: model.layers().to_vec(),
        params,
    };
    let json = serde_json::to_vec(&header).expect("model header serializes");
    let mut out = Vec::with_capacity(15 + json.len() + offset as usize);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for t in model.params() {
        for &x in t.data() {
            out.extend_from_slice(&(x as f32).to_le_bytes());
        }
    }
    out
}

pub fn model_from_bytes(bytes: &[u8]) -> Result<Model> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::BadMagic {
            expected: MAGIC.to_vec(),
            found: bytes[..bytes.len().min(MAGIC.len())].to_vec(),
        });
    }
    let rest = &bytes[MAGIC.len()..];
    if rest.len() < 8 {
        return Err(Error::Truncated {
            what: "header length",
            expected: 8,
            actual: rest.len() as u64,
        });
    }
    let header_len = u64::from_le_bytes(rest[..8].try_into().expect("8 bytes"));
    let rest = &rest[8..];
    if (rest.len() as u64) < header_len {
        return Err(Error::Truncated {
            what: "model header",
            expected: header_len,
            actual: rest.len() as u64,
        });
    }
    let (json, blob) = rest.split_at(header_len as usize);
    let malformed = |message: String| Error::Malformed {
        what: "model header",
        message,
    };
    // check the version before the full schema so newer files fail clearly
    let raw: serde_json::Value = serde_json::from_slice(json).map_err(|e| malformed(e.to_string()))?;
    let version = raw
        .get("format_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| malformed("missing format_version".into()))?;
    if version != FORMAT_VERSION as u64 {
        return Err(Error::UnsupportedVersion {
            found: version.min(u32::MAX as u64) as u32,
            supported: FORMAT_VERSION,
        });
    }
    let header: ModelHeader = serde_json::from_value(raw).map_err(|e| malformed(e.to_string()))?;

    let expected: u64 = header.params.iter().map(|p| p.length).sum();
    if (blob.len() as u64) < expected {
        return Err(Error::Truncated {
            what: "parameter blob",
            expected,
            actual: blob.len() as u64,
        });
    }
    if blob.len() as u64 > expected {
        return Err(Error::Malformed {
            what: "parameter blob",
            message: format!("{} trailing bytes", blob.len() as u64 - expected),
        });
    }
    let mut params = Vec::with_capacity(header.params.len());
    let mut cursor = 0u64;
    for p in &header.params {
        let n: usize = p.shape.iter().product();
        if p.offset != cursor || p.length != 4 * n as u64 {
            return Err(malformed(format!(
                "tensor {} has offset {} and length {}, expected {} and {}",
                p.name,
                p.offset,
                p.length,
                cursor,
                4 * n
            )));
        }
        let bytes = &blob[p.offset as usize..(p.offset + p.length) as usize];
        let data = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)
            .collect();
        params.push(Tensor::new(p.shape.clone(), data)?);
        cursor += p.length;
    }
    let model = Model::from_parts(header.input_shape, header.layers, params)?;
    let names = model.param_names();
    for (p, want) in header.params.iter().zip(&names) {
        if &p.name != want {
            return Err(malformed(format!("parameter named {:?}, expected {want:?}", p.name)));
        }
    }
    if model.params().iter().any(|t| !t.all_finite()) {
        return Err(Error::Malformed {
            what: "parameter blob",
            message: "non-finite weight".into(),
        });
    }
    Ok(model)
}

pub fn save_model(model: &Model, path: &Path) -> Result<()> {
    std::fs::write(path, model_to_bytes(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<Model> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    model_from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::model::build_classifier;

    fn small() -> Model {
        build_classifier(&[16, 12, 1], 1, 5).unwrap()
    }

    #[test]
    fn round_trip_predictions() {
        let m = small();
        let back = model_from_bytes(&model_to_bytes(&m)).unwrap();
        assert_eq!(back.layers(), m.layers());
        let x = Tensor::new(vec![16, 12, 1], (0..192).map(|i| (i as f64 * 0.37).sin()).collect()).unwrap();
        let a = m.predict(&x).unwrap().data()[0];
        let b = back.predict(&x).unwrap().data()[0];
        assert!((a - b).abs() < 1e-6);
        assert_eq!(model_to_bytes(&back), model_to_bytes(&m));
    }

    #[test]
    fn corruptions_are_distinct() {
        let bytes = model_to_bytes(&small());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(model_from_bytes(&bad), Err(Error::BadMagic { .. })));
        let cut = &bytes[..bytes.len() - 1];
        match model_from_bytes(cut) {
            Err(Error::Truncated {
                what: "parameter blob",
                expected,
                actual,
            }) => assert_eq!(expected, actual + 1),
            other => panic!("{other:?}"),
        }
        assert!(model_from_bytes(&bytes[..10]).is_err());
        assert!(model_from_bytes(&[]).is_err());
    }
}
