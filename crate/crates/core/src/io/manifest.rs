//! JSON Lines manifests: one [`DatasetRecord`] per line.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::record::DatasetRecord;

pub fn manifest_to_string(records: &[DatasetRecord]) -> Result<String> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn write_manifest(path: &Path, records: &[DatasetRecord]) -> Result<()> {
    fs::write(path, manifest_to_string(records)?).map_err(|e| Error::io(path, e))
}

pub fn parse_manifest(text: &str) -> Result<Vec<DatasetRecord>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Malformed {
                what: "manifest line",
                message: format!("line {}: {e}", i + 1),
            })
        })
        .collect()
}

pub fn read_manifest(path: &Path) -> Result<Vec<DatasetRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_manifest(&text)
}

/// Directory that record paths in a manifest are relative to.
pub fn data_root(manifest_path: &Path) -> PathBuf {
    manifest_path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."))
}
