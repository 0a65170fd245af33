//! File formats: manifests, raw float signals, WAV.

pub mod manifest;
pub mod raw;
pub mod wav;

pub use manifest::{data_root, read_manifest, write_manifest};
pub use raw::{read_raw_f32, write_raw_f32};
pub use wav::{wav_read, wav_write};
