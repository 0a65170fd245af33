//! Deterministic generators for amateur-radio signal classes and channel
//! impairments.

pub mod channel;
pub mod dataset;
pub mod morse;
pub mod psk31;
pub mod tones;

pub use channel::{add_awgn, apply_drift, gaussian_noise};
pub use dataset::{render, render_clean, render_record, synth_dataset, DatasetConfig, Rendered, Truth};
pub use morse::{gen_cw, CwTimeline, KeySegment};
pub use psk31::gen_psk31;
pub use tones::{gen_am, gen_fm, gen_fsk8, gen_tone};
