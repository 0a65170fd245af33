//! Synthetic amateur-radio signals, DSP features, a small convolutional
//! network engine, and the metrics used to evaluate clean/noisy
//! classification and spectrogram-mask denoising.

// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod augment;
pub mod clean;
pub mod dsp;
pub mod error;
pub mod eval;
pub mod io;
pub mod nn;
pub mod pipeline;
pub mod record;
pub mod rng;
pub mod signal;
pub mod synth;
pub mod tasks;

pub use error::{Error, Result};
pub use record::{BinaryLabel, DatasetRecord, SnrDb};
pub use signal::{SampleBuffer, SignalClass};
