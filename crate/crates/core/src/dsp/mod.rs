//! Preprocessing and feature extraction.

pub mod features;
pub mod fft;
pub mod matrix;
pub mod mfcc;
pub mod normalize;
pub mod stats;
pub mod stft;

pub use features::{extract_features, log_minmax, FeatureVector};
pub use matrix::Matrix;
pub use mfcc::{dct_matrix, mel_filterbank, mfcc, MelFilterbank};
pub use normalize::{minmax_normalize, zscore_normalize};
pub use stats::{estimate_snr, spectral_entropy, time_stats, TimeStats};
pub use stft::{istft, stft, Spectrogram, Window, DEFAULT_FFT_SIZE, DEFAULT_HOP};
