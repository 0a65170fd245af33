//! Denoising and classification metrics, signal decoders, and reports.

pub mod cw;
pub mod metrics;
pub mod psk31;
pub mod report;

pub use cw::{cw_unit_bits, decode_cw, CwDecode};
pub use metrics::{ber, classification_report, snr_improvement, spectrogram_mse, ClassificationReport, SnrImprovement};
pub use psk31::{decode_psk31, psk31_bits_within};
pub use report::{emit_report, AggregateMetrics, EvalReport, RecordMetrics, ReportFormat};
