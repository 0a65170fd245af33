//! Data cleaning: FIR filtering, outlier flagging and manifest validation.
//!
//! Nothing here deletes data. Outliers and violations are reported; a
//! filtered manifest is a separate, explicit step.

pub mod fir;
pub mod outliers;
pub mod validate;

pub use fir::{apply_fir, design_fir, FilterKind, FirFilter};
pub use outliers::{detect_outliers, FeatureTable, OutlierFlag, OutlierMethod, OutlierReport};
pub use validate::{validate_manifest, ValidationReport, Violation, ViolationKind};
