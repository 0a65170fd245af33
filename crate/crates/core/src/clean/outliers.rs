//! Statistical outlier flagging over per-record feature tables.

use serde::{Deserialize, Serialize};

use crate::dsp::features::FeatureVector;
use crate::error::{Error, Result};

pub const DEFAULT_Z_THRESHOLD: f64 = 4.0;
pub const DEFAULT_IQR_MULTIPLIER: f64 = 1.5;
pub const MIN_RECORDS: usize = 4;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutlierMethod {
    #[default]
    Zscore,
    Iqr,
}

impl OutlierMethod {
    pub fn default_threshold(self) -> f64 {
        match self {
            OutlierMethod::Zscore => DEFAULT_Z_THRESHOLD,
            OutlierMethod::Iqr => DEFAULT_IQR_MULTIPLIER,
        }
    }
}

/// Rows of named scalar features, one per record.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub ids: Vec<String>,
    pub names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl FeatureTable {
    pub fn new(names: Vec<String>) -> Self {
        Self {
            ids: Vec::new(),
            names,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, id: impl Into<String>, row: Vec<f64>) -> Result<()> {
        if row.len() != self.names.len() {
            return Err(Error::LengthMismatch {
                left: row.len(),
                right: self.names.len(),
            });
        }
        self.ids.push(id.into());
        self.rows.push(row);
        Ok(())
    }

    /// Scalar features shared by every record (SNR only when all have it).
    pub fn from_features<'a>(
        records: impl IntoIterator<Item = (&'a str, &'a FeatureVector)>,
    ) -> Result<Self> {
        let records: Vec<_> = records.into_iter().collect();
        let with_snr = !records.is_empty() && records.iter().all(|(_, f)| f.snr_db.is_some());
        let names: Vec<String> = ["mean", "variance", "skewness", "kurtosis", "spectral_entropy"]
            .iter()
            .map(|s| s.to_string())
            .chain(with_snr.then(|| "snr_db".to_string()))
            .collect();
        let mut table = FeatureTable::new(names);
        for (id, f) in records {
            let mut row = vec![f.mean, f.variance, f.skewness, f.kurtosis, f.spectral_entropy];
            if with_snr {
                row.push(f.snr_db.unwrap_or_default());
            }
            table.push(id, row)?;
        }
        Ok(table)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Column values sorted ascending, so summary statistics do not depend
    /// on record order.
    fn sorted_column(&self, c: usize) -> Vec<f64> {
        let mut col: Vec<f64> = self.rows.iter().map(|r| r[c]).collect();
        col.sort_by(f64::total_cmp);
        col
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierReason {
    pub feature: String,
    pub value: f64,
    /// z-score (zscore method) or the violated fence (iqr method).
    pub statistic: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierFlag {
    pub id: String,
    pub reasons: Vec<OutlierReason>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierReport {
    pub method: OutlierMethod,
    pub threshold: f64,
    pub n_records: usize,
    pub flags: Vec<OutlierFlag>,
}

impl OutlierReport {
    pub fn flagged_ids(&self) -> Vec<&str> {
        self.flags.iter().map(|f| f.id.as_str()).collect()
    }
}

/// Quantile by linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn detect_outliers(table: &FeatureTable, method: OutlierMethod, threshold: f64) -> Result<OutlierReport> {
    if table.len() < MIN_RECORDS {
        return Err(Error::param(format!(
            "outlier detection needs at least {MIN_RECORDS} records, got {}",
            table.len()
        )));
    }
    if !(threshold > 0.0) {
        return Err(Error::param("outlier threshold must be positive"));
    }
    let n = table.len() as f64;
    let mut reasons: Vec<Vec<OutlierReason>> = vec![Vec::new(); table.len()];
    for (c, name) in table.names.iter().enumerate() {
        let sorted = table.sorted_column(c);
        match method {
            OutlierMethod::Zscore => {
                let mean = sorted.iter().sum::<f64>() / n;
                let var = sorted.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
                let std = var.sqrt();
                if !(std > 1e-12) {
                    continue;
                }
                for (r, row) in table.rows.iter().enumerate() {
                    let z = (row[c] - mean).abs() / std;
                    if z > threshold {
                        reasons[r].push(OutlierReason {
                            feature: name.clone(),
                            value: row[c],
                            statistic: z,
                            threshold,
                        });
                    }
                }
            }
            OutlierMethod::Iqr => {
                let q1 = quantile(&sorted, 0.25);
                let q3 = quantile(&sorted, 0.75);
                let iqr = q3 - q1;
                let (lo, hi) = (q1 - threshold * iqr, q3 + threshold * iqr);
                for (r, row) in table.rows.iter().enumerate() {
                    let v = row[c];
                    if v < lo || v > hi {
                        reasons[r].push(OutlierReason {
                            feature: name.clone(),
                            value: v,
                            statistic: if v < lo { lo } else { hi },
                            threshold,
                        });
                    }
                }
            }
        }
    }
    let flags = table
        .ids
        .iter()
        .zip(reasons)
        .filter(|(_, r)| !r.is_empty())
        .map(|(id, reasons)| OutlierFlag {
            id: id.clone(),
            reasons,
        })
        .collect();
    Ok(OutlierReport {
        method,
        threshold,
        n_records: table.len(),
        flags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn single(values: &[f64]) -> FeatureTable {
        let mut t = FeatureTable::new(vec!["x".into()]);
        for (i, v) in values.iter().enumerate() {
            t.push(format!("r{i}"), vec![*v]).unwrap();
        }
        t
    }

    #[test]
    fn identical_records_not_flagged() {
        let t = single(&[1.0; 10]);
        for m in [OutlierMethod::Zscore, OutlierMethod::Iqr] {
            assert!(detect_outliers(&t, m, m.default_threshold()).unwrap().flags.is_empty());
        }
    }

    #[test]
    fn zscore_flags_the_large_variance_record() {
        // 99 records at variance ≈ 0.5, one at 50. Hand computation: mean ≈ 0.995,
        // std ≈ 4.93, so the outlier sits near z = 9.9 and the rest below 0.2.
        let mut t = FeatureTable::new(vec!["mean".into(), "variance".into()]);
        for i in 0..99 {
            t.push(format!("r{i}"), vec![0.0, 0.5 + (i % 3) as f64 * 1e-3]).unwrap();
        }
        t.push("big", vec![0.0, 50.0]).unwrap();
        let report = detect_outliers(&t, OutlierMethod::Zscore, 4.0).unwrap();
        assert_eq!(report.flagged_ids(), vec!["big"]);
        let z = report.flags[0].reasons[0].statistic;
        assert!((z - 9.9).abs() < 0.1, "{z}");
    }

    #[test]
    fn iqr_flags_only_the_appended_value() {
        // 1..100 plus 1e6: 101 values, Q1 = 26, Q3 = 76, fences [-49, 151].
        let mut v: Vec<f64> = (1..=100).map(|i| i as f64).collect();
        v.push(1e6);
        let report = detect_outliers(&single(&v), OutlierMethod::Iqr, 1.5).unwrap();
        assert_eq!(report.flagged_ids(), vec!["r100"]);
        assert_eq!(report.flags[0].reasons[0].statistic, 151.0);
    }

    #[test]
    fn quantile_interpolates() {
        let s: Vec<f64> = (1..=101).map(|i| i as f64).collect();
        assert_eq!(quantile(&s, 0.25), 26.0);
        assert_eq!(quantile(&[1.0, 2.0], 0.5), 1.5);
    }

    #[test]
    fn too_few_records() {
        assert!(detect_outliers(&single(&[1.0, 2.0, 3.0]), OutlierMethod::Zscore, 4.0).is_err());
    }

    proptest! {
        #[test]
        fn permutation_invariant(
            values in prop::collection::vec(-100.0f64..100.0, 4..40),
            seed in any::<u64>(),
        ) {
            let mut rng = crate::rng::SeededRng::new(seed);
            let mut order: Vec<usize> = (0..values.len()).collect();
            rng.shuffle(&mut order);
            let a = single(&values);
            let mut b = FeatureTable::new(vec!["x".into()]);
            for &i in &order {
                b.push(format!("r{i}"), vec![values[i]]).unwrap();
            }
            for m in [OutlierMethod::Zscore, OutlierMethod::Iqr] {
                let mut fa: Vec<String> = detect_outliers(&a, m, 1.0).unwrap().flags.into_iter().map(|f| f.id).collect();
                let mut fb: Vec<String> = detect_outliers(&b, m, 1.0).unwrap().flags.into_iter().map(|f| f.id).collect();
                fa.sort();
                fb.sort();
                prop_assert_eq!(fa, fb);
            }
        }
    }
}
