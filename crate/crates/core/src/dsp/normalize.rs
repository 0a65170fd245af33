//! Min-max and z-score scaling. Matrices are normalized over all elements.

const DEGENERATE_RANGE: f64 = 1e-12;

/// `(x − min)/(max − min)`; all zeros when the range is below 1e-12.
pub fn minmax_normalize(values: &[f64]) -> Vec<f64> {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    let range = hi - lo;
    if values.is_empty() || !(range >= DEGENERATE_RANGE) {
        return vec![0.0; values.len()];
    }
    values.iter().map(|x| (x - lo) / range).collect()
}

/// `(x − mean)/std` with the population standard deviation; all zeros for
/// constant input.
pub fn zscore_normalize(values: &[f64]) -> Vec<f64> {
    if values.is_empty() {
        return Vec::new();
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    if !(std >= DEGENERATE_RANGE) {
        return vec![0.0; values.len()];
    }
    values.iter().map(|x| (x - mean) / std).collect()
}
