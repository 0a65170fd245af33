//! Thin wrappers over `rustfft` for real-signal use.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub fn forward_plan(n: usize) -> Arc<dyn Fft<f64>> {
    FftPlanner::new().plan_fft_forward(n)
}

pub fn inverse_plan(n: usize) -> Arc<dyn Fft<f64>> {
    FftPlanner::new().plan_fft_inverse(n)
}

/// Full complex spectrum of a real sequence (unnormalized).
pub fn fft_real(xs: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = xs.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    forward_plan(buf.len()).process(&mut buf);
    buf
}

/// Analytic signal `x + j·H{x}`: negative frequencies removed, positive
/// frequencies doubled, DC and Nyquist kept.
pub fn analytic_signal(xs: &[f64]) -> Vec<Complex64> {
    let n = xs.len();
    let mut spec = fft_real(xs);
    let half = n / 2;
    for (k, v) in spec.iter_mut().enumerate() {
        let keep_once = k == 0 || (n.is_multiple_of(2) && k == half);
        if keep_once {
            continue;
        }
        if k < n.div_ceil(2) {
            *v *= 2.0;
        } else {
            *v = Complex64::new(0.0, 0.0);
        }
    }
    inverse_plan(n).process(&mut spec);
    let scale = 1.0 / n as f64;
    spec.iter().map(|v| v * scale).collect()
}
