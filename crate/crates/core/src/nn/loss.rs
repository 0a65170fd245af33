use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const BCE_EPS: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    Bce,
    Mse,
}

impl LossKind {
    pub fn eval(self, pred: &[f64], target: &[f64]) -> Result<(f64, Vec<f64>)> {
        match self {
            LossKind::Bce => bce_loss(pred, target),
            LossKind::Mse => mse_loss(pred, target),
        }
    }
}

fn check(pred: &[f64], target: &[f64]) -> Result<()> {
    if pred.len() != target.len() {
        return Err(Error::LengthMismatch {
            left: pred.len(),
            right: target.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::param("loss of an empty prediction"));
    }
    Ok(())
}

/// Mean binary cross-entropy with predictions clamped to `[1e-7, 1 - 1e-7]`.
/// The gradient is that of the clamped expression, so it is zero where the
/// clamp is active.
pub fn bce_loss(pred: &[f64], target: &[f64]) -> Result<(f64, Vec<f64>)> {
    check(pred, target)?;
    let n = pred.len() as f64;
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(pred.len());
    for (&p, &t) in pred.iter().zip(target) {
        let pc = p.clamp(BCE_EPS, 1.0 - BCE_EPS);
        loss -= t * pc.ln() + (1.0 - t) * (1.0 - pc).ln();
        let g = if p > BCE_EPS && p < 1.0 - BCE_EPS {
            (-t / pc + (1.0 - t) / (1.0 - pc)) / n
        } else {
            0.0
        };
        grad.push(g);
    }
    Ok((loss / n, grad))
}

pub fn mse_loss(pred: &[f64], target: &[f64]) -> Result<(f64, Vec<f64>)> {
    check(pred, target)?;
    let n = pred.len() as f64;
    let mut loss = 0.0;
    let grad = pred
        .iter()
        .zip(target)
        .map(|(p, t)| {
            let d = p - t;
            loss += d * d;
            2.0 * d / n
        })
        .collect();
    Ok((loss / n, grad))
}
