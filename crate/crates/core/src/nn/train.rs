use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::adam::{adam_step, AdamState};
use crate::nn::loss::LossKind;
use crate::nn::model::Model;
use crate::nn::tensor::Tensor;
use crate::rng::{derive_seed, SeededRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub loss: LossKind,
    pub seed: u64,
    /// Share of the data held out for validation when the caller splits.
    pub validation_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            batch_size: 32,
            max_epochs: 10,
            patience: 3,
            loss: LossKind::Bce,
            seed: 0,
            validation_fraction: 0.15,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Config(format!("learning_rate must be positive, got {}", self.learning_rate)));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if self.max_epochs == 0 {
            return Err(Error::Config("max_epochs must be at least 1".into()));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(Error::Config(format!(
                "validation_fraction must lie in (0, 1), got {}",
                self.validation_fraction
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Example {
    pub input: Tensor,
    pub target: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub train_accuracy: Option<f64>,
    pub val_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose parameters were returned.
    pub best_epoch: usize,
    pub stopped_early: bool,
}

/// Whether an output counts as correct. Binary heads threshold at 0.5,
/// multi-output heads compare argmax. Regression (mse) has no accuracy, and
/// neither do models without a dense head (see [`evaluate`]).
pub fn is_correct(loss: LossKind, output: &[f64], target: &[f64]) -> Option<bool> {
    if loss == LossKind::Mse {
        return None;
    }
    if output.len() == 1 {
        return Some((output[0] >= 0.5) == (target[0] >= 0.5));
    }
    Some(argmax(output) == argmax(target))
}

pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// Mean loss and accuracy of `model` over `data`.
pub fn evaluate(model: &Model, data: &[Example], loss: LossKind) -> Result<(f64, Option<f64>)> {
    if data.is_empty() {
        return Err(Error::EmptyDataset("evaluation set".into()));
    }
    let mut total = 0.0;
    let mut hits = 0usize;
    let mut scored = false;
    let classify = model.is_classifier();
    for ex in data {
        let out = model.predict(&ex.input)?;
        total += loss.eval(out.data(), &ex.target)?.0;
        if let Some(ok) = is_correct(loss, out.data(), &ex.target).filter(|_| classify) {
            scored = true;
            hits += ok as usize;
        }
    }
    let n = data.len() as f64;
    Ok((total / n, scored.then(|| hits as f64 / n)))
}

pub fn train(model: Model, train: &[Example], val: &[Example], config: &TrainConfig) -> Result<(Model, History)> {
    train_with_progress(model, train, val, config, &mut |_| {})
}

/// Mini-batch Adam with early stopping on validation loss. Each epoch
/// shuffles with its own child seed; gradients are averaged over the batch.
/// Training stops once the validation loss has failed to improve for
/// `max(patience, 1)` consecutive epochs, and the best epoch's parameters
/// are returned.
///
/// A non-finite validation loss is reported with `batch` equal to the number
/// of training batches.
pub fn train_with_progress(
    mut model: Model,
    train: &[Example],
    val: &[Example],
    config: &TrainConfig,
    progress: &mut dyn FnMut(&EpochRecord),
) -> Result<(Model, History)> {
    config.validate()?;
    if train.is_empty() {
        return Err(Error::EmptyDataset("training split".into()));
    }
    if val.is_empty() {
        return Err(Error::EmptyDataset("validation split".into()));
    }
    let loss = config.loss;
    let mut adam = AdamState::new(model.params());
    let mut grads = model.zero_grads();
    let mut best_params = model.params().to_vec();
    let mut best_val = f64::INFINITY;
    let mut best_epoch = 0;
    let mut wait = 0;
    let mut epochs = Vec::new();
    let mut stopped_early = false;
    let mut order: Vec<usize> = (0..train.len()).collect();
    let n_batches = train.len().div_ceil(config.batch_size);
    let classify = model.is_classifier();

    for epoch in 1..=config.max_epochs {
        order.sort_unstable();
        SeededRng::new(derive_seed(config.seed, epoch as u64)).shuffle(&mut order);
        let mut total = 0.0;
        let mut hits = 0usize;
        let mut scored = false;
        for (b, batch) in order.chunks(config.batch_size).enumerate() {
            grads.iter_mut().for_each(|g| g.data_mut().fill(0.0));
            for &i in batch {
                let ex = &train[i];
                let (l, out) = model.accumulate_gradients(&ex.input, &ex.target, loss, &mut grads)?;
                if !l.is_finite() {
                    return Err(Error::NonFiniteLoss { epoch, batch: b, loss: l });
                }
                total += l;
                if let Some(ok) = is_correct(loss, &out, &ex.target).filter(|_| classify) {
                    scored = true;
                    hits += ok as usize;
                }
            }
            let scale = 1.0 / batch.len() as f64;
            for g in grads.iter_mut() {
                g.data_mut().iter_mut().for_each(|x| *x *= scale);
            }
            adam_step(model.params_mut(), &grads, &mut adam, config.learning_rate);
        }
        let n = train.len() as f64;
        let (val_loss, val_accuracy) = evaluate(&model, val, loss)?;
        if !val_loss.is_finite() {
            return Err(Error::NonFiniteLoss {
                epoch,
                batch: n_batches,
                loss: val_loss,
            });
        }
        let record = EpochRecord {
            epoch,
            train_loss: total / n,
            val_loss,
            train_accuracy: scored.then(|| hits as f64 / n),
            val_accuracy,
        };
        progress(&record);
        epochs.push(record);

        if val_loss < best_val {
            best_val = val_loss;
            best_epoch = epoch;
            best_params.clone_from_slice(model.params());
            wait = 0;
        } else {
            wait += 1;
            if wait >= config.patience.max(1) {
                stopped_early = epoch < config.max_epochs;
                break;
            }
        }
    }
    model.params_mut().clone_from_slice(&best_params);
    Ok((
        model,
        History {
            epochs,
            best_epoch,
            stopped_early,
        },
    ))
}
