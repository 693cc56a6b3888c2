//! Minibatch training with early stopping, evaluation metrics and the
//! cross-validation protocol.

mod cv;
mod metrics;

pub use cv::{cross_validate, table_grid, Candidate, CvResult, FoldOutcome, TrainingCurve};
pub use metrics::{auroc, evaluate, Metrics};

use rand::seq::SliceRandom;
use rayon::prelude::*;
use thiserror::Error;

use crate::model::{PrecomputedGraph, SpinConfig, SpinGradients, SpinParams};
use crate::nn::{adam_step, derive_seed, rng_from_seed, softmax_cross_entropy, AdamState, DenseMatrix};

/// Validation accuracy must rise by more than this to count as progress.
pub const IMPROVEMENT_THRESHOLD: f64 = 1e-4;

#[derive(Debug, Error, PartialEq)]
pub enum TrainError {
    #[error(
        "non-finite loss at epoch {epoch}, batch {batch} with learning rate {learning_rate}; \
         try a learning rate at least ten times smaller"
    )]
    NonFiniteLoss {
        epoch: usize,
        batch: usize,
        learning_rate: f64,
    },
    #[error("AUROC is defined for two classes, the model has {0}")]
    AurocMulticlass(usize),
    #[error("cannot train or evaluate on an empty set")]
    EmptySet,
    #[error("graph {index} does not match the model: {reason}")]
    Mismatch { index: usize, reason: String },
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Epochs without validation progress before stopping.
    pub patience: usize,
    pub l2: f64,
    pub seed: u64,
    pub repeats_per_fold: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 32,
            learning_rate: 1e-3,
            max_epochs: 200,
            patience: 20,
            l2: 0.0,
            seed: 0,
            repeats_per_fold: 3,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let fail = |m: &str| Err(TrainError::InvalidConfig(m.to_string()));
        if self.batch_size == 0 {
            return fail("batch_size must be at least 1");
        }
        if self.patience == 0 {
            return fail("patience must be at least 1");
        }
        if self.repeats_per_fold == 0 {
            return fail("repeats_per_fold must be at least 1");
        }
        if self.max_epochs == 0 {
            return fail("max_epochs must be at least 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail("learning_rate must be positive");
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return fail("l2 must be non-negative");
        }
        Ok(())
    }

    /// Sets one field from its textual form. Returns `Ok(false)` for keys this struct does not own.
    pub fn set(&mut self, key: &str, value: &str) -> Result<bool, String> {
        let bad = || format!("bad value `{value}` for `{key}`");
        match key {
            "batch_size" => self.batch_size = value.parse().map_err(|_| bad())?,
            "learning_rate" => self.learning_rate = value.parse().map_err(|_| bad())?,
            "max_epochs" => self.max_epochs = value.parse().map_err(|_| bad())?,
            "patience" => self.patience = value.parse().map_err(|_| bad())?,
            "l2" => self.l2 = value.parse().map_err(|_| bad())?,
            "seed" => self.seed = value.parse().map_err(|_| bad())?,
            "repeats_per_fold" => self.repeats_per_fold = value.parse().map_err(|_| bad())?,
            _ => return Ok(false),
        }
        Ok(true)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters from the epoch with the best validation accuracy.
    pub params: SpinParams,
    pub best_epoch: usize,
    pub best_val_accuracy: f64,
    pub curve: Vec<EpochRecord>,
}

fn one_hot(label: usize, k: usize) -> DenseMatrix {
    let mut y = DenseMatrix::zeros(1, k);
    y.set(0, label, 1.0);
    y
}

/// Loss and gradient of one graph; dropout draws from `dropout_seed` when given.
pub fn graph_gradient(
    params: &SpinParams,
    cfg: &SpinConfig,
    graph: &PrecomputedGraph,
    dropout_seed: Option<u64>,
) -> (f64, SpinGradients) {
    let mut rng = dropout_seed.map(rng_from_seed);
    let (logits, cache) = params.forward(cfg, &graph.bank, rng.as_mut());
    let k = logits.len();
    let (loss, grad) = softmax_cross_entropy(&DenseMatrix::from_vec(1, k, logits), &one_hot(graph.label, k));
    (loss, params.backward(cfg, &cache, grad.as_slice()))
}

/// Mean loss and mean gradient over `batch`. Per-graph work runs in parallel;
/// the reduction is a sequential sum in batch order, so results do not depend
/// on scheduling.
pub fn batch_gradient(
    params: &SpinParams,
    cfg: &SpinConfig,
    batch: &[&PrecomputedGraph],
    dropout_seeds: Option<&[u64]>,
) -> (f64, SpinGradients) {
    let parts: Vec<(f64, SpinGradients)> = batch
        .par_iter()
        .enumerate()
        .map(|(i, g)| graph_gradient(params, cfg, g, dropout_seeds.map(|s| s[i])))
        .collect();
    let mut total = params.zero_gradients();
    let mut loss = 0.0;
    for (l, g) in &parts {
        loss += l;
        total.accumulate(g);
    }
    let m = batch.len() as f64;
    total.scale(1.0 / m);
    (loss / m, total)
}

fn check_set(cfg: &SpinConfig, set: &[PrecomputedGraph]) -> Result<(), TrainError> {
    for (index, g) in set.iter().enumerate() {
        let reason = if g.bank.len() <= cfg.r {
            Some(format!(
                "bank holds {} powers, model needs {}",
                g.bank.len(),
                cfg.branches()
            ))
        } else if g.bank.feature_dim() != cfg.input_dim {
            Some(format!(
                "feature width {} but input_dim {}",
                g.bank.feature_dim(),
                cfg.input_dim
            ))
        } else if g.bank.node_count() == 0 {
            Some("graph has no nodes".into())
        } else if g.label >= cfg.num_classes {
            Some(format!("label {} outside {} classes", g.label, cfg.num_classes))
        } else {
            None
        };
        if let Some(reason) = reason {
            return Err(TrainError::Mismatch { index, reason });
        }
    }
    Ok(())
}

/// Trains from `params` with Adam on seeded, shuffled minibatches. After every
/// epoch the validation accuracy is measured (training accuracy when `val` is
/// empty); the best parameters are kept, and training stops once `patience`
/// epochs pass without an improvement above [`IMPROVEMENT_THRESHOLD`].
pub fn train_model(
    cfg: &SpinConfig,
    mut params: SpinParams,
    train: &[PrecomputedGraph],
    val: &[PrecomputedGraph],
    tc: &TrainConfig,
) -> Result<TrainOutcome, TrainError> {
    tc.validate()?;
    if train.is_empty() {
        return Err(TrainError::EmptySet);
    }
    check_set(cfg, train)?;
    check_set(cfg, val)?;
    let monitor = if val.is_empty() { train } else { val };
    let mut adam = AdamState::new(&params);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut best = (params.clone(), 0, f64::NEG_INFINITY);
    let mut stale = 0;
    let mut curve = Vec::new();
    for epoch in 1..=tc.max_epochs {
        order.shuffle(&mut rng_from_seed(derive_seed(tc.seed, &[epoch as u64])));
        let mut epoch_loss = 0.0;
        for (b, chunk) in order.chunks(tc.batch_size).enumerate() {
            let batch: Vec<&PrecomputedGraph> = chunk.iter().map(|&i| &train[i]).collect();
            let seeds: Vec<u64> = chunk
                .iter()
                .map(|&i| derive_seed(tc.seed, &[epoch as u64, i as u64, 1]))
                .collect();
            let (loss, grads) = batch_gradient(&params, cfg, &batch, Some(&seeds));
            if !loss.is_finite() || !crate::nn::Parameters::all_finite(&grads) {
                return Err(TrainError::NonFiniteLoss {
                    epoch,
                    batch: b,
                    learning_rate: tc.learning_rate,
                });
            }
            adam_step(&mut params, &grads, &mut adam, tc.learning_rate, tc.l2);
            epoch_loss += loss * chunk.len() as f64;
        }
        let val_accuracy = evaluate(&params, cfg, monitor, false)?.accuracy;
        curve.push(EpochRecord {
            epoch,
            train_loss: epoch_loss / train.len() as f64,
            val_accuracy,
        });
        if val_accuracy > best.2 + IMPROVEMENT_THRESHOLD {
            best = (params.clone(), epoch, val_accuracy);
            stale = 0;
        } else {
            stale += 1;
            if stale >= tc.patience {
                break;
            }
        }
    }
    Ok(TrainOutcome {
        params: best.0,
        best_epoch: best.1,
        best_val_accuracy: best.2,
        curve,
    })
}

#[cfg(test)]
mod tests;
