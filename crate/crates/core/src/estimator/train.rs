//! Mini-batch Adam training with a held-out split.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::gat::{forward, loss_and_grad, GatConfig, Params, Prepared, ShapeMismatch};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Fraction of examples held out for model selection.
    pub validation_fraction: f64,
    pub hidden: usize,
    pub layers: usize,
    pub type_dim: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { epochs: 150, batch_size: 16, learning_rate: 5e-3, validation_fraction: 0.2, hidden: 32, layers: 3, type_dim: 4 }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrainError {
    #[error("empty dataset")]
    EmptyDataset,
    #[error("learning rate must be positive, got {0}")]
    BadLearningRate(f64),
    #[error("non-finite loss at epoch {epoch}, batch {batch} (last finite loss {last_finite})")]
    NonFiniteLoss { epoch: usize, batch: usize, last_finite: f64 },
    #[error(transparent)]
    Shape(#[from] ShapeMismatch),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainMetrics {
    pub train_loss: Vec<f64>,
    pub validation_loss: Vec<f64>,
    pub best_epoch: usize,
    pub validation_accuracy: f64,
    pub train_examples: usize,
    pub validation_examples: usize,
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize) -> Self {
        Adam { m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::B1.powi(self.t);
        let c2 = 1.0 - Self::B2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = Self::B1 * self.m[i] + (1.0 - Self::B1) * grad[i];
            self.v[i] = Self::B2 * self.v[i] + (1.0 - Self::B2) * grad[i] * grad[i];
            params[i] -= lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + Self::EPS);
        }
    }
}

pub fn mean_loss(p: &Params, data: &[(Prepared, Vec<f64>)], idx: &[usize]) -> Result<f64, ShapeMismatch> {
    if idx.is_empty() {
        return Ok(0.0);
    }
    let batch: Vec<(&Prepared, &[f64])> = idx.iter().map(|&i| (&data[i].0, data[i].1.as_slice())).collect();
    Ok(loss_and_grad(p, &batch)?.0)
}

/// Fraction of (example, element) pairs classified correctly at 0.5.
pub fn accuracy(p: &Params, data: &[(Prepared, Vec<f64>)], idx: &[usize]) -> f64 {
    let mut right = 0usize;
    let mut total = 0usize;
    for &i in idx {
        let probs = forward(p, &data[i].0).probs;
        for (pr, y) in probs.iter().zip(&data[i].1) {
            right += ((*pr >= 0.5) == (*y >= 0.5)) as usize;
            total += 1;
        }
    }
    if total == 0 {
        1.0
    } else {
        right as f64 / total as f64
    }
}

/// Train one network; returns the parameters with the lowest held-out loss.
/// With a single example the example itself is used for selection.
pub fn train(
    mut config: GatConfig,
    data: &[(Prepared, Vec<f64>)],
    tc: &TrainConfig,
    seed: u64,
) -> Result<(Params, TrainMetrics), TrainError> {
    if data.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    if tc.learning_rate.is_nan() || tc.learning_rate <= 0.0 {
        return Err(TrainError::BadLearningRate(tc.learning_rate));
    }
    config.hidden = tc.hidden;
    config.mlp_hidden = tc.hidden;
    config.layers = tc.layers;
    config.type_dim = tc.type_dim;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(&mut rng);
    let n_val = ((data.len() as f64) * tc.validation_fraction).round() as usize;
    let n_val = n_val.min(data.len() - 1);
    let (val, tr) = order.split_at(n_val);
    let (val, mut tr) = (if val.is_empty() { tr.to_vec() } else { val.to_vec() }, tr.to_vec());
    let mut params = Params::init(config, &mut rng);
    let mut adam = Adam::new(params.data.len());
    let mut best = (mean_loss(&params, data, &val)?, params.clone(), 0);
    let mut metrics = TrainMetrics { train_examples: tr.len(), validation_examples: val.len(), ..Default::default() };
    let mut last_finite = best.0;
    for epoch in 1..=tc.epochs {
        tr.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for (b, chunk) in tr.chunks(tc.batch_size.max(1)).enumerate() {
            let batch: Vec<(&Prepared, &[f64])> = chunk.iter().map(|&i| (&data[i].0, data[i].1.as_slice())).collect();
            let (loss, grad) = loss_and_grad(&params, &batch)?;
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(TrainError::NonFiniteLoss { epoch, batch: b, last_finite });
            }
            last_finite = loss;
            epoch_loss += loss * chunk.len() as f64;
            adam.step(&mut params.data, &grad, tc.learning_rate);
        }
        metrics.train_loss.push(epoch_loss / tr.len() as f64);
        let vl = mean_loss(&params, data, &val)?;
        if !vl.is_finite() {
            return Err(TrainError::NonFiniteLoss { epoch, batch: usize::MAX, last_finite });
        }
        metrics.validation_loss.push(vl);
        if vl < best.0 {
            best = (vl, params.clone(), epoch);
        }
    }
    metrics.best_epoch = best.2;
    metrics.validation_accuracy = accuracy(&best.1, data, &val);
    Ok((best.1, metrics))
}
