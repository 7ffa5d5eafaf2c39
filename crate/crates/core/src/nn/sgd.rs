use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::mlp::Mlp;
use super::{accuracy_or_nan, evaluate, Dataset, EpochRecord, TrainConfig, TrainHistory, TrainMode};
use crate::error::{check_dim, Error, Result};
use crate::rng::{child_id, stream};

/// Stream family for per-epoch shuffles.
pub(crate) const SHUFFLE_STREAM: u64 = 0x5348;

pub(crate) fn epoch_order(seed: u64, epoch: usize, n: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream(seed, child_id(SHUFFLE_STREAM, epoch as u64)));
    order
}

pub(crate) fn check_training_inputs(input_dim: usize, output_dim: usize, train: &Dataset, test: &Dataset) -> Result<()> {
    if train.is_empty() {
        return Err(Error::Empty("training set is empty".into()));
    }
    check_dim(input_dim, train.dim())?;
    if !test.is_empty() {
        check_dim(input_dim, test.dim())?;
    }
    if let Some(&bad) = train.labels.iter().chain(&test.labels).find(|&&y| y >= output_dim) {
        return Err(Error::InvalidLabel(bad as i64));
    }
    Ok(())
}

/// Per-sample SGD on cross-entropy. Each epoch visits the training set in a
/// seeded random order; the recorded loss is the mean pre-update sample loss.
pub fn train_sgd_fp(net: &mut Mlp, train: &Dataset, test: &Dataset, cfg: &TrainConfig) -> Result<TrainHistory> {
    if cfg.mode != TrainMode::FpSgd {
        return Err(Error::InvalidArgument("train_sgd_fp requires mode fp_sgd".into()));
    }
    cfg.validate()?;
    net.validate()?;
    check_training_inputs(net.spec.input_dim(), net.spec.output_dim(), train, test)?;

    let mut history = TrainHistory::default();
    let mut losses = vec![0.0; train.len()];
    for epoch in 0..cfg.epochs {
        for &k in &epoch_order(cfg.seed, epoch, train.len()) {
            losses[k] = net.sgd_step(&train.features[k], train.labels[k], cfg.lr)?;
        }
        history.records.push(EpochRecord {
            epoch: epoch + 1,
            train_acc: evaluate(net, train)?,
            test_acc: accuracy_or_nan(net, test)?,
            loss: losses.iter().sum::<f64>() / losses.len() as f64,
        });
    }
    Ok(history)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HwaConfig {
    /// Relative std of the multiplicative weight noise.
    pub noise_std: f64,
    pub epochs: usize,
    pub lr: f64,
}

impl Default for HwaConfig {
    fn default() -> Self {
        Self { noise_std: 0.05, epochs: 20, lr: 0.05 }
    }
}

impl HwaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::InvalidArgument(format!("noise_std must be non-negative, got {}", self.noise_std)));
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(Error::InvalidArgument(format!("lr must be non-negative, got {}", self.lr)));
        }
        Ok(())
    }
}

fn perturb<R: Rng + ?Sized>(net: &Mlp, noise_std: f64, rng: &mut R) -> Mlp {
    let mut noisy = net.clone();
    if noise_std > 0.0 {
        for w in noisy.weights.iter_mut().flat_map(|m| m.data.iter_mut()) {
            let xi: f64 = StandardNormal.sample(rng);
            *w *= 1.0 + noise_std * xi;
        }
    }
    noisy
}

/// Continued per-sample SGD where every forward/backward pass sees weights
/// scaled by `1 + noise_std·ξ`; the resulting gradients update the clean
/// weights. Biases are digital and never perturbed.
pub fn hardware_aware_finetune<R: Rng + ?Sized>(
    net: &mut Mlp,
    train: &Dataset,
    cfg: &HwaConfig,
    rng: &mut R,
) -> Result<TrainHistory> {
    cfg.validate()?;
    net.validate()?;
    check_training_inputs(net.spec.input_dim(), net.spec.output_dim(), train, &Dataset::default())?;

    let mut history = TrainHistory::default();
    let mut losses = vec![0.0; train.len()];
    let mut order: Vec<usize> = (0..train.len()).collect();
    for epoch in 0..cfg.epochs {
        order.shuffle(rng);
        for &k in &order {
            let noisy = perturb(net, cfg.noise_std, rng);
            let (loss, grads, deltas) = noisy.gradients(&train.features[k], train.labels[k])?;
            net.apply_gradients(&grads, &deltas, cfg.lr);
            losses[k] = loss;
        }
        history.records.push(EpochRecord {
            epoch: epoch + 1,
            train_acc: evaluate(net, train)?,
            test_acc: f64::NAN,
            loss: losses.iter().sum::<f64>() / losses.len() as f64,
        });
    }
    Ok(history)
}

/// Mean accuracy over `trials` independent multiplicative weight
/// perturbations of relative std `noise_std`.
pub fn perturbed_accuracy<R: Rng + ?Sized>(
    net: &Mlp,
    data: &Dataset,
    noise_std: f64,
    trials: usize,
    rng: &mut R,
) -> Result<f64> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let mut total = 0.0;
    for _ in 0..trials {
        total += evaluate(&perturb(net, noise_std, rng), data)?;
    }
    Ok(total / trials as f64)
}
