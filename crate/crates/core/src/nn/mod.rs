//! Fully connected networks: FP baseline, hardware-aware tuning, Tiki-Taka v2
//! analog training and program-and-verify deployment.
//!
//! Hidden layers use ReLU; the output layer is a softmax trained with
//! cross-entropy. Weights are `[inputs, outputs]` matrices, biases are digital.

mod data;
mod deploy;
mod mlp;
mod sgd;
mod ttv2;

pub use data::{Dataset, Standardizer};
pub use deploy::{deploy, DeployedLayer, DeployedNetwork};
pub use mlp::{cross_entropy, softmax, LinearStack, Mlp, NetworkSpec, Pass};
pub use sgd::{hardware_aware_finetune, perturbed_accuracy, train_sgd_fp, HwaConfig};
pub use ttv2::{train_ttv2, ttv2_step, Ttv2Layer, Ttv2State};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainMode {
    FpSgd,
    Ttv2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub mode: TrainMode,
    pub lr: f64,
    pub fast_lr: f64,
    pub transfer_every: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl TrainConfig {
    pub const DEFAULT_EPOCHS: usize = 100;

    pub fn fp_sgd(seed: u64) -> Self {
        Self { mode: TrainMode::FpSgd, lr: 0.05, fast_lr: 0.0, transfer_every: 1, epochs: Self::DEFAULT_EPOCHS, seed }
    }

    pub fn ttv2(seed: u64) -> Self {
        Self { mode: TrainMode::Ttv2, lr: 0.1, fast_lr: 0.5, transfer_every: 5, epochs: Self::DEFAULT_EPOCHS, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(Error::InvalidArgument(format!("lr must be finite and non-negative, got {}", self.lr)));
        }
        if self.mode == TrainMode::Ttv2 {
            if !(self.fast_lr >= 0.0 && self.fast_lr.is_finite()) {
                return Err(Error::InvalidArgument(format!("fast_lr must be finite and non-negative, got {}", self.fast_lr)));
            }
            if self.transfer_every == 0 {
                return Err(Error::InvalidArgument("transfer_every must be at least 1".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_acc: f64,
    pub test_acc: f64,
    pub loss: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub records: Vec<EpochRecord>,
}

impl TrainHistory {
    pub fn last(&self) -> Option<&EpochRecord> {
        self.records.last()
    }

    pub fn losses(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.loss).collect()
    }
}

/// Fraction of argmax-correct predictions.
pub fn evaluate<S: LinearStack + ?Sized>(net: &S, data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Empty("evaluation set is empty".into()));
    }
    let mut correct = 0usize;
    for (x, &y) in data.iter() {
        let pass = mlp::forward_pass(net, x)?;
        if mlp::argmax(&pass.logits) == y {
            correct += 1;
        }
    }
    Ok(correct as f64 / data.len() as f64)
}

fn accuracy_or_nan<S: LinearStack + ?Sized>(net: &S, data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        Ok(f64::NAN)
    } else {
        evaluate(net, data)
    }
}
