//! Tiki-Taka v2: gradients accumulate on a fast analog tile `A`, a digital
//! matrix `H` low-pass filters periodic column reads of `A`, and every whole
//! device step held in `H` is released as one pulse into the weight tile `W`.

use rand::Rng;

use super::mlp::{backward_pass, forward_pass, LinearStack, Mlp, NetworkSpec};
use super::sgd::{check_training_inputs, epoch_order};
use super::{accuracy_or_nan, evaluate, Dataset, EpochRecord, TrainConfig, TrainHistory, TrainMode};
use crate::crossbar::AnalogTile;
use crate::device::{DeviceDistribution, Polarity};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{child_id, stream};

const W_TILE_STREAM: u64 = 0x5754;
const A_TILE_STREAM: u64 = 0x4154;
const INIT_STREAM: u64 = 0x494E;
const UPDATE_STREAM: u64 = 0x5550;

#[derive(Debug, Clone, PartialEq)]
pub struct Ttv2Layer {
    pub w: AnalogTile,
    pub a: AnalogTile,
    /// Symmetry points of `A`, subtracted from every column read.
    pub a_ref: Matrix,
    pub h: Matrix,
    pub bias: Vec<f64>,
    pub cursor: usize,
}

impl Ttv2Layer {
    /// Move column `cursor` of `A` into `H` and let `H` pulse `W`.
    fn transfer<R: Rng + ?Sized>(&mut self, lr: f64, rng: &mut R) -> Result<usize> {
        let k = self.cursor;
        let cols = self.a.cols();
        let mut e = vec![0.0; cols];
        e[k] = 1.0;
        let column = self.a.backward_mac(&e)?;
        let mut pulses = 0;
        for (i, a_ik) in column.into_iter().enumerate() {
            let h = self.h.get_mut(i, k);
            *h += lr * (a_ik - self.a_ref.get(i, k));
            let unit = self.w.device(i, k).midpoint_step();
            let granted = (h.abs() / unit).floor();
            if granted >= 1.0 {
                let polarity = if *h > 0.0 { Polarity::Up } else { Polarity::Down };
                *h -= (granted * unit).copysign(*h);
                for _ in 0..granted as usize {
                    self.w.pulse(i, k, polarity, rng);
                }
                pulses += granted as usize;
            }
        }
        self.cursor = (k + 1) % cols;
        Ok(pulses)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ttv2State {
    pub spec: NetworkSpec,
    pub layers: Vec<Ttv2Layer>,
    pub update_counter: u64,
    pub transfers: u64,
}

impl Ttv2State {
    /// Sample every `W` and `A` device from `dist`. `W` starts at Glorot-uniform
    /// values, `A` at its symmetry points, `H` and biases at zero.
    pub fn new(spec: NetworkSpec, dist: &DeviceDistribution, seed: u64) -> Result<Self> {
        spec.validate()?;
        dist.validate()?;
        let mut init = stream(seed, INIT_STREAM);
        let mut layers = Vec::with_capacity(spec.layers());
        for (l, d) in spec.layer_dims.windows(2).enumerate() {
            let (rows, cols) = (d[0], d[1]);
            let w_id = child_id(W_TILE_STREAM, l as u64);
            let a_id = child_id(A_TILE_STREAM, l as u64);
            let mut w = AnalogTile::sampled(rows, cols, dist, &mut stream(seed, w_id), w_id)?;
            let lim = spec.init_limit(l);
            w.set_weights(&Matrix::from_fn(rows, cols, |_, _| init.random_range(-lim..=lim)))?;
            let mut a = AnalogTile::sampled(rows, cols, dist, &mut stream(seed, a_id), a_id)?;
            a.reset_to_symmetry_points();
            let a_ref = a.symmetry_points();
            layers.push(Ttv2Layer { w, a, a_ref, h: Matrix::zeros(rows, cols), bias: vec![0.0; cols], cursor: 0 });
        }
        Ok(Self { spec, layers, update_counter: 0, transfers: 0 })
    }

    /// Floating-point copy of the current `W` states and biases.
    pub fn to_mlp(&self) -> Mlp {
        Mlp {
            spec: self.spec.clone(),
            weights: self.layers.iter().map(|l| l.w.read_weights()).collect(),
            biases: self.layers.iter().map(|l| l.bias.clone()).collect(),
        }
    }
}

impl LinearStack for Ttv2State {
    fn layer_count(&self) -> usize {
        self.layers.len()
    }
    fn forward_layer(&self, l: usize, x: &[f64]) -> Result<Vec<f64>> {
        self.layers[l].w.forward_mac(x)
    }
    fn backward_layer(&self, l: usize, d: &[f64]) -> Result<Vec<f64>> {
        self.layers[l].w.backward_mac(d)
    }
    fn bias(&self, l: usize) -> &[f64] {
        &self.layers[l].bias
    }
}

/// One single-sample TTv2 update; returns the pre-update loss.
pub fn ttv2_step<R: Rng + ?Sized>(
    state: &mut Ttv2State,
    x: &[f64],
    target: usize,
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<f64> {
    if cfg.mode != TrainMode::Ttv2 {
        return Err(Error::InvalidArgument("ttv2_step requires mode ttv2".into()));
    }
    let pass = forward_pass(state, x)?;
    let (loss, deltas) = backward_pass(state, &pass, target)?;
    for ((layer, a), d) in state.layers.iter_mut().zip(&pass.activations).zip(&deltas) {
        layer.a.stochastic_update(a, d, cfg.fast_lr, rng)?;
        for (b, dj) in layer.bias.iter_mut().zip(d) {
            *b -= cfg.lr * dj;
        }
    }
    state.update_counter += 1;
    if state.update_counter.is_multiple_of(cfg.transfer_every as u64) {
        for layer in &mut state.layers {
            layer.transfer(cfg.lr, rng)?;
        }
        state.transfers += 1;
    }
    Ok(loss)
}

/// Train a freshly sampled analog network; accuracies are measured through
/// the `W` tiles.
pub fn train_ttv2(
    spec: NetworkSpec,
    train: &Dataset,
    test: &Dataset,
    dist: &DeviceDistribution,
    cfg: &TrainConfig,
) -> Result<(Ttv2State, TrainHistory)> {
    if cfg.mode != TrainMode::Ttv2 {
        return Err(Error::InvalidArgument("train_ttv2 requires mode ttv2".into()));
    }
    cfg.validate()?;
    check_training_inputs(spec.input_dim(), spec.output_dim(), train, test)?;
    let mut state = Ttv2State::new(spec, dist, cfg.seed)?;
    let mut rng = stream(cfg.seed, UPDATE_STREAM);
    let mut history = TrainHistory::default();
    let mut losses = vec![0.0; train.len()];
    for epoch in 0..cfg.epochs {
        for &k in &epoch_order(cfg.seed, epoch, train.len()) {
            losses[k] = ttv2_step(&mut state, &train.features[k], train.labels[k], cfg, &mut rng)?;
        }
        history.records.push(EpochRecord {
            epoch: epoch + 1,
            train_acc: evaluate(&state, train)?,
            test_acc: accuracy_or_nan(&state, test)?,
            loss: losses.iter().sum::<f64>() / losses.len() as f64,
        });
    }
    Ok((state, history))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ideal() -> DeviceDistribution {
        DeviceDistribution::fixed(1000.0, 0.0, 0.0)
    }

    fn toy(n: usize, seed: u64) -> Dataset {
        let mut rng = stream(seed, 0);
        let mut f = Vec::new();
        let mut l = Vec::new();
        while f.len() < n {
            let x: [f64; 2] = [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)];
            let m = x[0] - 0.5 * x[1];
            if m.abs() > 1.0 {
                l.push(usize::from(m > 0.0));
                f.push(x.to_vec());
            }
        }
        Dataset::new(f, l).unwrap()
    }

    #[test]
    fn zero_rates_change_nothing() {
        let mut s = Ttv2State::new(NetworkSpec::new(vec![2, 3, 2]).unwrap(), &DeviceDistribution::default(), 1).unwrap();
        let before = s.clone();
        let cfg = TrainConfig { lr: 0.0, fast_lr: 0.0, transfer_every: 1, ..TrainConfig::ttv2(0) };
        let mut rng = stream(0, 0);
        for _ in 0..10 {
            ttv2_step(&mut s, &[0.5, -0.3], 1, &cfg, &mut rng).unwrap();
        }
        for (a, b) in s.layers.iter().zip(&before.layers) {
            assert_eq!(a.w, b.w);
            assert_eq!(a.a.read_weights(), b.a.read_weights());
            assert_eq!(a.h, b.h);
            assert_eq!(a.bias, b.bias);
        }
    }

    #[test]
    fn transfers_are_round_robin() {
        let mut s = Ttv2State::new(NetworkSpec::new(vec![2, 3]).unwrap(), &ideal(), 1).unwrap();
        let cfg = TrainConfig { transfer_every: 5, ..TrainConfig::ttv2(0) };
        let mut rng = stream(0, 0);
        let mut seen = vec![0usize; 3];
        for step in 1..=3 * 5 * 4 {
            let cursor = s.layers[0].cursor;
            ttv2_step(&mut s, &[0.2, 0.4], step % 3, &cfg, &mut rng).unwrap();
            if step % 5 == 0 {
                assert_eq!(s.layers[0].cursor, (cursor + 1) % 3);
                seen[cursor] += 1;
            } else {
                assert_eq!(s.layers[0].cursor, cursor);
            }
        }
        assert_eq!(s.transfers, 12);
        assert_eq!(seen, vec![4, 4, 4]);
    }

    #[test]
    fn a_starts_at_reference() {
        let s = Ttv2State::new(NetworkSpec::new(vec![4, 3]).unwrap(), &DeviceDistribution::default(), 3).unwrap();
        assert_eq!(s.layers[0].a.read_weights(), s.layers[0].a_ref);
        assert!(s.layers[0].h.data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn ideal_devices_separate_toy_set() {
        let data = toy(1000, 4);
        let cfg = TrainConfig { epochs: 30, ..TrainConfig::ttv2(2) };
        let (_, h) = train_ttv2(NetworkSpec::new(vec![2, 2]).unwrap(), &data, &data, &ideal(), &cfg).unwrap();
        assert!(h.last().unwrap().train_acc >= 0.99, "{:?}", h.last());
    }

    #[test]
    fn zero_epochs_empty_history() {
        let data = toy(10, 1);
        let cfg = TrainConfig { epochs: 0, ..TrainConfig::ttv2(2) };
        let (_, h) = train_ttv2(NetworkSpec::new(vec![2, 2]).unwrap(), &data, &data, &ideal(), &cfg).unwrap();
        assert!(h.records.is_empty());
    }

    #[test]
    fn deterministic_for_seed() {
        let data = toy(40, 1);
        let cfg = TrainConfig { epochs: 3, ..TrainConfig::ttv2(5) };
        let run = || train_ttv2(NetworkSpec::new(vec![2, 3, 2]).unwrap(), &data, &data, &DeviceDistribution::default(), &cfg).unwrap();
        let (a, ha) = run();
        let (b, hb) = run();
        assert_eq!(ha, hb);
        assert_eq!(a, b);
    }
}
