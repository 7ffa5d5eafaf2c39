use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkSpec {
    /// Input, hidden..., output widths, e.g. `[38, 128, 10]` or `[38, 5]`.
    pub layer_dims: Vec<usize>,
}

impl NetworkSpec {
    pub fn new(layer_dims: Vec<usize>) -> Result<Self> {
        let s = Self { layer_dims };
        s.validate()?;
        Ok(s)
    }

    /// Gesture classifier on the 38-feature input with an optional hidden layer.
    pub fn gesture(hidden: Option<usize>, classes: usize) -> Result<Self> {
        if classes != 5 && classes != 10 {
            return Err(Error::InvalidArgument(format!("gesture networks have 5 or 10 outputs, got {classes}")));
        }
        let mut dims = vec![crate::tactile::FEATURE_LEN];
        dims.extend(hidden);
        dims.push(classes);
        Self::new(dims)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_dims.len() < 2 || self.layer_dims.contains(&0) {
            return Err(Error::InvalidArgument(format!("invalid layer dims {:?}", self.layer_dims)));
        }
        Ok(())
    }

    pub fn layers(&self) -> usize {
        self.layer_dims.len() - 1
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_dims.last().expect("validated")
    }

    /// Uniform Glorot limit for layer `l`.
    pub(crate) fn init_limit(&self, l: usize) -> f64 {
        (6.0 / (self.layer_dims[l] + self.layer_dims[l + 1]) as f64).sqrt()
    }
}

/// Anything that can run the linear part of each layer in both directions.
pub trait LinearStack {
    fn layer_count(&self) -> usize;
    /// `y = Wᵀx` for layer `l` (no bias).
    fn forward_layer(&self, l: usize, x: &[f64]) -> Result<Vec<f64>>;
    /// `z = W·d` for layer `l`.
    fn backward_layer(&self, l: usize, d: &[f64]) -> Result<Vec<f64>>;
    fn bias(&self, l: usize) -> &[f64];
}

/// Activations of one forward pass; `activations[l]` is the input to layer `l`.
#[derive(Debug, Clone)]
pub struct Pass {
    pub activations: Vec<Vec<f64>>,
    pub logits: Vec<f64>,
}

pub fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// `−ln softmax(z)[target]` via log-sum-exp.
pub fn cross_entropy(z: &[f64], target: usize) -> f64 {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
    (lse - z[target]).max(0.0)
}

pub(crate) fn argmax(z: &[f64]) -> usize {
    z.iter().enumerate().fold(0, |best, (i, v)| if *v > z[best] { i } else { best })
}

pub(crate) fn forward_pass<S: LinearStack + ?Sized>(net: &S, x: &[f64]) -> Result<Pass> {
    let n = net.layer_count();
    let mut activations = Vec::with_capacity(n);
    let mut a = x.to_vec();
    for l in 0..n {
        let mut z = net.forward_layer(l, &a)?;
        for (zj, b) in z.iter_mut().zip(net.bias(l)) {
            *zj += b;
        }
        activations.push(a);
        if l + 1 < n {
            for v in z.iter_mut() {
                *v = v.max(0.0);
            }
        }
        a = z;
    }
    Ok(Pass { activations, logits: a })
}

/// Loss and per-layer output errors `∂L/∂z_l` for one sample.
pub(crate) fn backward_pass<S: LinearStack + ?Sized>(net: &S, pass: &Pass, target: usize) -> Result<(f64, Vec<Vec<f64>>)> {
    if target >= pass.logits.len() {
        return Err(Error::InvalidLabel(target as i64));
    }
    let n = net.layer_count();
    let loss = cross_entropy(&pass.logits, target);
    let mut delta = softmax(&pass.logits);
    delta[target] -= 1.0;
    let mut deltas = vec![Vec::new(); n];
    for l in (0..n).rev() {
        if l > 0 {
            let mut prev = net.backward_layer(l, &delta)?;
            for (p, a) in prev.iter_mut().zip(&pass.activations[l]) {
                // activations[l] is the ReLU output of layer l-1
                if *a <= 0.0 {
                    *p = 0.0;
                }
            }
            deltas[l] = std::mem::replace(&mut delta, prev);
        } else {
            deltas[0] = std::mem::take(&mut delta);
        }
    }
    Ok((loss, deltas))
}

/// Floating-point multilayer perceptron.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub spec: NetworkSpec,
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
}

impl Mlp {
    pub fn zeros(spec: NetworkSpec) -> Result<Self> {
        spec.validate()?;
        let weights = spec.layer_dims.windows(2).map(|d| Matrix::zeros(d[0], d[1])).collect();
        let biases = spec.layer_dims[1..].iter().map(|&d| vec![0.0; d]).collect();
        Ok(Self { spec, weights, biases })
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init<R: Rng + ?Sized>(spec: NetworkSpec, rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(spec)?;
        for (l, w) in net.weights.iter_mut().enumerate() {
            let lim = net.spec.init_limit(l);
            for v in w.data.iter_mut() {
                *v = rng.random_range(-lim..=lim);
            }
        }
        Ok(net)
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        check_dim(self.spec.layers(), self.weights.len())?;
        check_dim(self.spec.layers(), self.biases.len())?;
        for (l, d) in self.spec.layer_dims.windows(2).enumerate() {
            check_dim(d[0], self.weights[l].rows)?;
            check_dim(d[1], self.weights[l].cols)?;
            check_dim(d[0] * d[1], self.weights[l].data.len())?;
            check_dim(d[1], self.biases[l].len())?;
        }
        Ok(())
    }

    /// Class scores (logits).
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(forward_pass(self, x)?.logits)
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.forward(x)?))
    }

    /// Loss and gradients of one sample.
    pub fn gradients(&self, x: &[f64], target: usize) -> Result<(f64, Vec<Matrix>, Vec<Vec<f64>>)> {
        let pass = forward_pass(self, x)?;
        let (loss, deltas) = backward_pass(self, &pass, target)?;
        let grads = pass
            .activations
            .iter()
            .zip(&deltas)
            .map(|(a, d)| Matrix::from_fn(a.len(), d.len(), |i, j| a[i] * d[j]))
            .collect();
        Ok((loss, grads, deltas))
    }

    /// Single SGD step; returns the pre-update loss.
    pub fn sgd_step(&mut self, x: &[f64], target: usize, lr: f64) -> Result<f64> {
        let (loss, grads, deltas) = self.gradients(x, target)?;
        self.apply_gradients(&grads, &deltas, lr);
        Ok(loss)
    }

    pub(crate) fn apply_gradients(&mut self, grads: &[Matrix], deltas: &[Vec<f64>], lr: f64) {
        if lr == 0.0 {
            return;
        }
        for ((w, g), (b, d)) in self.weights.iter_mut().zip(grads).zip(self.biases.iter_mut().zip(deltas)) {
            for (wv, gv) in w.data.iter_mut().zip(&g.data) {
                *wv -= lr * gv;
            }
            for (bv, dv) in b.iter_mut().zip(d) {
                *bv -= lr * dv;
            }
        }
    }
}

impl LinearStack for Mlp {
    fn layer_count(&self) -> usize {
        self.weights.len()
    }
    fn forward_layer(&self, l: usize, x: &[f64]) -> Result<Vec<f64>> {
        self.weights[l].vec_mul(x)
    }
    fn backward_layer(&self, l: usize, d: &[f64]) -> Result<Vec<f64>> {
        self.weights[l].mul_vec(d)
    }
    fn bias(&self, l: usize) -> &[f64] {
        &self.biases[l]
    }
}
