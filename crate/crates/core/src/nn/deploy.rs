use super::mlp::{argmax, forward_pass, LinearStack, Mlp, NetworkSpec};
use crate::crossbar::{map_weights_to_targets, program_and_verify, AnalogTile, ProgramReport, WeightMapping};
use crate::device::DeviceDistribution;
use crate::error::Result;
use crate::rng::{child_id, stream};

const DEPLOY_TILE_STREAM: u64 = 0x4450;
const PROGRAM_STREAM: u64 = 0x5056;

/// One programmed layer. The tile holds `scale·W + offset`; the forward pass
/// undoes the affine map digitally.
#[derive(Debug, Clone, PartialEq)]
pub struct DeployedLayer {
    pub tile: AnalogTile,
    pub mapping: WeightMapping,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeployedNetwork {
    pub spec: NetworkSpec,
    pub layers: Vec<DeployedLayer>,
}

impl DeployedNetwork {
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(forward_pass(self, x)?.logits)
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.forward(x)?))
    }

    /// Weights actually realized by the programmed devices.
    pub fn effective_weights(&self) -> Mlp {
        Mlp {
            spec: self.spec.clone(),
            weights: self
                .layers
                .iter()
                .map(|l| {
                    let mut m = l.tile.read_weights();
                    for v in &mut m.data {
                        *v = l.mapping.to_weight(*v);
                    }
                    m
                })
                .collect(),
            biases: self.layers.iter().map(|l| l.bias.clone()).collect(),
        }
    }
}

impl LinearStack for DeployedNetwork {
    fn layer_count(&self) -> usize {
        self.layers.len()
    }
    fn forward_layer(&self, l: usize, x: &[f64]) -> Result<Vec<f64>> {
        let layer = &self.layers[l];
        let sum_x: f64 = x.iter().sum();
        let mut y = layer.tile.forward_mac(x)?;
        for v in &mut y {
            *v = (*v - layer.mapping.offset * sum_x) / layer.mapping.scale;
        }
        Ok(y)
    }
    fn backward_layer(&self, l: usize, d: &[f64]) -> Result<Vec<f64>> {
        let layer = &self.layers[l];
        let sum_d: f64 = d.iter().sum();
        let mut z = layer.tile.backward_mac(d)?;
        for v in &mut z {
            *v = (*v - layer.mapping.offset * sum_d) / layer.mapping.scale;
        }
        Ok(z)
    }
    fn bias(&self, l: usize) -> &[f64] {
        &self.layers[l].bias
    }
}

/// Map every layer of `net` onto freshly sampled tiles (devices start at
/// `w = 0`) and program them with program-and-verify.
pub fn deploy(
    net: &Mlp,
    dist: &DeviceDistribution,
    epsilon: f64,
    max_iter: usize,
    seed: u64,
) -> Result<(DeployedNetwork, Vec<ProgramReport>)> {
    net.validate()?;
    let mut layers = Vec::with_capacity(net.weights.len());
    let mut reports = Vec::with_capacity(net.weights.len());
    let mut rng = stream(seed, PROGRAM_STREAM);
    for (l, (w, b)) in net.weights.iter().zip(&net.biases).enumerate() {
        let id = child_id(DEPLOY_TILE_STREAM, l as u64);
        let mut tile = AnalogTile::sampled(w.rows, w.cols, dist, &mut stream(seed, id), id)?;
        let (targets, mapping) = map_weights_to_targets(w, &tile)?;
        reports.push(program_and_verify(&mut tile, &targets, epsilon, max_iter, &mut rng)?);
        layers.push(DeployedLayer { tile, mapping, bias: b.clone() });
    }
    Ok((DeployedNetwork { spec: net.spec.clone(), layers }, reports))
}
