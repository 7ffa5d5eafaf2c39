//! Device-to-device variability as a 2-D Gaussian over
//! `(n_states, asymmetry)`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{DeviceParams, DEFAULT_SIGMA_C2C, NOMINAL_B_MAX, NOMINAL_B_MIN};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceDistribution {
    /// `(n_states, asymmetry)`
    pub mean: [f64; 2],
    pub covariance: [[f64; 2]; 2],
    /// Lower clamp on sampled `n_states`.
    #[serde(default = "default_clamp_n_min")]
    pub clamp_n_min: f64,
    /// Sampled asymmetry is clamped to `[-clamp_asym, clamp_asym]`, inside (−1, 1).
    #[serde(default = "default_clamp_asym")]
    pub clamp_asym: f64,
    /// Cycle-to-cycle noise assigned to every sampled device.
    #[serde(default = "default_sigma")]
    pub sigma_c2c: f64,
}

fn default_clamp_n_min() -> f64 {
    2.0
}
fn default_clamp_asym() -> f64 {
    0.99
}
fn default_sigma() -> f64 {
    DEFAULT_SIGMA_C2C
}

impl Default for DeviceDistribution {
    /// Mean of 22 states with std 5, so ±2σ spans roughly 13–33 states.
    /// The asymmetry moments (0.1 ± 0.05) are placeholders.
    fn default() -> Self {
        Self {
            mean: [22.0, 0.1],
            covariance: [[25.0, 0.0], [0.0, 0.0025]],
            clamp_n_min: default_clamp_n_min(),
            clamp_asym: default_clamp_asym(),
            sigma_c2c: DEFAULT_SIGMA_C2C,
        }
    }
}

impl DeviceDistribution {
    /// Degenerate distribution that always yields the same device.
    pub fn fixed(n_states: f64, asymmetry: f64, sigma_c2c: f64) -> Self {
        Self {
            mean: [n_states, asymmetry],
            covariance: [[0.0; 2]; 2],
            sigma_c2c,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let c = &self.covariance;
        let finite = self.mean.iter().chain(c.iter().flatten()).all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParams("distribution has non-finite moments".into()));
        }
        let scale = c[0][0].abs().max(c[1][1].abs()).max(1e-300);
        if (c[0][1] - c[1][0]).abs() > 1e-12 * scale {
            return Err(Error::InvalidParams("covariance is not symmetric".into()));
        }
        let det = c[0][0] * c[1][1] - c[0][1] * c[1][0];
        if c[0][0] < 0.0 || c[1][1] < 0.0 || det < -1e-12 * scale * scale {
            return Err(Error::InvalidParams("covariance is not positive semi-definite".into()));
        }
        if !(self.clamp_n_min >= 2.0) {
            return Err(Error::InvalidParams("clamp_n_min must be at least 2".into()));
        }
        if !(0.0..1.0).contains(&self.clamp_asym) {
            return Err(Error::InvalidParams("clamp_asym must lie in [0, 1)".into()));
        }
        if self.sigma_c2c < 0.0 {
            return Err(Error::InvalidParams("sigma_c2c must be non-negative".into()));
        }
        Ok(())
    }

    /// Lower-triangular factor `L` with `L·Lᵀ = covariance`, tolerant of
    /// semi-definite input.
    fn factor(&self) -> [[f64; 2]; 2] {
        let c = &self.covariance;
        let l11 = c[0][0].max(0.0).sqrt();
        let l21 = if l11 > 0.0 { c[1][0] / l11 } else { 0.0 };
        let l22 = (c[1][1] - l21 * l21).max(0.0).sqrt();
        [[l11, 0.0], [l21, l22]]
    }

    /// Draw `(n_states, asymmetry)` and apply the clamps.
    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let z1: f64 = rng.sample(StandardNormal);
        let z2: f64 = rng.sample(StandardNormal);
        let l = self.factor();
        let n = self.mean[0] + l[0][0] * z1;
        let a = self.mean[1] + l[1][0] * z1 + l[1][1] * z2;
        (n.max(self.clamp_n_min), a.clamp(-self.clamp_asym, self.clamp_asym))
    }
}

pub fn build_distribution(population: &[DeviceParams]) -> Result<DeviceDistribution> {
    if population.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 devices to estimate a distribution, got {}",
            population.len()
        )));
    }
    let points: Vec<[f64; 2]> = population.iter().map(|p| [p.n_states(), p.asymmetry()]).collect();
    let n = points.len() as f64;
    let mut mean = [0.0; 2];
    for p in &points {
        mean[0] += p[0] / n;
        mean[1] += p[1] / n;
    }
    let mut cov = [[0.0; 2]; 2];
    for p in &points {
        let d = [p[0] - mean[0], p[1] - mean[1]];
        for r in 0..2 {
            for c in 0..2 {
                cov[r][c] += d[r] * d[c] / (n - 1.0);
            }
        }
    }
    let sigma_c2c = population.iter().map(|p| p.sigma_c2c).sum::<f64>() / n;
    let dist = DeviceDistribution { mean, covariance: cov, sigma_c2c, ..DeviceDistribution::default() };
    dist.validate()?;
    Ok(dist)
}

/// Sample one device on the nominal bounds whose `n_states` and `asymmetry`
/// equal a clamped draw from `dist`.
pub fn sample_device<R: Rng + ?Sized>(dist: &DeviceDistribution, rng: &mut R) -> DeviceParams {
    let (n, a) = dist.sample_point(rng);
    DeviceParams::from_states_asymmetry(n, a, NOMINAL_B_MIN, NOMINAL_B_MAX, dist.sigma_c2c)
        .expect("clamped draws always invert to valid parameters")
}
