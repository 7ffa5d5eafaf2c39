//! Soft-Bounds ReRAM device model.
//!
//! A device state `w` is a normalized conductance bounded by `[b_min, b_max]`.
//! A positive pulse moves it by `gamma_up·(b_max − w)`, a negative pulse by
//! `−gamma_down·(w − b_min)`; both steps are scaled by `(1 + sigma_c2c·ξ)` with
//! `ξ` standard normal, and the result is clamped to the bounds.

mod distribution;
mod fit;

pub use distribution::{build_distribution, sample_device, DeviceDistribution};
pub use fit::{fit_softbounds, fit_softbounds_with, FitOptions, FitReport};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bounds used for sampled devices and for the nominal tile range.
pub const NOMINAL_B_MIN: f64 = -1.0;
pub const NOMINAL_B_MAX: f64 = 1.0;

/// Default relative cycle-to-cycle step noise.
pub const DEFAULT_SIGMA_C2C: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceParams {
    pub gamma_up: f64,
    pub gamma_down: f64,
    pub b_min: f64,
    pub b_max: f64,
    pub sigma_c2c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Up,
    Down,
}

impl Polarity {
    pub fn flip(self) -> Self {
        match self {
            Polarity::Up => Polarity::Down,
            Polarity::Down => Polarity::Up,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceState {
    pub w: f64,
}

impl DeviceParams {
    pub fn new(gamma_up: f64, gamma_down: f64, b_min: f64, b_max: f64, sigma_c2c: f64) -> Result<Self> {
        let p = Self { gamma_up, gamma_down, b_min, b_max, sigma_c2c };
        p.validate()?;
        Ok(p)
    }

    /// Symmetric device with the given number of states on the nominal range.
    pub fn symmetric(n_states: f64, sigma_c2c: f64) -> Result<Self> {
        Self::from_states_asymmetry(n_states, 0.0, NOMINAL_B_MIN, NOMINAL_B_MAX, sigma_c2c)
    }

    /// Inverse of [`n_states`](Self::n_states) / [`asymmetry`](Self::asymmetry)
    /// for fixed bounds.
    pub fn from_states_asymmetry(
        n_states: f64,
        asymmetry: f64,
        b_min: f64,
        b_max: f64,
        sigma_c2c: f64,
    ) -> Result<Self> {
        if !(n_states.is_finite() && n_states > 0.0) {
            return Err(Error::InvalidParams(format!("n_states must be positive, got {n_states}")));
        }
        if !(asymmetry.abs() < 1.0) {
            return Err(Error::InvalidParams(format!("asymmetry must lie in (-1, 1), got {asymmetry}")));
        }
        let mean_step = (b_max - b_min) / n_states;
        let step_up = mean_step * (1.0 + asymmetry);
        let step_down = mean_step * (1.0 - asymmetry);
        Self::new(step_up / b_max, step_down / -b_min, b_min, b_max, sigma_c2c)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.gamma_up, self.gamma_down, self.b_min, self.b_max, self.sigma_c2c];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams(format!("non-finite field in {self:?}")));
        }
        if !(self.b_min < 0.0 && 0.0 < self.b_max) {
            return Err(Error::InvalidParams(format!(
                "bounds must satisfy b_min < 0 < b_max, got [{}, {}]",
                self.b_min, self.b_max
            )));
        }
        if !(self.gamma_up > 0.0 && self.gamma_down > 0.0) {
            return Err(Error::InvalidParams("step rates must be positive".into()));
        }
        if self.sigma_c2c < 0.0 {
            return Err(Error::InvalidParams("sigma_c2c must be non-negative".into()));
        }
        // small slack so that devices sampled exactly at the clamp survive rounding
        if self.n_states() < 2.0 - 1e-9 {
            return Err(Error::InvalidParams(format!(
                "device has {} states, at least 2 required",
                self.n_states()
            )));
        }
        Ok(())
    }

    pub fn step_up_at_zero(&self) -> f64 {
        self.gamma_up * self.b_max
    }

    pub fn step_down_at_zero(&self) -> f64 {
        self.gamma_down * -self.b_min
    }

    /// Mean of the up and down step sizes at `w = 0`.
    pub fn midpoint_step(&self) -> f64 {
        0.5 * (self.step_up_at_zero() + self.step_down_at_zero())
    }

    pub fn range(&self) -> f64 {
        self.b_max - self.b_min
    }

    /// Number of conductance states: full range over the mean midpoint step.
    pub fn n_states(&self) -> f64 {
        self.range() / self.midpoint_step()
    }

    /// Normalized imbalance between midpoint up and down steps, in (−1, 1).
    pub fn asymmetry(&self) -> f64 {
        let up = self.step_up_at_zero();
        let down = self.step_down_at_zero();
        (up - down) / (up + down)
    }

    /// State where expected up and down steps are equal; the fixed point of
    /// alternating pulses.
    pub fn symmetry_point(&self) -> f64 {
        (self.gamma_up * self.b_max + self.gamma_down * self.b_min) / (self.gamma_up + self.gamma_down)
    }

    /// Expected signed step at state `w` (no noise).
    pub fn expected_step(&self, w: f64, polarity: Polarity) -> f64 {
        match polarity {
            Polarity::Up => self.gamma_up * (self.b_max - w),
            Polarity::Down => -self.gamma_down * (w - self.b_min),
        }
    }

    pub fn contains(&self, w: f64) -> bool {
        self.b_min <= w && w <= self.b_max
    }

    pub fn noise_free(&self) -> Self {
        Self { sigma_c2c: 0.0, ..*self }
    }

    /// Apply one pulse to a raw state value; see [`apply_pulse`].
    #[inline]
    pub fn pulse<R: Rng + ?Sized>(&self, w: f64, polarity: Polarity, rng: &mut R) -> f64 {
        let mut step = self.expected_step(w, polarity);
        if self.sigma_c2c > 0.0 {
            let xi: f64 = rng.sample(StandardNormal);
            step *= 1.0 + self.sigma_c2c * xi;
        }
        (w + step).clamp(self.b_min, self.b_max)
    }
}

pub fn apply_pulse<R: Rng + ?Sized>(
    params: &DeviceParams,
    state: DeviceState,
    polarity: Polarity,
    rng: &mut R,
) -> DeviceState {
    DeviceState { w: params.pulse(state.w, polarity, rng) }
}

pub fn n_states(params: &DeviceParams) -> f64 {
    params.n_states()
}

pub fn asymmetry(params: &DeviceParams) -> f64 {
    params.asymmetry()
}

/// Pulse-train protocol: per batch, a run of up pulses, a run of down pulses,
/// then alternating pulses starting with up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PulseScheme {
    pub batches: usize,
    pub up_per_batch: usize,
    pub down_per_batch: usize,
    pub alternating_per_batch: usize,
}

impl Default for PulseScheme {
    fn default() -> Self {
        Self { batches: 10, up_per_batch: 200, down_per_batch: 200, alternating_per_batch: 1000 }
    }
}

impl PulseScheme {
    pub const EMPTY: PulseScheme =
        PulseScheme { batches: 0, up_per_batch: 0, down_per_batch: 0, alternating_per_batch: 0 };

    pub fn per_batch(&self) -> usize {
        self.up_per_batch + self.down_per_batch + self.alternating_per_batch
    }

    pub fn total_pulses(&self) -> usize {
        self.batches * self.per_batch()
    }

    pub fn pulses(&self) -> impl Iterator<Item = Polarity> + Clone + '_ {
        let batch = std::iter::repeat_n(Polarity::Up, self.up_per_batch)
            .chain(std::iter::repeat_n(Polarity::Down, self.down_per_batch))
            .chain((0..self.alternating_per_batch).map(|k| {
                if k % 2 == 0 {
                    Polarity::Up
                } else {
                    Polarity::Down
                }
            }));
        std::iter::repeat_n(batch, self.batches).flatten()
    }
}

/// Conductance response to a pulse train: the initial state followed by one
/// sample per applied pulse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub samples: Vec<f64>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.samples
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }
}

pub fn simulate_trace<R: Rng + ?Sized>(
    params: &DeviceParams,
    scheme: &PulseScheme,
    w0: f64,
    rng: &mut R,
) -> Result<Trace> {
    params.validate()?;
    if !params.contains(w0) {
        return Err(Error::InvalidArgument(format!(
            "initial state {w0} outside [{}, {}]",
            params.b_min, params.b_max
        )));
    }
    let mut samples = Vec::with_capacity(1 + scheme.total_pulses());
    let mut w = w0;
    samples.push(w);
    for polarity in scheme.pulses() {
        w = params.pulse(w, polarity, rng);
        samples.push(w);
    }
    Ok(Trace { samples })
}

/// Noise-free trace into a caller-owned buffer; the hot loop of the fitter.
pub(crate) fn simulate_noise_free_into(
    gamma_up: f64,
    gamma_down: f64,
    b_min: f64,
    b_max: f64,
    w0: f64,
    pulses: &[Polarity],
    out: &mut Vec<f64>,
) {
    out.clear();
    let mut w = w0.clamp(b_min, b_max);
    out.push(w);
    for &p in pulses {
        w = match p {
            Polarity::Up => w + gamma_up * (b_max - w),
            Polarity::Down => w - gamma_down * (w - b_min),
        }
        .clamp(b_min, b_max);
        out.push(w);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use proptest::prelude::*;

    fn params(gu: f64, gd: f64) -> DeviceParams {
        DeviceParams::new(gu, gd, -1.0, 1.0, 0.0).unwrap()
    }

    #[test]
    fn up_pulse_saturates_at_upper_bound() {
        let p = params(0.1, 0.1);
        let s = apply_pulse(&p, DeviceState { w: 1.0 }, Polarity::Up, &mut stream(0, 0));
        assert_eq!(s.w, 1.0);
    }

    #[test]
    fn single_steps_from_midpoint() {
        let p = params(0.1, 0.05);
        let mut rng = stream(0, 0);
        assert_eq!(apply_pulse(&p, DeviceState { w: 0.0 }, Polarity::Up, &mut rng).w, 0.1);
        assert_eq!(apply_pulse(&p, DeviceState { w: 0.0 }, Polarity::Down, &mut rng).w, -0.05);
    }

    #[test]
    fn n_states_examples() {
        assert!((params(0.1, 0.1).n_states() - 20.0).abs() < 1e-12);
        let g = 1.0 / 11.0;
        assert!((params(g, g).n_states() - 22.0).abs() < 1e-9);
        let base = params(0.05, 0.08).n_states();
        assert!((params(0.1, 0.16).n_states() - base / 2.0).abs() < 1e-12);
    }

    #[test]
    fn asymmetry_examples() {
        assert_eq!(params(0.1, 0.1).asymmetry(), 0.0);
        assert!((params(0.15, 0.05).asymmetry() - 0.5).abs() < 1e-12);
        assert!((params(0.05, 0.15).asymmetry() + 0.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_params() {
        assert!(DeviceParams::new(0.1, 0.1, 0.5, 1.0, 0.0).is_err());
        assert!(DeviceParams::new(-0.1, 0.1, -1.0, 1.0, 0.0).is_err());
        assert!(DeviceParams::new(0.1, 0.1, -1.0, 1.0, -0.1).is_err());
        // gammas of 1.5 give fewer than two states
        assert!(DeviceParams::new(1.5, 1.5, -1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn empty_scheme_trace_is_initial_state() {
        let t = simulate_trace(&params(0.1, 0.1), &PulseScheme::EMPTY, 0.3, &mut stream(1, 0)).unwrap();
        assert_eq!(t.samples, vec![0.3]);
    }

    #[test]
    fn up_run_matches_closed_form() {
        let p = params(0.1, 0.1);
        let scheme = PulseScheme { batches: 1, up_per_batch: 200, down_per_batch: 0, alternating_per_batch: 0 };
        let w0 = -0.4;
        let t = simulate_trace(&p, &scheme, w0, &mut stream(1, 0)).unwrap();
        for (k, &w) in t.samples.iter().enumerate() {
            let closed = p.b_max - (p.b_max - w0) * (1.0 - p.gamma_up).powi(k as i32);
            assert!((w - closed).abs() < 1e-12, "k={k}");
        }
        assert!((t.samples[200] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn default_scheme_length() {
        let p = DeviceParams { sigma_c2c: 0.05, ..params(0.1, 0.1) };
        let t = simulate_trace(&p, &PulseScheme::default(), 0.0, &mut stream(1, 0)).unwrap();
        assert_eq!(t.len(), 14001);
    }

    #[test]
    fn out_of_bounds_initial_state_rejected() {
        assert!(simulate_trace(&params(0.1, 0.1), &PulseScheme::default(), 1.5, &mut stream(1, 0)).is_err());
    }

    #[test]
    fn symmetry_point_is_alternating_fixed_point() {
        let p = params(0.12, 0.06);
        let ws = p.symmetry_point();
        let up = p.expected_step(ws, Polarity::Up);
        let down = p.expected_step(ws, Polarity::Down);
        assert!((up + down).abs() < 1e-12);
    }

    fn arb_params() -> impl Strategy<Value = DeviceParams> {
        (0.01f64..0.3, 0.01f64..0.3, -2.0f64..-0.2, 0.2f64..2.0, 0.0f64..0.3).prop_map(|(gu, gd, lo, hi, s)| {
            DeviceParams { gamma_up: gu, gamma_down: gd, b_min: lo, b_max: hi, sigma_c2c: s }
        })
    }

    proptest! {
        #[test]
        fn state_stays_bounded(p in arb_params(), seed in 0u64..1000, pulses in proptest::collection::vec(any::<bool>(), 0..300)) {
            let mut rng = stream(seed, 0);
            let mut w = 0.0;
            for up in pulses {
                w = p.pulse(w, if up { Polarity::Up } else { Polarity::Down }, &mut rng);
                prop_assert!(p.contains(w));
            }
        }

        #[test]
        fn noise_free_steps_are_monotone(p in arb_params(), frac in 0.0f64..=1.0) {
            let p = p.noise_free();
            let w = p.b_min + frac * p.range();
            let mut rng = stream(0, 0);
            prop_assert!(p.pulse(w, Polarity::Up, &mut rng) >= w);
            prop_assert!(p.pulse(w, Polarity::Down, &mut rng) <= w);
        }

        #[test]
        fn traces_are_deterministic(p in arb_params(), seed in 0u64..1000) {
            let scheme = PulseScheme { batches: 2, up_per_batch: 20, down_per_batch: 15, alternating_per_batch: 30 };
            let a = simulate_trace(&p, &scheme, 0.0, &mut stream(seed, 5)).unwrap();
            let b = simulate_trace(&p, &scheme, 0.0, &mut stream(seed, 5)).unwrap();
            prop_assert_eq!(a.samples.len(), 1 + scheme.total_pulses());
            prop_assert_eq!(a, b);
        }

        #[test]
        fn inversion_round_trips(n in 2.0f64..200.0, a in -0.95f64..0.95) {
            let p = DeviceParams::from_states_asymmetry(n, a, -1.0, 1.0, 0.0).unwrap();
            prop_assert!((p.n_states() - n).abs() <= 1e-9 * n);
            prop_assert!((p.asymmetry() - a).abs() <= 1e-9);
        }
    }
}
