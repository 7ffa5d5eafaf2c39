//! Fitting Soft-Bounds parameters to a measured pulse-train trace.
//!
//! The objective is the mean absolute deviation between the noise-free model
//! response and the trace, minimized over `(ln gamma_up, ln gamma_down, b_min,
//! b_max)` with multi-start Nelder–Mead. Cycle-to-cycle noise is estimated
//! afterwards from the step residuals.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{simulate_noise_free_into, DeviceParams, Polarity, PulseScheme, Trace};
use crate::error::{Error, Result};
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::rng;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitOptions {
    pub restarts: usize,
    pub f_tol: f64,
    pub max_evals_per_start: usize,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { restarts: 8, f_tol: 1e-6, max_evals_per_start: 1500, seed: 0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitReport {
    pub params: DeviceParams,
    /// Mean absolute deviation of the noise-free fitted response.
    pub mad: f64,
    pub evaluations: usize,
    pub starts: usize,
}

pub fn fit_softbounds(trace: &Trace, scheme: &PulseScheme) -> Result<FitReport> {
    fit_softbounds_with(trace, scheme, &FitOptions::default())
}

pub fn fit_softbounds_with(trace: &Trace, scheme: &PulseScheme, opts: &FitOptions) -> Result<FitReport> {
    if trace.len() != 1 + scheme.total_pulses() {
        return Err(Error::InvalidArgument(format!(
            "trace has {} samples but the scheme implies {}",
            trace.len(),
            1 + scheme.total_pulses()
        )));
    }
    if trace.samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("trace contains non-finite samples".into()));
    }
    let (lo, hi) = trace.min_max();
    let span = hi - lo;
    if !(span > 1e-12 * hi.abs().max(lo.abs()).max(1.0)) {
        return Err(Error::Degenerate("trace has no dynamic range to fit".into()));
    }

    let pulses: Vec<Polarity> = scheme.pulses().collect();
    let observed = &trace.samples;
    let w0 = observed[0];
    let mut buf = Vec::with_capacity(observed.len());
    let mut objective = |x: &[f64]| -> f64 {
        let (gu, gd, b_min, b_max) = (x[0].exp(), x[1].exp(), x[2], x[3]);
        if !(b_min < 0.0 && b_max > 0.0) || !gu.is_finite() || !gd.is_finite() {
            return 1e6 + b_min.max(0.0) + (-b_max).max(0.0);
        }
        simulate_noise_free_into(gu, gd, b_min, b_max, w0, &pulses, &mut buf);
        buf.iter().zip(observed).map(|(m, o)| (m - o).abs()).sum::<f64>() / observed.len() as f64
    };

    let guess = initial_guess(observed, &pulses, lo, hi);
    let wide = [0.3, 0.3, 0.1 * span, 0.1 * span];
    let narrow = [0.02, 0.02, 0.005 * span, 0.005 * span];
    let nm = NelderMeadOptions { max_evals: opts.max_evals_per_start, f_tol: opts.f_tol * 1e-3, x_tol: 1e-10 };
    let polish = NelderMeadOptions { max_evals: opts.max_evals_per_start, ..nm.clone() };

    let mut perturb = rng::stream(opts.seed, 0xF17);
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut evaluations = 0;
    let starts = opts.restarts.max(1);
    for start in 0..starts {
        let x0 = if start == 0 {
            guess.to_vec()
        } else {
            vec![
                guess[0] + perturb.random_range(-0.7..0.7),
                guess[1] + perturb.random_range(-0.7..0.7),
                guess[2] * perturb.random_range(0.85..1.15),
                guess[3] * perturb.random_range(0.85..1.15),
            ]
        };
        let first = nelder_mead(&mut objective, &x0, &wide, &nm);
        let second = nelder_mead(&mut objective, &first.x, &narrow, &polish);
        evaluations += first.evals + second.evals;
        let (x, f) = if second.f <= first.f { (second.x, second.f) } else { (first.x, first.f) };
        if best.as_ref().is_none_or(|b| f < b.1) {
            best = Some((x, f));
        }
        // an exact reproduction cannot be improved on by further starts
        if best.as_ref().is_some_and(|b| b.1 <= 1e-12 * span) {
            break;
        }
    }

    let (x, mad) = best.expect("at least one start");
    let mut params = DeviceParams {
        gamma_up: x[0].exp(),
        gamma_down: x[1].exp(),
        b_min: x[2],
        b_max: x[3],
        sigma_c2c: 0.0,
    };
    params.sigma_c2c = estimate_c2c(&params, observed, &pulses);
    params.validate()?;
    Ok(FitReport { params, mad, evaluations, starts })
}

fn initial_guess(observed: &[f64], pulses: &[Polarity], lo: f64, hi: f64) -> [f64; 4] {
    let span = hi - lo;
    let b_min = lo.min(-1e-3 * span);
    let b_max = hi.max(1e-3 * span);
    let mut up = Vec::new();
    let mut down = Vec::new();
    for (k, p) in pulses.iter().enumerate() {
        let (w, next) = (observed[k], observed[k + 1]);
        match p {
            Polarity::Up if b_max - w > 0.1 * span => up.push((next - w) / (b_max - w)),
            Polarity::Down if w - b_min > 0.1 * span => down.push((w - next) / (w - b_min)),
            _ => {}
        }
    }
    let rate = |mut v: Vec<f64>| {
        v.retain(|r| r.is_finite() && *r > 0.0);
        if v.is_empty() {
            return 0.05;
        }
        v.sort_by(f64::total_cmp);
        v[v.len() / 2].clamp(1e-4, 0.9)
    };
    [rate(up).ln(), rate(down).ln(), b_min, b_max]
}

/// RMS relative deviation of observed steps from the fitted expected steps,
/// ignoring small steps and steps that ended on a bound.
fn estimate_c2c(params: &DeviceParams, observed: &[f64], pulses: &[Polarity]) -> f64 {
    let min_step = 0.02 * params.range();
    let margin = 1e-9 * params.range();
    let mut sum = 0.0;
    let mut n = 0usize;
    for (k, &p) in pulses.iter().enumerate() {
        let expected = params.expected_step(observed[k], p);
        let next = observed[k + 1];
        if expected.abs() < min_step || next <= params.b_min + margin || next >= params.b_max - margin {
            continue;
        }
        let r = (next - observed[k]) / expected - 1.0;
        sum += r * r;
        n += 1;
    }
    if n == 0 {
        0.0
    } else {
        (sum / n as f64).sqrt()
    }
}
