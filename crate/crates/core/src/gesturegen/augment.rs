use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::tactile::{Frame, GestureSeries, GRID};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentConfig {
    /// Amplitude factor drawn from `[1 - amplitude_range, 1 + amplitude_range]`.
    pub amplitude_range: f64,
    /// Maximum spatial shift per axis, in taxels.
    pub max_shift: i32,
    /// Time-stretch factor drawn from `[1 - time_range, 1 + time_range]`.
    pub time_range: f64,
    pub noise_std: f64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self { amplitude_range: 0.2, max_shift: 1, time_range: 0.15, noise_std: 0.01 }
    }
}

/// Concrete transform parameters; [`AugmentParams::IDENTITY`] leaves a series
/// unchanged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentParams {
    pub amplitude: f64,
    /// `(rows, cols)` shift, zero-padded.
    pub shift: (i32, i32),
    pub time_scale: f64,
    pub noise_std: f64,
    /// Duration limits as a fraction of the input length.
    pub time_limit: f64,
}

impl AugmentParams {
    pub const IDENTITY: AugmentParams =
        AugmentParams { amplitude: 1.0, shift: (0, 0), time_scale: 1.0, noise_std: 0.0, time_limit: 0.0 };

    pub fn draw<R: Rng + ?Sized>(cfg: &AugmentConfig, rng: &mut R) -> Self {
        let amp = cfg.amplitude_range.abs();
        let time = cfg.time_range.abs();
        let s = cfg.max_shift.abs();
        Self {
            amplitude: rng.random_range(1.0 - amp..=1.0 + amp),
            shift: (rng.random_range(-s..=s), rng.random_range(-s..=s)),
            time_scale: rng.random_range(1.0 - time..=1.0 + time),
            noise_std: cfg.noise_std,
            time_limit: time,
        }
    }
}

fn shift_frame(f: &Frame, dr: i32, dc: i32) -> Frame {
    let mut out = [[0.0; GRID]; GRID];
    for (r, row) in out.iter_mut().enumerate() {
        for (c, p) in row.iter_mut().enumerate() {
            let (sr, sc) = (r as i32 - dr, c as i32 - dc);
            if (0..GRID as i32).contains(&sr) && (0..GRID as i32).contains(&sc) {
                *p = f[sr as usize][sc as usize];
            }
        }
    }
    out
}

fn resample(frames: &[Frame], new_len: usize) -> Vec<Frame> {
    let n = frames.len();
    if new_len == n {
        return frames.to_vec();
    }
    (0..new_len)
        .map(|k| {
            if n == 1 || new_len == 1 {
                return frames[0];
            }
            let t = k as f64 * (n - 1) as f64 / (new_len - 1) as f64;
            let i = (t.floor() as usize).min(n - 2);
            let frac = t - i as f64;
            let mut f = [[0.0; GRID]; GRID];
            for r in 0..GRID {
                for c in 0..GRID {
                    f[r][c] = frames[i][r][c] * (1.0 - frac) + frames[i + 1][r][c] * frac;
                }
            }
            f
        })
        .collect()
}

/// Apply amplitude scaling, spatial shift, temporal resampling and taxel noise,
/// in that order. The label and speed are preserved.
pub fn augment_with<R: Rng + ?Sized>(series: &GestureSeries, params: &AugmentParams, rng: &mut R) -> GestureSeries {
    let n = series.frames.len();
    let mut frames: Vec<Frame> = series
        .frames
        .iter()
        .map(|f| {
            let scaled = if params.amplitude == 1.0 { *f } else { f.map(|row| row.map(|p| p * params.amplitude)) };
            if params.shift == (0, 0) {
                scaled
            } else {
                shift_frame(&scaled, params.shift.0, params.shift.1)
            }
        })
        .collect();
    if params.time_scale != 1.0 && n > 0 {
        let nf = n as f64;
        let lo = (nf * (1.0 - params.time_limit)).ceil().max(1.0) as usize;
        let hi = ((nf * (1.0 + params.time_limit)).floor() as usize).max(lo);
        let target = ((nf * params.time_scale).round() as usize).clamp(lo, hi);
        frames = resample(&frames, target);
    }
    if params.noise_std > 0.0 {
        for p in frames.iter_mut().flatten().flatten() {
            let z: f64 = rng.sample(StandardNormal);
            *p = (*p + params.noise_std * z).max(0.0);
        }
    }
    GestureSeries { frames, ..series.clone() }
}

pub fn augment<R: Rng + ?Sized>(series: &GestureSeries, cfg: &AugmentConfig, rng: &mut R) -> GestureSeries {
    let params = AugmentParams::draw(cfg, rng);
    augment_with(series, &params, rng)
}
