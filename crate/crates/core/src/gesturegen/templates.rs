use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tactile::{Frame, GestureSeries, Speed, GRID};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Templates {
    /// Blob width in taxels.
    pub blob_sigma: f64,
    /// Peak pressure of a finger contact before jitter.
    pub amplitude: f64,
    /// Half-width of the uniform jitter of stationary positions, in taxels.
    pub position_jitter: f64,
    /// Swipes travel between `margin` and `GRID - 1 - margin`.
    pub swipe_margin: f64,
    pub circle_radius: f64,
    /// Column spacing of the two fingers in two-finger swipes.
    pub finger_gap: f64,
    /// Additive Gaussian pressure noise, clipped to `[0, 1]`.
    pub noise_std: f64,
}

impl Default for Templates {
    fn default() -> Self {
        Self {
            blob_sigma: 0.9,
            amplitude: 0.9,
            position_jitter: 1.5,
            swipe_margin: 1.5,
            circle_radius: 2.5,
            finger_gap: 2.6,
            noise_std: 0.03,
        }
    }
}

/// Inclusive frame-count band per speed.
pub fn frame_count_range(speed: Speed) -> (usize, usize) {
    match speed {
        Speed::Fast => (20, 40),
        Speed::Regular => (40, 60),
        Speed::Slow => (60, 90),
    }
}

fn add_blob(frame: &mut Frame, x: f64, y: f64, sigma: f64, amplitude: f64) {
    let inv = 1.0 / (2.0 * sigma * sigma);
    for (r, row) in frame.iter_mut().enumerate() {
        for (c, p) in row.iter_mut().enumerate() {
            let d2 = (c as f64 - x).powi(2) + (r as f64 - y).powi(2);
            *p += amplitude * (-d2 * inv).exp();
        }
    }
}

/// Half-sine burst over `[start, end]` (in frames), zero outside.
fn burst(t: f64, start: f64, end: f64) -> f64 {
    if t <= start || t >= end {
        0.0
    } else {
        (PI * (t - start) / (end - start)).sin()
    }
}

/// Contact envelope for moving gestures: always on, softly rising and falling.
fn contact(t: f64, n: usize) -> f64 {
    let u = if n > 1 { t / (n - 1) as f64 } else { 0.5 };
    0.6 + 0.4 * (PI * u).sin()
}

/// Render one gesture of category `label` (1–10).
///
/// Taps are stationary bursts (two for a double tap), swipes move a blob
/// linearly across the grid (two parallel blobs for two-finger swipes) and
/// circles follow a circular path, clockwise on screen for label 7.
pub fn generate_gesture<R: Rng + ?Sized>(
    label: u8,
    speed: Speed,
    templates: &Templates,
    rng: &mut R,
) -> Result<GestureSeries> {
    if !(1..=10).contains(&label) {
        return Err(Error::InvalidLabel(label as i64));
    }
    let (lo, hi) = frame_count_range(speed);
    let n = rng.random_range(lo..=hi);
    let nf = n as f64;
    let centre = ((GRID - 1) / 2) as f64;
    let jitter = templates.position_jitter;
    let amp = templates.amplitude * rng.random_range(0.75..=1.0);
    let sigma = templates.blob_sigma * rng.random_range(0.85..=1.15);
    let a = templates.swipe_margin;
    let b = (GRID - 1) as f64 - templates.swipe_margin;
    let mut frames = vec![[[0.0; GRID]; GRID]; n];
    let progress = |t: usize| if n > 1 { t as f64 / (n - 1) as f64 } else { 0.0 };

    match label {
        1 | 2 => {
            let x = centre + rng.random_range(-jitter..=jitter);
            let y = centre + rng.random_range(-jitter..=jitter);
            let bursts: Vec<(f64, f64)> = if label == 1 {
                vec![(rng.random_range(0.05..0.25) * nf, rng.random_range(0.75..0.95) * nf)]
            } else {
                let mid = rng.random_range(0.45..0.55) * nf;
                let gap = rng.random_range(0.05..0.12) * nf;
                vec![
                    (rng.random_range(0.03..0.1) * nf, mid - gap / 2.0),
                    (mid + gap / 2.0, rng.random_range(0.9..0.97) * nf),
                ]
            };
            for (t, f) in frames.iter_mut().enumerate() {
                let e: f64 = bursts.iter().map(|&(s, e)| burst(t as f64, s, e)).sum();
                if e > 0.0 {
                    add_blob(f, x, y, sigma, amp * e);
                }
            }
        }
        3..=6 => {
            let lane = centre + rng.random_range(-jitter..=jitter);
            let (from, to) = if label == 3 || label == 5 { (a, b) } else { (b, a) };
            let vertical = label <= 4;
            for (t, f) in frames.iter_mut().enumerate() {
                let s = from + (to - from) * progress(t);
                let (x, y) = if vertical { (lane, s) } else { (s, lane) };
                add_blob(f, x, y, sigma, amp * contact(t as f64, n));
            }
        }
        7 | 8 => {
            let cx = centre + rng.random_range(-0.5..=0.5);
            let cy = centre + rng.random_range(-0.5..=0.5);
            let radius = templates.circle_radius * rng.random_range(0.9..=1.1);
            let turns = rng.random_range(0.8..=1.0);
            let phase = rng.random_range(0.0..2.0 * PI);
            // with rows growing downward, increasing angle runs clockwise on screen
            let dir = if label == 7 { 1.0 } else { -1.0 };
            for (t, f) in frames.iter_mut().enumerate() {
                let theta = phase + dir * 2.0 * PI * turns * progress(t);
                add_blob(f, cx + radius * theta.cos(), cy + radius * theta.sin(), sigma, amp * contact(t as f64, n));
            }
        }
        _ => {
            let lane = centre + rng.random_range(-0.5..=0.5);
            let half = 0.5 * templates.finger_gap;
            let (from, to) = if label == 10 { (a, b) } else { (b, a) };
            for (t, f) in frames.iter_mut().enumerate() {
                let y = from + (to - from) * progress(t);
                let e = amp * contact(t as f64, n);
                add_blob(f, lane - half, y, sigma, e);
                add_blob(f, lane + half, y, sigma, e);
            }
        }
    }

    for p in frames.iter_mut().flatten().flatten() {
        if templates.noise_std > 0.0 {
            let z: f64 = rng.sample(StandardNormal);
            *p += templates.noise_std * z;
        }
        *p = p.clamp(0.0, 1.0);
    }
    GestureSeries::new(frames, label, speed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::tactile::{centroid_trajectory, peak_count};

    fn quiet() -> Templates {
        Templates { noise_std: 0.0, ..Templates::default() }
    }

    fn shoelace(x: &[f64], y: &[f64]) -> f64 {
        let n = x.len();
        (0..n).map(|i| x[i] * y[(i + 1) % n] - x[(i + 1) % n] * y[i]).sum::<f64>() / 2.0
    }

    fn centroid_path(s: &GestureSeries) -> (Vec<f64>, Vec<f64>) {
        s.frames
            .iter()
            .map(|f| {
                let mut tot = 0.0;
                let mut sx = 0.0;
                let mut sy = 0.0;
                for (r, row) in f.iter().enumerate() {
                    for (c, &p) in row.iter().enumerate() {
                        tot += p;
                        sx += c as f64 * p;
                        sy += r as f64 * p;
                    }
                }
                (sx / tot, sy / tot)
            })
            .unzip()
    }

    #[test]
    fn frames_within_unit_range_and_speed_band() {
        let mut rng = stream(1, 0);
        for label in 1..=10 {
            for speed in Speed::ALL {
                let s = generate_gesture(label, speed, &Templates::default(), &mut rng).unwrap();
                let (lo, hi) = frame_count_range(speed);
                assert!((lo..=hi).contains(&s.len()));
                assert!(s.frames.iter().flatten().flatten().all(|&p| (0.0..=1.0).contains(&p)));
            }
        }
    }

    #[test]
    fn tap_templates_have_expected_peaks() {
        let mut rng = stream(2, 0);
        for _ in 0..50 {
            for speed in Speed::ALL {
                let single = generate_gesture(1, speed, &quiet(), &mut rng).unwrap();
                assert_eq!(peak_count(&single), 1);
                let double = generate_gesture(2, speed, &quiet(), &mut rng).unwrap();
                assert_eq!(peak_count(&double), 2);
            }
        }
    }

    #[test]
    fn swipe_trajectories_are_monotone() {
        let mut rng = stream(3, 0);
        for _ in 0..30 {
            let right = centroid_trajectory(&generate_gesture(5, Speed::Regular, &quiet(), &mut rng).unwrap());
            assert!(right.x.windows(2).all(|w| w[1] > w[0]), "{:?}", right.x);
            let left = centroid_trajectory(&generate_gesture(6, Speed::Fast, &quiet(), &mut rng).unwrap());
            assert!(left.x.windows(2).all(|w| w[1] < w[0]));
            let down = centroid_trajectory(&generate_gesture(3, Speed::Slow, &quiet(), &mut rng).unwrap());
            assert!(down.y.windows(2).all(|w| w[1] > w[0]));
            let up2 = centroid_trajectory(&generate_gesture(9, Speed::Slow, &quiet(), &mut rng).unwrap());
            assert!(up2.y.windows(2).all(|w| w[1] < w[0]));
        }
    }

    #[test]
    fn circles_have_opposite_orientation() {
        let mut rng = stream(4, 0);
        for _ in 0..30 {
            let (x7, y7) = centroid_path(&generate_gesture(7, Speed::Regular, &quiet(), &mut rng).unwrap());
            let (x8, y8) = centroid_path(&generate_gesture(8, Speed::Regular, &quiet(), &mut rng).unwrap());
            let (a7, a8) = (shoelace(&x7, &y7), shoelace(&x8, &y8));
            assert!(a7 * a8 < 0.0, "{a7} {a8}");
            assert!(a7 > 0.0);
        }
    }

    #[test]
    fn invalid_label_rejected() {
        assert!(generate_gesture(0, Speed::Fast, &quiet(), &mut stream(0, 0)).is_err());
        assert!(generate_gesture(11, Speed::Fast, &quiet(), &mut stream(0, 0)).is_err());
    }
}
