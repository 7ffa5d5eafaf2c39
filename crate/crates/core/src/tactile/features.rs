//! The 38-element feature vector.
//!
//! Layout:
//!
//! | index  | feature |
//! |--------|---------|
//! | 0      | `mean_p`: mean pressure over all taxels and frames |
//! | 1      | `max_p`: per-taxel temporal maximum, averaged over taxels |
//! | 2      | `variability`: mean absolute frame-to-frame difference |
//! | 3      | `peak_count` of the frame-average pressure |
//! | 4      | `duration` in frames |
//! | 5–13   | row-wise mean pressure |
//! | 14–22  | column-wise mean pressure |
//! | 23, 24 | contact area: max and mean active taxels per frame |
//! | 25–30  | centroid x (column) trajectory, 6 resampled points |
//! | 31–36  | centroid y (row) trajectory, 6 resampled points |
//! | 37     | centroid path length in taxels |

use serde::{Deserialize, Serialize};

use super::series::{GestureSeries, GRID};
use crate::error::{Error, Result};

pub const FEATURE_LEN: usize = 38;
pub const TRAJ_POINTS: usize = 6;
pub const DEFAULT_AREA_THRESHOLD: f64 = 0.1;

const ROW_MEANS: usize = 5;
const COL_MEANS: usize = ROW_MEANS + GRID;
const AREA: usize = COL_MEANS + GRID;
const TRAJ_X: usize = AREA + 2;
const TRAJ_Y: usize = TRAJ_X + TRAJ_POINTS;
const PATH: usize = TRAJ_Y + TRAJ_POINTS;

pub const FEATURE_NAMES: [&str; FEATURE_LEN] = [
    "mean_p", "max_p", "variability", "peak_count", "duration",
    "row_mean_0", "row_mean_1", "row_mean_2", "row_mean_3", "row_mean_4", "row_mean_5", "row_mean_6", "row_mean_7", "row_mean_8",
    "col_mean_0", "col_mean_1", "col_mean_2", "col_mean_3", "col_mean_4", "col_mean_5", "col_mean_6", "col_mean_7", "col_mean_8",
    "area_max", "area_mean",
    "traj_x_0", "traj_x_1", "traj_x_2", "traj_x_3", "traj_x_4", "traj_x_5",
    "traj_y_0", "traj_y_1", "traj_y_2", "traj_y_3", "traj_y_4", "traj_y_5",
    "path_length",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(#[serde(with = "array38")] pub [f64; FEATURE_LEN]);

mod array38 {
    use super::FEATURE_LEN;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[f64; FEATURE_LEN], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[f64; FEATURE_LEN], D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        v.try_into().map_err(|v: Vec<f64>| D::Error::invalid_length(v.len(), &"38 features"))
    }
}

impl FeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
    pub fn mean_p(&self) -> f64 {
        self.0[0]
    }
    pub fn max_p(&self) -> f64 {
        self.0[1]
    }
    pub fn variability(&self) -> f64 {
        self.0[2]
    }
    pub fn peak_count(&self) -> f64 {
        self.0[3]
    }
    pub fn duration(&self) -> f64 {
        self.0[4]
    }
    pub fn row_means(&self) -> &[f64] {
        &self.0[ROW_MEANS..COL_MEANS]
    }
    pub fn col_means(&self) -> &[f64] {
        &self.0[COL_MEANS..AREA]
    }
    pub fn area_max(&self) -> f64 {
        self.0[AREA]
    }
    pub fn area_mean(&self) -> f64 {
        self.0[AREA + 1]
    }
    pub fn traj_x(&self) -> &[f64] {
        &self.0[TRAJ_X..TRAJ_Y]
    }
    pub fn traj_y(&self) -> &[f64] {
        &self.0[TRAJ_Y..PATH]
    }
    pub fn path_length(&self) -> f64 {
        self.0[PATH]
    }
}

fn frame_average(frame: &[[f64; GRID]; GRID]) -> f64 {
    frame.iter().flatten().sum::<f64>() / (GRID * GRID) as f64
}

/// Interior frames whose average pressure strictly exceeds both neighbours.
pub fn peak_count(series: &GestureSeries) -> usize {
    let avg: Vec<f64> = series.frames.iter().map(frame_average).collect();
    avg.windows(3).filter(|w| w[1] > w[0] && w[1] > w[2]).count()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub x: [f64; TRAJ_POINTS],
    pub y: [f64; TRAJ_POINTS],
    pub path_length: f64,
}

/// Pressure-weighted centroid path (x = column, y = row, taxel units),
/// resampled at six equally spaced times.
///
/// Frames with total pressure below 1e-9 repeat the previous centroid; an
/// empty leading frame uses the grid centre.
pub fn centroid_trajectory(series: &GestureSeries) -> Trajectory {
    let centre = ((GRID - 1) / 2) as f64;
    let mut path: Vec<(f64, f64)> = Vec::with_capacity(series.frames.len());
    let mut prev = (centre, centre);
    for frame in &series.frames {
        let mut total = 0.0;
        let mut sx = 0.0;
        let mut sy = 0.0;
        for (r, row) in frame.iter().enumerate() {
            for (c, &p) in row.iter().enumerate() {
                total += p;
                sx += c as f64 * p;
                sy += r as f64 * p;
            }
        }
        if total >= 1e-9 {
            prev = (sx / total, sy / total);
        }
        path.push(prev);
    }

    let path_length = path
        .windows(2)
        .map(|w| (w[1].0 - w[0].0).hypot(w[1].1 - w[0].1))
        .sum();

    let mut x = [centre; TRAJ_POINTS];
    let mut y = [centre; TRAJ_POINTS];
    if let Some(&last) = path.last() {
        let span = (path.len() - 1) as f64;
        for k in 0..TRAJ_POINTS {
            let t = k as f64 * span / (TRAJ_POINTS - 1) as f64;
            let i = (t.floor() as usize).min(path.len() - 1);
            let frac = t - i as f64;
            let (a, b) = if i + 1 < path.len() { (path[i], path[i + 1]) } else { (last, last) };
            x[k] = if frac == 0.0 { a.0 } else { a.0 + frac * (b.0 - a.0) };
            y[k] = if frac == 0.0 { a.1 } else { a.1 + frac * (b.1 - a.1) };
        }
    }
    Trajectory { x, y, path_length }
}

/// Max and mean over frames of the number of taxels with pressure `> theta`.
pub fn contact_area(series: &GestureSeries, theta: f64) -> (f64, f64) {
    if series.frames.is_empty() {
        return (0.0, 0.0);
    }
    let counts: Vec<usize> = series
        .frames
        .iter()
        .map(|f| f.iter().flatten().filter(|&&p| p > theta).count())
        .collect();
    let max = counts.iter().copied().max().unwrap_or(0) as f64;
    let mean = counts.iter().sum::<usize>() as f64 / counts.len() as f64;
    (max, mean)
}

/// Fixed-length summary of a (preprocessed) gesture.
pub fn extract_features(series: &GestureSeries) -> Result<FeatureVector> {
    let frames = &series.frames;
    if frames.is_empty() {
        return Err(Error::Empty("gesture has no frames".into()));
    }
    let n = frames.len();
    let cells = (n * GRID * GRID) as f64;
    let mut out = [0.0; FEATURE_LEN];

    out[0] = frames.iter().flatten().flatten().sum::<f64>() / cells;

    let mut taxel_max = [[0.0f64; GRID]; GRID];
    for f in frames {
        for r in 0..GRID {
            for c in 0..GRID {
                taxel_max[r][c] = taxel_max[r][c].max(f[r][c]);
            }
        }
    }
    out[1] = taxel_max.iter().flatten().sum::<f64>() / (GRID * GRID) as f64;

    if n > 1 {
        let diff: f64 = frames
            .windows(2)
            .map(|w| {
                w[0].iter()
                    .flatten()
                    .zip(w[1].iter().flatten())
                    .map(|(a, b)| (b - a).abs())
                    .sum::<f64>()
            })
            .sum();
        out[2] = diff / ((n - 1) * GRID * GRID) as f64;
    }

    out[3] = peak_count(series) as f64;
    out[4] = n as f64;

    let per = (n * GRID) as f64;
    for k in 0..GRID {
        let mut row_acc = 0.0;
        let mut col_acc = 0.0;
        for f in frames {
            for m in 0..GRID {
                row_acc += f[k][m];
                col_acc += f[m][k];
            }
        }
        out[ROW_MEANS + k] = row_acc / per;
        out[COL_MEANS + k] = col_acc / per;
    }

    let (area_max, area_mean) = contact_area(series, DEFAULT_AREA_THRESHOLD);
    out[AREA] = area_max;
    out[AREA + 1] = area_mean;

    let traj = centroid_trajectory(series);
    out[TRAJ_X..TRAJ_Y].copy_from_slice(&traj.x);
    out[TRAJ_Y..PATH].copy_from_slice(&traj.y);
    out[PATH] = traj.path_length;

    Ok(FeatureVector(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tactile::{preprocess, Speed};
    use proptest::prelude::*;

    fn series(frames: Vec<[[f64; GRID]; GRID]>) -> GestureSeries {
        GestureSeries { frames, label: 1, speed: Speed::Regular }
    }

    fn averages_series(avgs: &[f64]) -> GestureSeries {
        series(avgs.iter().map(|&a| [[a; GRID]; GRID]).collect())
    }

    fn blob_at(x: f64, y: f64) -> [[f64; GRID]; GRID] {
        let mut f = [[0.0; GRID]; GRID];
        // symmetric 3×3 weights keep the centroid exactly on (x, y) for integer positions
        let (cx, cy) = (x.round() as i64, y.round() as i64);
        for dr in -1i64..=1 {
            for dc in -1i64..=1 {
                let (r, c) = (cy + dr, cx + dc);
                if (0..GRID as i64).contains(&r) && (0..GRID as i64).contains(&c) {
                    f[r as usize][c as usize] = if dr == 0 && dc == 0 { 1.0 } else { 0.25 };
                }
            }
        }
        f
    }

    #[test]
    fn names_match_length() {
        assert_eq!(FEATURE_NAMES.len(), FEATURE_LEN);
        assert_eq!(PATH, FEATURE_LEN - 1);
    }

    #[test]
    fn all_zero_series_only_has_duration() {
        let s = series(vec![[[0.0; GRID]; GRID]; 7]);
        let f = extract_features(&s).unwrap();
        for (k, &v) in f.0.iter().enumerate() {
            match k {
                4 => assert_eq!(v, 7.0),
                TRAJ_X..PATH => assert_eq!(v, 4.0),
                _ => assert_eq!(v, 0.0, "feature {}", FEATURE_NAMES[k]),
            }
        }
    }

    #[test]
    fn repeated_frame() {
        let s = series(vec![blob_at(3.0, 5.0); 4]);
        let f = extract_features(&s).unwrap();
        assert_eq!(f.variability(), 0.0);
        assert_eq!(f.path_length(), 0.0);
        assert!((f.max_p() - f.mean_p()).abs() < 1e-15);
        assert_eq!(f.peak_count(), 0.0);
    }

    #[test]
    fn peak_counting() {
        assert_eq!(peak_count(&averages_series(&[0.0, 0.1, 0.2, 0.3])), 0);
        assert_eq!(peak_count(&averages_series(&[0.2; 5])), 0);
        assert_eq!(peak_count(&averages_series(&[0.0, 1.0, 0.0, 1.0, 0.0])), 2);
        assert_eq!(peak_count(&averages_series(&[0.5])), 0);
    }

    #[test]
    fn stationary_blob_trajectory() {
        let t = centroid_trajectory(&series(vec![blob_at(4.0, 4.0); 10]));
        assert_eq!(t.x, [4.0; 6]);
        assert_eq!(t.y, [4.0; 6]);
        assert_eq!(t.path_length, 0.0);
    }

    #[test]
    fn uniform_linear_motion_resamples_evenly() {
        // 41 frames moving one column every 5 frames would not be uniform; use
        // a single-taxel point sweeping with linear sub-taxel interpolation
        let n = 11;
        let frames = (0..n)
            .map(|t| {
                let x = 8.0 * t as f64 / (n - 1) as f64;
                let lo = x.floor() as usize;
                let frac = x - lo as f64;
                let mut f = [[0.0; GRID]; GRID];
                f[4][lo] = 1.0 - frac;
                if frac > 0.0 {
                    f[4][lo + 1] = frac;
                }
                f
            })
            .collect();
        let t = centroid_trajectory(&series(frames));
        let expect = [0.0, 1.6, 3.2, 4.8, 6.4, 8.0];
        for (g, e) in t.x.iter().zip(expect) {
            assert!((g - e).abs() < 1e-12, "{:?}", t.x);
        }
        assert_eq!(t.y, [4.0; 6]);
        assert!((t.path_length - 8.0).abs() < 1e-12);
    }

    #[test]
    fn empty_frames_fall_back_to_centre_then_previous() {
        let mut frames = vec![[[0.0; GRID]; GRID]; 3];
        frames.push(blob_at(1.0, 2.0));
        frames.push([[0.0; GRID]; GRID]);
        let t = centroid_trajectory(&series(frames));
        assert_eq!(t.x[0], 4.0);
        assert_eq!(t.x[5], 1.0);
        assert_eq!(t.y[5], 2.0);
    }

    #[test]
    fn contact_area_counts() {
        assert_eq!(contact_area(&series(vec![[[0.05; GRID]; GRID]; 3]), 0.1), (0.0, 0.0));
        assert_eq!(contact_area(&series(vec![[[0.5; GRID]; GRID]; 3]), 0.1), (81.0, 81.0));
        let mut frames = vec![[[0.0; GRID]; GRID]; 5];
        for c in 0..5 {
            frames[2][0][c] = 0.9;
        }
        assert_eq!(contact_area(&series(frames), 0.1), (5.0, 1.0));
    }

    #[test]
    fn left_to_right_swipe_shifts_mass() {
        let frames: Vec<_> = (0..9).map(|c| blob_at(c as f64, 4.0)).collect();
        let f = extract_features(&series(frames)).unwrap();
        let tx = f.traj_x();
        assert!(tx.windows(2).all(|w| w[1] > w[0]), "{tx:?}");
        // first half of the frames concentrate on the left
        assert!(f.col_means()[1] > 0.0 && f.col_means()[7] > 0.0);
    }

    #[test]
    fn empty_series_rejected() {
        assert!(extract_features(&series(vec![])).is_err());
    }

    fn arb_series() -> impl Strategy<Value = GestureSeries> {
        proptest::collection::vec(proptest::collection::vec(0.001f64..1.0, GRID * GRID), 1..40).prop_map(|raw| {
            let frames = raw
                .into_iter()
                .map(|v| {
                    let mut f = [[0.0; GRID]; GRID];
                    for (k, p) in v.into_iter().enumerate() {
                        f[k / GRID][k % GRID] = p;
                    }
                    f
                })
                .collect();
            series(frames)
        })
    }

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-12 * x.abs().max(1.0))
    }

    proptest! {
        #[test]
        fn length_and_ordering_invariants(s in arb_series()) {
            let f = extract_features(&s).unwrap();
            prop_assert_eq!(f.0.len(), FEATURE_LEN);
            prop_assert!(f.max_p() >= f.mean_p() && f.mean_p() >= 0.0);
            prop_assert!(f.area_max() >= f.area_mean() && f.area_mean() >= 0.0);
        }

        #[test]
        fn scale_is_absorbed_by_normalization(s in arb_series(), c in 0.01f64..100.0) {
            let scaled = s.map_frames(|f| f.map(|row| row.map(|p| p * c)));
            let a = extract_features(&preprocess(&s, 3).unwrap()).unwrap();
            let b = extract_features(&preprocess(&scaled, 3).unwrap()).unwrap();
            prop_assert!(close(&a.0, &b.0));
        }

        #[test]
        fn reversal_invariants(s in arb_series()) {
            let a = extract_features(&s).unwrap();
            let b = extract_features(&s.reversed()).unwrap();
            for k in [0usize, 1, 2, 3, 4, AREA, AREA + 1, PATH] {
                prop_assert!(close(&[a.0[k]], &[b.0[k]]), "feature {}", FEATURE_NAMES[k]);
            }
            let rx: Vec<f64> = b.traj_x().iter().rev().copied().collect();
            let ry: Vec<f64> = b.traj_y().iter().rev().copied().collect();
            prop_assert!(close(a.traj_x(), &rx));
            prop_assert!(close(a.traj_y(), &ry));
        }

        #[test]
        fn transpose_swaps_axes(s in arb_series()) {
            let a = extract_features(&s).unwrap();
            let b = extract_features(&s.transposed()).unwrap();
            prop_assert!(close(a.row_means(), b.col_means()));
            prop_assert!(close(a.col_means(), b.row_means()));
            prop_assert!(close(a.traj_x(), b.traj_y()));
            prop_assert!(close(a.traj_y(), b.traj_x()));
        }
    }
}
