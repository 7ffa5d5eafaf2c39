use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const GRID: usize = 9;

/// Running-average window applied before feature extraction.
pub const DEFAULT_SMOOTHING_WINDOW: usize = 3;

/// One 9×9 taxel pressure frame, indexed `[row][col]`.
pub type Frame = [[f64; GRID]; GRID];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Speed {
    Slow,
    Regular,
    Fast,
}

impl Speed {
    pub const ALL: [Speed; 3] = [Speed::Slow, Speed::Regular, Speed::Fast];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GestureSeries {
    pub frames: Vec<Frame>,
    pub label: u8,
    pub speed: Speed,
}

impl GestureSeries {
    pub fn new(frames: Vec<Frame>, label: u8, speed: Speed) -> Result<Self> {
        let s = Self { frames, label, speed };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.frames.is_empty() {
            return Err(Error::Empty("gesture has no frames".into()));
        }
        if !(1..=10).contains(&self.label) {
            return Err(Error::InvalidLabel(self.label as i64));
        }
        let ok = self.frames.iter().flatten().flatten().all(|&p| p.is_finite() && p >= 0.0);
        if !ok {
            return Err(Error::InvalidArgument("pressures must be finite and non-negative".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn map_frames(&self, mut f: impl FnMut(&Frame) -> Frame) -> Self {
        Self { frames: self.frames.iter().map(&mut f).collect(), ..self.clone() }
    }

    pub fn transposed(&self) -> Self {
        self.map_frames(|fr| {
            let mut t = [[0.0; GRID]; GRID];
            for (r, row) in fr.iter().enumerate() {
                for (c, &v) in row.iter().enumerate() {
                    t[c][r] = v;
                }
            }
            t
        })
    }

    pub fn reversed(&self) -> Self {
        let mut s = self.clone();
        s.frames.reverse();
        s
    }
}

/// Centered running average over time per taxel (window truncated at the
/// ends), followed by per-gesture min-max normalization to `[0, 1]`.
/// A constant series normalizes to all zeros.
pub fn preprocess(series: &GestureSeries, window: usize) -> Result<GestureSeries> {
    if series.frames.is_empty() {
        return Err(Error::Empty("gesture has no frames".into()));
    }
    if window == 0 {
        return Err(Error::InvalidArgument("smoothing window must be at least 1".into()));
    }
    let n = series.frames.len();
    let first = series.frames[0][0][0];
    if series.frames.iter().flatten().flatten().all(|&v| v == first) {
        return Ok(GestureSeries { frames: vec![[[0.0; GRID]; GRID]; n], ..series.clone() });
    }
    let back = (window - 1) / 2;
    let ahead = window / 2;
    let mut smoothed = vec![[[0.0; GRID]; GRID]; n];
    if window == 1 {
        smoothed.clone_from(&series.frames);
    } else {
        for (t, out) in smoothed.iter_mut().enumerate() {
            let lo = t.saturating_sub(back);
            let hi = (t + ahead).min(n - 1);
            let count = (hi - lo + 1) as f64;
            for r in 0..GRID {
                for c in 0..GRID {
                    let sum: f64 = series.frames[lo..=hi].iter().map(|f| f[r][c]).sum();
                    out[r][c] = sum / count;
                }
            }
        }
    }

    let (lo, hi) = smoothed
        .iter()
        .flatten()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let span = hi - lo;
    for v in smoothed.iter_mut().flatten().flatten() {
        *v = if span > 0.0 { (*v - lo) / span } else { 0.0 };
    }
    Ok(GestureSeries { frames: smoothed, ..series.clone() })
}

/// The five merged gesture classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GestureClass {
    Tap = 1,
    VerticalSwipe = 2,
    HorizontalSwipe = 3,
    Circular = 4,
    TwoFingerSwipe = 5,
}

impl GestureClass {
    pub fn id(self) -> u8 {
        self as u8
    }
}

/// Merge gestures that differ only in direction:
/// {1,2}→Tap, {3,4}→VerticalSwipe, {5,6}→HorizontalSwipe, {7,8}→Circular,
/// {9,10}→TwoFingerSwipe.
pub fn merge_labels_10_to_5(label_10: u8) -> Result<GestureClass> {
    Ok(match label_10 {
        1 | 2 => GestureClass::Tap,
        3 | 4 => GestureClass::VerticalSwipe,
        5 | 6 => GestureClass::HorizontalSwipe,
        7 | 8 => GestureClass::Circular,
        9 | 10 => GestureClass::TwoFingerSwipe,
        other => return Err(Error::InvalidLabel(other as i64)),
    })
}
