//! Weight mapping and program-and-verify deployment.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{AnalogTile, EPSILON_FLOOR_FRACTION, MAP_MARGIN};
use crate::device::{Polarity, NOMINAL_B_MAX, NOMINAL_B_MIN};
use crate::error::{check_dim, Error, Result};
use crate::matrix::Matrix;

/// Affine map `target = scale·weight + offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightMapping {
    pub scale: f64,
    pub offset: f64,
}

impl WeightMapping {
    pub fn to_target(&self, w: f64) -> f64 {
        self.scale * w + self.offset
    }

    pub fn to_weight(&self, t: f64) -> f64 {
        (t - self.offset) / self.scale
    }
}

/// Min-max map of `w` onto `[-MAP_MARGIN, MAP_MARGIN]`. A constant matrix
/// maps to all-zero targets (its value is carried by the offset).
pub fn map_weights_to_targets(w: &Matrix, tile: &AnalogTile) -> Result<(Matrix, WeightMapping)> {
    check_dim(tile.rows(), w.rows)?;
    check_dim(tile.cols(), w.cols)?;
    if !w.is_finite() {
        return Err(Error::InvalidArgument("weights must be finite".into()));
    }
    let (lo, hi) = w.min_max();
    let mapping = if hi > lo {
        let scale = 2.0 * MAP_MARGIN / (hi - lo);
        WeightMapping { scale, offset: -MAP_MARGIN - scale * lo }
    } else {
        WeightMapping { scale: 1.0, offset: -lo }
    };
    let targets = Matrix {
        rows: w.rows,
        cols: w.cols,
        data: w.data.iter().map(|&v| mapping.to_target(v)).collect(),
    };
    Ok((targets, mapping))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgramRecord {
    pub row: usize,
    pub col: usize,
    pub target: f64,
    pub achieved: f64,
    pub iterations: usize,
    pub converged: bool,
    /// False when the target lies outside the device's own bounds.
    pub attainable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgramSummary {
    pub devices: usize,
    pub converged_fraction: f64,
    pub mean_iterations: f64,
    /// Largest `|achieved − target| / G_T` over all devices, with `G_T` the
    /// target expressed as normalized conductance above the nominal minimum.
    pub max_abs_relative_error: f64,
    pub unattainable: usize,
    pub epsilon: f64,
    pub max_iter: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgramReport {
    pub records: Vec<ProgramRecord>,
    pub summary: ProgramSummary,
}

/// Acceptance window around a target state.
///
/// The relative tolerance applies to the target conductance, i.e. the target's
/// distance above the nominal lower bound, with an absolute floor of
/// `EPSILON_FLOOR_FRACTION` of the nominal range for targets near that bound.
pub fn program_tolerance(target: f64, epsilon: f64) -> f64 {
    let range = NOMINAL_B_MAX - NOMINAL_B_MIN;
    let conductance = (target - NOMINAL_B_MIN).max(0.0);
    (epsilon * conductance).max(EPSILON_FLOOR_FRACTION * range)
}

/// Program every device toward its target: read, stop if within tolerance,
/// otherwise apply one pulse toward the target, for at most `max_iter` pulses.
pub fn program_and_verify<R: Rng + ?Sized>(
    tile: &mut AnalogTile,
    targets: &Matrix,
    epsilon: f64,
    max_iter: usize,
    rng: &mut R,
) -> Result<ProgramReport> {
    check_dim(tile.rows(), targets.rows)?;
    check_dim(tile.cols(), targets.cols)?;
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
    }
    if max_iter == 0 {
        return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
    }
    if !targets.is_finite() {
        return Err(Error::InvalidArgument("targets must be finite".into()));
    }

    let cols = tile.cols();
    let params = tile.params().to_vec();
    let states = tile.states_mut();
    let mut records = Vec::with_capacity(states.len());
    for (k, (w, p)) in states.iter_mut().zip(&params).enumerate() {
        let target = targets.data[k];
        let tol = program_tolerance(target, epsilon);
        let mut iterations = 0;
        let converged = loop {
            if (*w - target).abs() <= tol {
                break true;
            }
            if iterations == max_iter {
                break false;
            }
            let polarity = if *w < target { Polarity::Up } else { Polarity::Down };
            *w = p.pulse(*w, polarity, rng);
            iterations += 1;
        };
        records.push(ProgramRecord {
            row: k / cols,
            col: k % cols,
            target,
            achieved: *w,
            iterations,
            converged,
            attainable: p.contains(target),
        });
    }

    let n = records.len() as f64;
    let summary = ProgramSummary {
        devices: records.len(),
        converged_fraction: records.iter().filter(|r| r.converged).count() as f64 / n,
        mean_iterations: records.iter().map(|r| r.iterations as f64).sum::<f64>() / n,
        max_abs_relative_error: records
            .iter()
            .map(|r| (r.achieved - r.target).abs() / (r.target - NOMINAL_B_MIN).abs().max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max),
        unattainable: records.iter().filter(|r| !r.attainable).count(),
        epsilon,
        max_iter,
    };
    Ok(ProgramReport { records, summary })
}
