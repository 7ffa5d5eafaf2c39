use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::device::{sample_device, DeviceDistribution, DeviceParams, Polarity};
use crate::error::{check_dim, Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct AnalogTile {
    rows: usize,
    cols: usize,
    params: Vec<DeviceParams>,
    states: Vec<f64>,
    stream_id: u64,
    /// Running maxima of |x| and |d| seen by `stochastic_update`.
    x_scale: f64,
    d_scale: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct UpdateStats {
    pub pulses_up: usize,
    pub pulses_down: usize,
}

impl UpdateStats {
    pub fn total(&self) -> usize {
        self.pulses_up + self.pulses_down
    }
}

/// Serialized tile state, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TileSnapshot {
    pub rows: usize,
    pub cols: usize,
    pub params: Vec<DeviceParams>,
    pub states: Vec<f64>,
    #[serde(default)]
    pub stream_id: u64,
}

impl AnalogTile {
    /// Tile of identical devices, all at `w = 0`.
    pub fn uniform(rows: usize, cols: usize, params: DeviceParams, stream_id: u64) -> Result<Self> {
        params.validate()?;
        Self::from_params(rows, cols, vec![params; rows * cols], stream_id)
    }

    /// Tile whose devices are sampled independently from `dist`, all at `w = 0`.
    pub fn sampled<R: Rng + ?Sized>(
        rows: usize,
        cols: usize,
        dist: &DeviceDistribution,
        rng: &mut R,
        stream_id: u64,
    ) -> Result<Self> {
        dist.validate()?;
        let params = (0..rows * cols).map(|_| sample_device(dist, rng)).collect();
        Self::from_params(rows, cols, params, stream_id)
    }

    pub fn from_params(rows: usize, cols: usize, params: Vec<DeviceParams>, stream_id: u64) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument("tile dimensions must be positive".into()));
        }
        check_dim(rows * cols, params.len())?;
        for p in &params {
            p.validate()?;
        }
        let states = params.iter().map(|p| 0.0f64.clamp(p.b_min, p.b_max)).collect();
        Ok(Self { rows, cols, params, states, stream_id, x_scale: 0.0, d_scale: 0.0 })
    }

    pub fn from_snapshot(s: TileSnapshot) -> Result<Self> {
        let mut tile = Self::from_params(s.rows, s.cols, s.params, s.stream_id)?;
        check_dim(tile.states.len(), s.states.len())?;
        for (k, (&w, p)) in s.states.iter().zip(&tile.params).enumerate() {
            if !p.contains(w) {
                return Err(Error::InvalidArgument(format!("state {w} of device {k} is out of bounds")));
            }
        }
        tile.states = s.states;
        Ok(tile)
    }

    pub fn snapshot(&self) -> TileSnapshot {
        TileSnapshot {
            rows: self.rows,
            cols: self.cols,
            params: self.params.clone(),
            states: self.states.clone(),
            stream_id: self.stream_id,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn device(&self, i: usize, j: usize) -> &DeviceParams {
        &self.params[i * self.cols + j]
    }

    pub fn state(&self, i: usize, j: usize) -> f64 {
        self.states[i * self.cols + j]
    }

    pub fn params(&self) -> &[DeviceParams] {
        &self.params
    }

    /// Write states directly (clamped to each device's bounds), bypassing the
    /// pulse model. Used for initialization, not for deployment.
    pub fn set_weights(&mut self, w: &Matrix) -> Result<()> {
        check_dim(self.rows, w.rows)?;
        check_dim(self.cols, w.cols)?;
        for ((s, p), &v) in self.states.iter_mut().zip(&self.params).zip(&w.data) {
            *s = v.clamp(p.b_min, p.b_max);
        }
        Ok(())
    }

    /// Set every device to its own symmetry point.
    pub fn reset_to_symmetry_points(&mut self) {
        for (s, p) in self.states.iter_mut().zip(&self.params) {
            *s = p.symmetry_point();
        }
    }

    pub fn symmetry_points(&self) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.params.iter().map(DeviceParams::symmetry_point).collect(),
        }
    }

    pub fn read_weights(&self) -> Matrix {
        Matrix { rows: self.rows, cols: self.cols, data: self.states.clone() }
    }

    /// `y[j] = Σ_i w[i][j]·x[i]`
    pub fn forward_mac(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.rows, x.len())?;
        let mut y = vec![0.0; self.cols];
        for (row, &xi) in self.states.chunks_exact(self.cols).zip(x) {
            for (yj, &w) in y.iter_mut().zip(row) {
                *yj += w * xi;
            }
        }
        Ok(y)
    }

    /// `z[i] = Σ_j w[i][j]·d[j]`
    pub fn backward_mac(&self, d: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.cols, d.len())?;
        Ok(self
            .states
            .chunks_exact(self.cols)
            .map(|row| row.iter().zip(d).fold(0.0, |acc, (w, v)| acc + w * v))
            .collect())
    }

    /// Apply one pulse to device `(i, j)`.
    pub fn pulse<R: Rng + ?Sized>(&mut self, i: usize, j: usize, polarity: Polarity, rng: &mut R) {
        let k = i * self.cols + j;
        self.states[k] = self.params[k].pulse(self.states[k], polarity, rng);
    }

    /// Stochastic pulse-coincidence outer-product update moving the weights
    /// along `−lr·x·dᵀ`.
    ///
    /// Row `i` fires with probability `p_i = min(1, √lr·|x_i|/s_x)` and column
    /// `j` with `q_j = min(1, √lr·|d_j|/s_d)`, where `s_x`, `s_d` are this
    /// tile's running maxima of `|x|`, `|d|`. A device receives one pulse when
    /// both of its lines fire, with polarity `−sign(x_i·d_j)`.
    pub fn stochastic_update<R: Rng + ?Sized>(
        &mut self,
        x: &[f64],
        d: &[f64],
        lr: f64,
        rng: &mut R,
    ) -> Result<UpdateStats> {
        check_dim(self.rows, x.len())?;
        check_dim(self.cols, d.len())?;
        if !(lr >= 0.0 && lr.is_finite()) {
            return Err(Error::InvalidArgument(format!("learning rate must be finite and non-negative, got {lr}")));
        }
        if x.iter().chain(d).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite update vector".into()));
        }
        let mut stats = UpdateStats::default();
        if lr == 0.0 {
            return Ok(stats);
        }
        self.x_scale = x.iter().fold(self.x_scale, |m, v| m.max(v.abs()));
        self.d_scale = d.iter().fold(self.d_scale, |m, v| m.max(v.abs()));
        if self.x_scale == 0.0 || self.d_scale == 0.0 {
            return Ok(stats);
        }
        let amp = lr.sqrt();
        let rows_fired: Vec<usize> = x
            .iter()
            .enumerate()
            .filter(|&(_, &xi)| xi != 0.0 && rng.random::<f64>() < (amp * xi.abs() / self.x_scale).min(1.0))
            .map(|(i, _)| i)
            .collect();
        let cols_fired: Vec<usize> = d
            .iter()
            .enumerate()
            .filter(|&(_, &dj)| dj != 0.0 && rng.random::<f64>() < (amp * dj.abs() / self.d_scale).min(1.0))
            .map(|(j, _)| j)
            .collect();
        for &i in &rows_fired {
            for &j in &cols_fired {
                let polarity = if x[i] * d[j] > 0.0 { Polarity::Down } else { Polarity::Up };
                self.pulse(i, j, polarity, rng);
                match polarity {
                    Polarity::Up => stats.pulses_up += 1,
                    Polarity::Down => stats.pulses_down += 1,
                }
            }
        }
        Ok(stats)
    }

    pub fn update_scales(&self) -> (f64, f64) {
        (self.x_scale, self.d_scale)
    }

    pub(crate) fn states_mut(&mut self) -> &mut [f64] {
        &mut self.states
    }
}
