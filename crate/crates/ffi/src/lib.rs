//! C ABI over `reram-core`.
//!
//! Every fallible call returns a [`ReramStatus`]; on failure a description is
//! kept per thread and can be copied out with [`reram_last_error`]. Tiles and
//! models are opaque heap handles released with their `_free` function.
//! Arrays are passed as pointer plus element count; matrices are row-major
//! `[rows, cols]`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use reram_core::crossbar::{program_and_verify, AnalogTile};
use reram_core::device::{self, DeviceDistribution, DeviceParams, FitOptions, PulseScheme, Trace};
use reram_core::io::{self, ModelFile};
use reram_core::nn::{Mlp, Standardizer};
use reram_core::rng::{stream, RngStream};
use reram_core::tactile::{self, Frame, GestureSeries, Speed, FEATURE_LEN, GRID};
use reram_core::{Error, Matrix};

/// Length of a feature vector.
pub const RERAM_FEATURE_LEN: usize = 38;
/// Taxels per frame (9×9).
pub const RERAM_FRAME_LEN: usize = 81;

const _: () = assert!(RERAM_FEATURE_LEN == FEATURE_LEN && RERAM_FRAME_LEN == GRID * GRID);

const FFI_RNG_STREAM: u64 = 0x4646;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReramStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    InvalidParams = 4,
    Degenerate = 5,
    InsufficientData = 6,
    Empty = 7,
    InvalidLabel = 8,
    Parse = 9,
    Io = 10,
    Panic = 11,
}

impl From<&Error> for ReramStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidParams(_) => ReramStatus::InvalidParams,
            Error::InvalidArgument(_) => ReramStatus::InvalidArgument,
            Error::DimensionMismatch { .. } => ReramStatus::DimensionMismatch,
            Error::Degenerate(_) => ReramStatus::Degenerate,
            Error::InsufficientData(_) => ReramStatus::InsufficientData,
            Error::Empty(_) => ReramStatus::Empty,
            Error::InvalidLabel(_) => ReramStatus::InvalidLabel,
            Error::Parse(_) | Error::Json(_) | Error::Csv(_) => ReramStatus::Parse,
            Error::Io(_) => ReramStatus::Io,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReramDeviceParams {
    pub gamma_up: f64,
    pub gamma_down: f64,
    pub b_min: f64,
    pub b_max: f64,
    pub sigma_c2c: f64,
}

impl From<ReramDeviceParams> for DeviceParams {
    fn from(p: ReramDeviceParams) -> Self {
        DeviceParams { gamma_up: p.gamma_up, gamma_down: p.gamma_down, b_min: p.b_min, b_max: p.b_max, sigma_c2c: p.sigma_c2c }
    }
}

impl From<DeviceParams> for ReramDeviceParams {
    fn from(p: DeviceParams) -> Self {
        ReramDeviceParams { gamma_up: p.gamma_up, gamma_down: p.gamma_down, b_min: p.b_min, b_max: p.b_max, sigma_c2c: p.sigma_c2c }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReramPulseScheme {
    pub batches: usize,
    pub up_per_batch: usize,
    pub down_per_batch: usize,
    pub alternating_per_batch: usize,
}

impl From<ReramPulseScheme> for PulseScheme {
    fn from(s: ReramPulseScheme) -> Self {
        PulseScheme {
            batches: s.batches,
            up_per_batch: s.up_per_batch,
            down_per_batch: s.down_per_batch,
            alternating_per_batch: s.alternating_per_batch,
        }
    }
}

/// Gaussian over `(n_states, asymmetry)` with the given moments.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReramDistribution {
    pub mean_n_states: f64,
    pub mean_asymmetry: f64,
    pub var_n_states: f64,
    pub cov_n_states_asymmetry: f64,
    pub var_asymmetry: f64,
    pub sigma_c2c: f64,
}

impl From<ReramDistribution> for DeviceDistribution {
    fn from(d: ReramDistribution) -> Self {
        DeviceDistribution {
            mean: [d.mean_n_states, d.mean_asymmetry],
            covariance: [[d.var_n_states, d.cov_n_states_asymmetry], [d.cov_n_states_asymmetry, d.var_asymmetry]],
            sigma_c2c: d.sigma_c2c,
            ..DeviceDistribution::default()
        }
    }
}

/// Crossbar tile with its own random stream for updates and programming.
pub struct ReramTile {
    tile: AnalogTile,
    rng: RngStream,
}

/// Trained network with its input standardizer.
pub struct ReramModel {
    net: Mlp,
    normalizer: Option<Standardizer>,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn guard(f: impl FnOnce() -> Result<(), ReramStatus>) -> ReramStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ReramStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic".into());
            ReramStatus::Panic
        }
    }
}

fn check<T>(r: reram_core::Result<T>) -> Result<T, ReramStatus> {
    r.map_err(|e| {
        let status = ReramStatus::from(&e);
        set_error(e.to_string());
        status
    })
}

fn fail<T>(status: ReramStatus, msg: impl Into<String>) -> Result<T, ReramStatus> {
    set_error(msg.into());
    Err(status)
}

unsafe fn slice<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], ReramStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return fail(ReramStatus::NullPointer, format!("`{name}` is null"));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, name: &str) -> Result<&'a mut [T], ReramStatus> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return fail(ReramStatus::NullPointer, format!("`{name}` is null"));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn deref<'a, T>(p: *const T, name: &str) -> Result<&'a T, ReramStatus> {
    p.as_ref().map_or_else(|| fail(ReramStatus::NullPointer, format!("`{name}` is null")), Ok)
}

unsafe fn deref_mut<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, ReramStatus> {
    p.as_mut().map_or_else(|| fail(ReramStatus::NullPointer, format!("`{name}` is null")), Ok)
}

fn expect_len(expected: usize, got: usize) -> Result<(), ReramStatus> {
    if expected == got {
        Ok(())
    } else {
        fail(ReramStatus::DimensionMismatch, format!("dimension mismatch: expected {expected}, got {got}"))
    }
}

/// Copy the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to `len`). Returns the buffer size needed for the full message.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn reram_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len() + 1
    })
}

/// Pulse scheme used for device characterization.
#[no_mangle]
pub extern "C" fn reram_default_scheme() -> ReramPulseScheme {
    let s = PulseScheme::default();
    ReramPulseScheme {
        batches: s.batches,
        up_per_batch: s.up_per_batch,
        down_per_batch: s.down_per_batch,
        alternating_per_batch: s.alternating_per_batch,
    }
}

/// Default device-to-device distribution.
#[no_mangle]
pub extern "C" fn reram_default_distribution() -> ReramDistribution {
    let d = DeviceDistribution::default();
    ReramDistribution {
        mean_n_states: d.mean[0],
        mean_asymmetry: d.mean[1],
        var_n_states: d.covariance[0][0],
        cov_n_states_asymmetry: d.covariance[0][1],
        var_asymmetry: d.covariance[1][1],
        sigma_c2c: d.sigma_c2c,
    }
}

/// Device on the nominal bounds with the given state count and asymmetry.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn reram_device_from_states(
    n_states: f64,
    asymmetry: f64,
    sigma_c2c: f64,
    out: *mut ReramDeviceParams,
) -> ReramStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        let p = check(DeviceParams::from_states_asymmetry(
            n_states,
            asymmetry,
            device::NOMINAL_B_MIN,
            device::NOMINAL_B_MAX,
            sigma_c2c,
        ))?;
        *out = p.into();
        Ok(())
    })
}

/// # Safety
/// `params` and `out` must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn reram_n_states(params: *const ReramDeviceParams, out: *mut f64) -> ReramStatus {
    guard(|| {
        let p: DeviceParams = (*deref(params, "params")?).into();
        check(p.validate())?;
        *deref_mut(out, "out")? = p.n_states();
        Ok(())
    })
}

/// # Safety
/// `params` and `out` must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn reram_asymmetry(params: *const ReramDeviceParams, out: *mut f64) -> ReramStatus {
    guard(|| {
        let p: DeviceParams = (*deref(params, "params")?).into();
        check(p.validate())?;
        *deref_mut(out, "out")? = p.asymmetry();
        Ok(())
    })
}

/// Number of samples in a trace for `scheme`: one per pulse plus the
/// initial state.
#[no_mangle]
pub extern "C" fn reram_trace_len(scheme: ReramPulseScheme) -> usize {
    PulseScheme::from(scheme).total_pulses() + 1
}

/// Simulate a pulse-train response into `out`, which must hold exactly
/// `reram_trace_len(scheme)` values.
///
/// # Safety
/// `params` must be null or valid; `out` must be null or point to `out_len`
/// writable doubles.
#[no_mangle]
pub unsafe extern "C" fn reram_simulate_trace(
    params: *const ReramDeviceParams,
    scheme: ReramPulseScheme,
    w0: f64,
    seed: u64,
    out: *mut f64,
    out_len: usize,
) -> ReramStatus {
    guard(|| {
        let p: DeviceParams = (*deref(params, "params")?).into();
        let scheme = PulseScheme::from(scheme);
        expect_len(scheme.total_pulses() + 1, out_len)?;
        let out = slice_mut(out, out_len, "out")?;
        let trace = check(device::simulate_trace(&p, &scheme, w0, &mut stream(seed, FFI_RNG_STREAM)))?;
        out.copy_from_slice(&trace.samples);
        Ok(())
    })
}

/// Fit Soft-Bounds parameters to a trace. `mad` receives the mean absolute
/// deviation of the fit and may be null.
///
/// # Safety
/// `trace` must point to `len` doubles; `out` must be valid; `mad` may be null.
#[no_mangle]
pub unsafe extern "C" fn reram_fit(
    trace: *const f64,
    len: usize,
    scheme: ReramPulseScheme,
    seed: u64,
    out: *mut ReramDeviceParams,
    mad: *mut f64,
) -> ReramStatus {
    guard(|| {
        let samples = slice(trace, len, "trace")?.to_vec();
        let out = deref_mut(out, "out")?;
        let opts = FitOptions { seed, ..FitOptions::default() };
        let report = check(device::fit_softbounds_with(&Trace { samples }, &scheme.into(), &opts))?;
        *out = report.params.into();
        if !mad.is_null() {
            *mad = report.mad;
        }
        Ok(())
    })
}

/// Tile of devices sampled from `dist`, all starting at `w = 0`.
///
/// # Safety
/// `dist` must be null or valid; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn reram_tile_new(
    rows: usize,
    cols: usize,
    dist: *const ReramDistribution,
    seed: u64,
    out: *mut *mut ReramTile,
) -> ReramStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        *out = ptr::null_mut();
        let dist = DeviceDistribution::from(*deref(dist, "dist")?);
        let mut rng = stream(seed, FFI_RNG_STREAM);
        let tile = check(AnalogTile::sampled(rows, cols, &dist, &mut rng, FFI_RNG_STREAM))?;
        *out = Box::into_raw(Box::new(ReramTile { tile, rng }));
        Ok(())
    })
}

/// Tile of identical devices, all starting at `w = 0`.
///
/// # Safety
/// `params` must be null or valid; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn reram_tile_new_uniform(
    rows: usize,
    cols: usize,
    params: *const ReramDeviceParams,
    seed: u64,
    out: *mut *mut ReramTile,
) -> ReramStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        *out = ptr::null_mut();
        let p = DeviceParams::from(*deref(params, "params")?);
        let tile = check(AnalogTile::uniform(rows, cols, p, FFI_RNG_STREAM))?;
        *out = Box::into_raw(Box::new(ReramTile { tile, rng: stream(seed, FFI_RNG_STREAM) }));
        Ok(())
    })
}

/// # Safety
/// `tile` must be null or a handle from `reram_tile_new*` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn reram_tile_free(tile: *mut ReramTile) {
    if !tile.is_null() {
        drop(Box::from_raw(tile));
    }
}

/// # Safety
/// `tile` must be a live handle; `rows`/`cols` may be null.
#[no_mangle]
pub unsafe extern "C" fn reram_tile_shape(tile: *const ReramTile, rows: *mut usize, cols: *mut usize) -> ReramStatus {
    guard(|| {
        let t = &deref(tile, "tile")?.tile;
        if !rows.is_null() {
            *rows = t.rows();
        }
        if !cols.is_null() {
            *cols = t.cols();
        }
        Ok(())
    })
}

/// `y = Wᵀx` with `x` of length `rows` and `y` of length `cols`.
///
/// # Safety
/// `tile` must be a live handle; buffers must hold the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn reram_tile_forward(
    tile: *const ReramTile,
    x: *const f64,
    x_len: usize,
    y: *mut f64,
    y_len: usize,
) -> ReramStatus {
    guard(|| {
        let t = &deref(tile, "tile")?.tile;
        expect_len(t.rows(), x_len)?;
        expect_len(t.cols(), y_len)?;
        let r = check(t.forward_mac(slice(x, x_len, "x")?))?;
        slice_mut(y, y_len, "y")?.copy_from_slice(&r);
        Ok(())
    })
}

/// `z = W·d` with `d` of length `cols` and `z` of length `rows`.
///
/// # Safety
/// `tile` must be a live handle; buffers must hold the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn reram_tile_backward(
    tile: *const ReramTile,
    d: *const f64,
    d_len: usize,
    z: *mut f64,
    z_len: usize,
) -> ReramStatus {
    guard(|| {
        let t = &deref(tile, "tile")?.tile;
        expect_len(t.cols(), d_len)?;
        expect_len(t.rows(), z_len)?;
        let r = check(t.backward_mac(slice(d, d_len, "d")?))?;
        slice_mut(z, z_len, "z")?.copy_from_slice(&r);
        Ok(())
    })
}

/// Stochastic pulse-coincidence update along `−lr·x·dᵀ`. `pulses` receives
/// the number of applied pulses and may be null.
///
/// # Safety
/// `tile` must be a live handle; buffers must hold the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn reram_tile_update(
    tile: *mut ReramTile,
    x: *const f64,
    x_len: usize,
    d: *const f64,
    d_len: usize,
    lr: f64,
    pulses: *mut usize,
) -> ReramStatus {
    guard(|| {
        let h = deref_mut(tile, "tile")?;
        let x = slice(x, x_len, "x")?;
        let d = slice(d, d_len, "d")?;
        let stats = check(h.tile.stochastic_update(x, d, lr, &mut h.rng))?;
        if !pulses.is_null() {
            *pulses = stats.total();
        }
        Ok(())
    })
}

/// Copy the current weights (device states), row-major.
///
/// # Safety
/// `tile` must be a live handle; `out` must hold `rows·cols` doubles.
#[no_mangle]
pub unsafe extern "C" fn reram_tile_read(tile: *const ReramTile, out: *mut f64, len: usize) -> ReramStatus {
    guard(|| {
        let t = &deref(tile, "tile")?.tile;
        expect_len(t.rows() * t.cols(), len)?;
        slice_mut(out, len, "out")?.copy_from_slice(&t.read_weights().data);
        Ok(())
    })
}

/// Program-and-verify every device toward `targets` (row-major). The
/// fraction of converged devices is written to `converged` (may be null).
///
/// # Safety
/// `tile` must be a live handle; `targets` must hold `rows·cols` doubles.
#[no_mangle]
pub unsafe extern "C" fn reram_tile_program(
    tile: *mut ReramTile,
    targets: *const f64,
    len: usize,
    epsilon: f64,
    max_iter: usize,
    converged: *mut f64,
) -> ReramStatus {
    guard(|| {
        let h = deref_mut(tile, "tile")?;
        let (rows, cols) = (h.tile.rows(), h.tile.cols());
        expect_len(rows * cols, len)?;
        let targets = check(Matrix::from_vec(rows, cols, slice(targets, len, "targets")?.to_vec()))?;
        let report = check(program_and_verify(&mut h.tile, &targets, epsilon, max_iter, &mut h.rng))?;
        if !converged.is_null() {
            *converged = report.summary.converged_fraction;
        }
        Ok(())
    })
}

/// Extract the 38 features of a series of `n_frames` 9×9 frames (each
/// `RERAM_FRAME_LEN` doubles, row-major). With `window > 0` the series is
/// smoothed and normalized first.
///
/// # Safety
/// `frames` must hold `n_frames·RERAM_FRAME_LEN` doubles; `out` must hold
/// `RERAM_FEATURE_LEN` doubles.
#[no_mangle]
pub unsafe extern "C" fn reram_extract_features(
    frames: *const f64,
    n_frames: usize,
    window: usize,
    out: *mut f64,
    out_len: usize,
) -> ReramStatus {
    guard(|| {
        expect_len(FEATURE_LEN, out_len)?;
        let raw = slice(frames, n_frames * RERAM_FRAME_LEN, "frames")?;
        let frames: Vec<Frame> = raw
            .chunks_exact(RERAM_FRAME_LEN)
            .map(|c| std::array::from_fn(|r| std::array::from_fn(|k| c[r * GRID + k])))
            .collect();
        let mut series = check(GestureSeries::new(frames, 1, Speed::Regular))?;
        if window > 0 {
            series = check(tactile::preprocess(&series, window))?;
        }
        let f = check(tactile::extract_features(&series))?;
        slice_mut(out, out_len, "out")?.copy_from_slice(f.as_slice());
        Ok(())
    })
}

/// Load a model JSON written by `reram-sim train`.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn reram_model_load(path: *const c_char, out: *mut *mut ReramModel) -> ReramStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        *out = ptr::null_mut();
        if path.is_null() {
            return fail(ReramStatus::NullPointer, "`path` is null");
        }
        let Ok(path) = CStr::from_ptr(path).to_str() else {
            return fail(ReramStatus::InvalidArgument, "path is not valid UTF-8");
        };
        let file: ModelFile = check(io::read_json(Path::new(path)))?;
        let net = check(file.to_mlp())?;
        *out = Box::into_raw(Box::new(ReramModel { net, normalizer: file.normalizer }));
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle from `reram_model_load` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn reram_model_free(model: *mut ReramModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `model` must be a live handle; `inputs`/`classes` may be null.
#[no_mangle]
pub unsafe extern "C" fn reram_model_shape(
    model: *const ReramModel,
    inputs: *mut usize,
    classes: *mut usize,
) -> ReramStatus {
    guard(|| {
        let spec = &deref(model, "model")?.net.spec;
        if !inputs.is_null() {
            *inputs = spec.input_dim();
        }
        if !classes.is_null() {
            *classes = spec.output_dim();
        }
        Ok(())
    })
}

/// Classify one raw feature vector. `class_out` receives the 1-based label;
/// `logits` (may be null) receives the output scores.
///
/// # Safety
/// `model` must be a live handle; `features` must hold the model's input
/// count; `logits` must be null or hold the class count.
#[no_mangle]
pub unsafe extern "C" fn reram_model_predict(
    model: *const ReramModel,
    features: *const f64,
    len: usize,
    class_out: *mut u32,
    logits: *mut f64,
    logits_len: usize,
) -> ReramStatus {
    guard(|| {
        let m = deref(model, "model")?;
        let class_out = deref_mut(class_out, "class_out")?;
        expect_len(m.net.spec.input_dim(), len)?;
        let x = slice(features, len, "features")?;
        let x = match &m.normalizer {
            Some(n) => n.apply_row(x),
            None => x.to_vec(),
        };
        let z = check(m.net.forward(&x))?;
        if !logits.is_null() {
            expect_len(z.len(), logits_len)?;
            slice_mut(logits, logits_len, "logits")?.copy_from_slice(&z);
        }
        let best = z
            .iter()
            .enumerate()
            .fold(0, |b, (k, v)| if *v > z[b] { k } else { b });
        *class_out = best as u32 + 1;
        Ok(())
    })
}
