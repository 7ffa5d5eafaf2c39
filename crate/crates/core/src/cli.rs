//! `reram-sim` command line front end.
//!
//! Every command takes an optional `--config` JSON file whose keys mirror the
//! command's flags (snake_case). Flags override config values, which override
//! the built-in defaults. Stochastic commands refuse to run without a seed.
//!
//! JSON outputs carry a `config_hash` field; CSV and JSONL outputs get a
//! `<file>.meta.json` sidecar with the effective config and its hash.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::crossbar::{AnalogTile, ProgramSummary, TileSnapshot, WeightMapping};
use crate::device::{
    build_distribution, fit_softbounds_with, simulate_trace, DeviceDistribution, DeviceParams, FitOptions, FitReport,
    PulseScheme,
};
use crate::error::{Error, Result};
use crate::gesturegen::{generate_dataset, GenSpec, LabelSet, Manifest};
use crate::io::{self, Meta, ModelFile};
use crate::nn::{
    deploy, evaluate, hardware_aware_finetune, train_sgd_fp, train_ttv2, DeployedLayer, DeployedNetwork, HwaConfig,
    Mlp, NetworkSpec, Standardizer, TrainConfig, TrainMode,
};
use crate::pipeline::{featurize, prepare, to_dataset, TEST_FRACTION};
use crate::rng::stream;
use crate::tactile::DEFAULT_SMOOTHING_WINDOW;

const INIT_STREAM: u64 = 0x4E49;
const HWA_STREAM: u64 = 0x4857;
const TRACE_STREAM: u64 = 0x5452;

#[derive(Debug, Parser)]
#[command(name = "reram-sim", version, about = "Analog ReRAM crossbar simulator for tactile gesture recognition")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic gesture dataset (JSON Lines plus manifest).
    GenData(GenDataArgs),
    /// Preprocess gestures and write the 38-feature CSV.
    ExtractFeatures(ExtractArgs),
    /// Fit Soft-Bounds parameters to trace CSVs and estimate the population.
    FitDevice(FitArgs),
    /// Simulate the pulse-train response of one device.
    SimulateTrace(TraceArgs),
    /// Train a network with FP SGD or Tiki-Taka v2.
    Train(TrainArgs),
    /// Program a trained model onto sampled crossbar tiles.
    Program(ProgramArgs),
    /// Compare FP and programmed-analog accuracy on a feature set.
    Infer(InferArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Fp,
    Ttv2,
}

fn load_config<C: DeserializeOwned + Default>(path: Option<&Path>) -> Result<C> {
    match path {
        Some(p) => io::read_json(p),
        None => Ok(C::default()),
    }
}

fn set<T>(slot: &mut T, flag: Option<T>) {
    if let Some(v) = flag {
        *slot = v;
    }
}

fn set_opt<T>(slot: &mut Option<T>, flag: Option<T>) {
    if flag.is_some() {
        *slot = flag;
    }
}

fn require<T: Clone>(value: &Option<T>, name: &str) -> Result<T> {
    value
        .clone()
        .ok_or_else(|| Error::InvalidArgument(format!("missing required `{name}` (flag or config key)")))
}

fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::Io(std::io::Error::new(std::io::ErrorKind::NotFound, format!("{}: no such file", path.display()))))
    }
}

fn meta_for<C: Serialize>(command: &str, config: &C) -> Result<Meta> {
    Ok(Meta { command: command.into(), config: serde_json::to_value(config)?, config_hash: io::config_hash(config)? })
}

#[derive(Serialize)]
struct Hashed<'a, T: Serialize> {
    config_hash: &'a str,
    #[serde(flatten)]
    body: &'a T,
}

fn write_hashed<T: Serialize>(path: &Path, hash: &str, body: &T) -> Result<()> {
    io::write_json(path, &Hashed { config_hash: hash, body })
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

/// Device distribution file: a plain distribution, optionally with the hash
/// of the command that produced it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistributionFile {
    #[serde(flatten)]
    pub distribution: DeviceDistribution,
    #[serde(default)]
    pub config_hash: String,
}

fn load_distribution(path: Option<&Path>) -> Result<DeviceDistribution> {
    match path {
        Some(p) => {
            let d = io::read_json::<DistributionFile>(p)?.distribution;
            d.validate()?;
            Ok(d)
        }
        None => Ok(DeviceDistribution::default()),
    }
}

// ---------------------------------------------------------------- gen-data

#[derive(Debug, Args)]
pub struct GenDataArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Label set, 5 or 10.
    #[arg(long)]
    pub labels: Option<u8>,
    /// Gestures per 10-category template.
    #[arg(long)]
    pub per_label: Option<usize>,
    #[arg(long)]
    pub no_augment: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenDataConfig {
    pub spec: GenSpec,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

fn cmd_gen_data(a: GenDataArgs) -> Result<()> {
    let mut c: GenDataConfig = load_config(a.config.as_deref())?;
    if let Some(l) = a.labels {
        c.spec.labels = LabelSet::try_from(l).map_err(Error::InvalidArgument)?;
    }
    set(&mut c.spec.samples_per_label, a.per_label);
    if a.no_augment {
        c.spec.augment = false;
    }
    set_opt(&mut c.seed, a.seed);
    set_opt(&mut c.out, a.out);
    c.spec.seed = require(&c.seed, "seed")?;
    let out = require(&c.out, "out")?;

    let (records, manifest) = generate_dataset(&c.spec)?;
    let meta = meta_for("gen-data", &c)?;
    io::write_gestures_jsonl(&out, &records)?;
    io::write_meta(&out, &meta)?;
    write_hashed::<Manifest>(&manifest_path(&out), &meta.config_hash, &manifest)?;
    info!("wrote {} gestures to {}", records.len(), out.display());
    Ok(())
}

// ---------------------------------------------------------- extract-features

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Gesture JSON Lines file.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Moving-average window used by preprocessing.
    #[arg(long)]
    pub window: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractConfig {
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub window: usize,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        Self { input: None, out: None, window: DEFAULT_SMOOTHING_WINDOW }
    }
}

fn cmd_extract(a: ExtractArgs) -> Result<()> {
    let mut c: ExtractConfig = load_config(a.config.as_deref())?;
    set_opt(&mut c.input, a.input);
    set_opt(&mut c.out, a.out);
    set(&mut c.window, a.window);
    let input = require(&c.input, "input")?;
    let out = require(&c.out, "out")?;
    require_file(&input)?;

    let records = io::read_gestures_jsonl(&input)?;
    if records.is_empty() {
        return Err(Error::Empty(format!("{} holds no gestures", input.display())));
    }
    let rows = featurize(&records, c.window)?;
    io::write_features_csv(&out, &rows)?;
    io::write_meta(&out, &meta_for("extract-features", &c)?)?;
    info!("wrote {} feature rows to {}", rows.len(), out.display());
    Ok(())
}

// -------------------------------------------------------------- fit-device

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Trace CSV files, one per device.
    pub traces: Vec<PathBuf>,
    /// Output file for the fitted parameter records.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output file for the estimated device distribution.
    #[arg(long)]
    pub distribution: Option<PathBuf>,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub traces: Vec<PathBuf>,
    pub out: Option<PathBuf>,
    pub distribution: Option<PathBuf>,
    pub scheme: PulseScheme,
    pub restarts: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FittedDevice {
    pub trace: PathBuf,
    pub params: DeviceParams,
    pub n_states: f64,
    pub asymmetry: f64,
    pub mad: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitOutput {
    pub devices: Vec<FittedDevice>,
}

fn cmd_fit(a: FitArgs) -> Result<()> {
    let mut c: FitConfig = load_config(a.config.as_deref())?;
    if !a.traces.is_empty() {
        c.traces = a.traces;
    }
    set_opt(&mut c.out, a.out);
    set_opt(&mut c.distribution, a.distribution);
    set_opt(&mut c.restarts, a.restarts);
    set_opt(&mut c.seed, a.seed);
    let seed = require(&c.seed, "seed")?;
    let out = require(&c.out, "out")?;
    if c.traces.is_empty() {
        return Err(Error::Empty("no trace files given".into()));
    }
    for t in &c.traces {
        require_file(t)?;
    }

    let mut opts = FitOptions { seed, ..FitOptions::default() };
    set(&mut opts.restarts, c.restarts);
    let mut devices = Vec::with_capacity(c.traces.len());
    for path in &c.traces {
        let trace = io::read_trace_csv(path)?;
        let FitReport { params, mad, .. } = fit_softbounds_with(&trace, &c.scheme, &opts)?;
        info!("{}: n_states {:.2} asymmetry {:.3} mad {:.2e}", path.display(), params.n_states(), params.asymmetry(), mad);
        devices.push(FittedDevice {
            trace: path.clone(),
            params,
            n_states: params.n_states(),
            asymmetry: params.asymmetry(),
            mad,
        });
    }
    let hash = io::config_hash(&c)?;
    write_hashed(&out, &hash, &FitOutput { devices: devices.clone() })?;
    if let Some(dist_path) = &c.distribution {
        let population: Vec<DeviceParams> = devices.iter().map(|d| d.params).collect();
        let distribution = build_distribution(&population)?;
        io::write_json(dist_path, &DistributionFile { distribution, config_hash: hash })?;
    }
    Ok(())
}

// ---------------------------------------------------------- simulate-trace

#[derive(Debug, Args)]
pub struct TraceArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n_states: Option<f64>,
    #[arg(long)]
    pub asymmetry: Option<f64>,
    /// Relative cycle-to-cycle step noise.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Initial state; defaults to the lower bound.
    #[arg(long)]
    pub w0: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TraceConfig {
    /// Explicit device parameters; when set, `n_states`/`asymmetry`/`sigma`
    /// are ignored.
    pub params: Option<DeviceParams>,
    pub n_states: f64,
    pub asymmetry: f64,
    pub sigma: f64,
    pub w0: Option<f64>,
    pub scheme: PulseScheme,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl Default for TraceConfig {
    fn default() -> Self {
        let d = DeviceDistribution::default();
        Self {
            params: None,
            n_states: d.mean[0],
            asymmetry: d.mean[1],
            sigma: d.sigma_c2c,
            w0: None,
            scheme: PulseScheme::default(),
            seed: None,
            out: None,
        }
    }
}

fn cmd_trace(a: TraceArgs) -> Result<()> {
    let mut c: TraceConfig = load_config(a.config.as_deref())?;
    if a.n_states.is_some() || a.asymmetry.is_some() || a.sigma.is_some() {
        c.params = None;
    }
    set(&mut c.n_states, a.n_states);
    set(&mut c.asymmetry, a.asymmetry);
    set(&mut c.sigma, a.sigma);
    set_opt(&mut c.w0, a.w0);
    set_opt(&mut c.seed, a.seed);
    set_opt(&mut c.out, a.out);
    let seed = require(&c.seed, "seed")?;
    let out = require(&c.out, "out")?;

    let params = match c.params {
        Some(p) => p,
        None => DeviceParams::from_states_asymmetry(
            c.n_states,
            c.asymmetry,
            crate::device::NOMINAL_B_MIN,
            crate::device::NOMINAL_B_MAX,
            c.sigma,
        )?,
    };
    let w0 = c.w0.unwrap_or(params.b_min);
    let trace = simulate_trace(&params, &c.scheme, w0, &mut stream(seed, TRACE_STREAM))?;
    io::write_trace_csv(&out, &trace)?;
    io::write_meta(&out, &meta_for("simulate-trace", &c)?)?;
    info!("wrote {} samples to {}", trace.len(), out.display());
    Ok(())
}

// ------------------------------------------------------------------- train

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Feature CSV from `extract-features`.
    #[arg(long)]
    pub features: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub fast_lr: Option<f64>,
    #[arg(long)]
    pub transfer_every: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Hidden layer width; 0 trains a single fully connected layer.
    #[arg(long)]
    pub hidden: Option<usize>,
    /// Number of classes (5 or 10); inferred from the labels when omitted.
    #[arg(long)]
    pub labels: Option<usize>,
    #[arg(long)]
    pub test_fraction: Option<f64>,
    /// Run hardware-aware noise-injection tuning after FP training.
    #[arg(long)]
    pub hwa: bool,
    #[arg(long)]
    pub hwa_epochs: Option<usize>,
    #[arg(long)]
    pub hwa_noise: Option<f64>,
    #[arg(long)]
    pub hwa_lr: Option<f64>,
    /// Device distribution JSON used for TTv2 tiles.
    #[arg(long)]
    pub devices: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Model JSON output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-epoch history CSV output.
    #[arg(long)]
    pub history: Option<PathBuf>,
    /// Optional CSV of the held-out split (raw features).
    #[arg(long)]
    pub test_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainCliConfig {
    pub features: Option<PathBuf>,
    pub mode: ModeArg,
    /// Defaults to 0.05 for FP and 0.1 for TTv2.
    pub lr: Option<f64>,
    pub fast_lr: f64,
    pub transfer_every: usize,
    pub epochs: usize,
    pub hidden: usize,
    pub labels: Option<usize>,
    pub test_fraction: f64,
    pub hwa: Option<HwaConfig>,
    pub devices: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub history: Option<PathBuf>,
    pub test_out: Option<PathBuf>,
}

impl Default for TrainCliConfig {
    fn default() -> Self {
        let tt = TrainConfig::ttv2(0);
        Self {
            features: None,
            mode: ModeArg::Fp,
            lr: None,
            fast_lr: tt.fast_lr,
            transfer_every: tt.transfer_every,
            epochs: TrainConfig::DEFAULT_EPOCHS,
            hidden: 0,
            labels: None,
            test_fraction: TEST_FRACTION,
            hwa: None,
            devices: None,
            seed: None,
            out: None,
            history: None,
            test_out: None,
        }
    }
}

impl TrainCliConfig {
    fn train_config(&self, seed: u64) -> TrainConfig {
        let base = match self.mode {
            ModeArg::Fp => TrainConfig::fp_sgd(seed),
            ModeArg::Ttv2 => TrainConfig { fast_lr: self.fast_lr, transfer_every: self.transfer_every, ..TrainConfig::ttv2(seed) },
        };
        TrainConfig { lr: self.lr.unwrap_or(base.lr), epochs: self.epochs, ..base }
    }
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let mut c: TrainCliConfig = load_config(a.config.as_deref())?;
    set_opt(&mut c.features, a.features);
    set(&mut c.mode, a.mode);
    set_opt(&mut c.lr, a.lr);
    set(&mut c.fast_lr, a.fast_lr);
    set(&mut c.transfer_every, a.transfer_every);
    set(&mut c.epochs, a.epochs);
    set(&mut c.hidden, a.hidden);
    set_opt(&mut c.labels, a.labels);
    set(&mut c.test_fraction, a.test_fraction);
    if a.hwa || a.hwa_epochs.is_some() || a.hwa_noise.is_some() || a.hwa_lr.is_some() {
        let h = c.hwa.get_or_insert_with(HwaConfig::default);
        set(&mut h.epochs, a.hwa_epochs);
        set(&mut h.noise_std, a.hwa_noise);
        set(&mut h.lr, a.hwa_lr);
    }
    set_opt(&mut c.devices, a.devices);
    set_opt(&mut c.seed, a.seed);
    set_opt(&mut c.out, a.out);
    set_opt(&mut c.history, a.history);
    set_opt(&mut c.test_out, a.test_out);

    let seed = require(&c.seed, "seed")?;
    let features = require(&c.features, "features")?;
    let out = require(&c.out, "out")?;
    require_file(&features)?;
    if let Some(d) = &c.devices {
        require_file(d)?;
    }
    if c.hwa.is_some() && c.mode != ModeArg::Fp {
        return Err(Error::InvalidArgument("hardware-aware tuning applies to --mode fp only".into()));
    }
    let cfg = c.train_config(seed);
    cfg.validate()?;
    if let Some(h) = &c.hwa {
        h.validate()?;
    }

    let rows = io::read_features_csv(&features)?;
    if rows.is_empty() {
        return Err(Error::Empty(format!("{} holds no feature rows", features.display())));
    }
    let classes = match c.labels {
        Some(k) => k,
        None => rows.iter().map(|(_, l)| *l as usize).max().unwrap_or(0),
    };
    let hidden = (c.hidden > 0).then_some(c.hidden);
    let spec = NetworkSpec::gesture(hidden, classes)?;
    let prepared = prepare(&rows, c.test_fraction, seed)?;
    let hash = io::config_hash(&c)?;
    info!("training {:?} on {} samples, {} held out", cfg.mode, prepared.train.len(), prepared.test.len());

    let (mut net, mut history) = match cfg.mode {
        TrainMode::FpSgd => {
            let mut net = Mlp::init(spec, &mut stream(seed, INIT_STREAM))?;
            let history = train_sgd_fp(&mut net, &prepared.train, &prepared.test, &cfg)?;
            (net, history)
        }
        TrainMode::Ttv2 => {
            let dist = load_distribution(c.devices.as_deref())?;
            let (state, history) = train_ttv2(spec, &prepared.train, &prepared.test, &dist, &cfg)?;
            (state.to_mlp(), history)
        }
    };
    if let Some(h) = &c.hwa {
        let tuned = hardware_aware_finetune(&mut net, &prepared.train, h, &mut stream(seed, HWA_STREAM))?;
        let test_acc = evaluate(&net, &prepared.test)?;
        let offset = history.records.len();
        history.records.extend(tuned.records.into_iter().map(|mut r| {
            r.epoch += offset;
            r.test_acc = test_acc;
            r
        }));
    }
    if let Some(r) = history.last() {
        info!("final train {:.4} test {:.4} loss {:.4}", r.train_acc, r.test_acc, r.loss);
    }

    io::write_json(&out, &ModelFile::from_mlp(&net, Some(prepared.standardizer), hash.clone()))?;
    let meta = meta_for("train", &c)?;
    if let Some(path) = &c.history {
        io::write_history_csv(path, &history)?;
        io::write_meta(path, &meta)?;
    }
    if let Some(path) = &c.test_out {
        let labels: Vec<u8> = rows.iter().map(|(_, l)| *l).collect();
        let (_, test_idx) = crate::gesturegen::split_indices(
            &labels,
            c.test_fraction,
            &mut stream(seed, crate::pipeline::SPLIT_STREAM),
        )?;
        let held: Vec<_> = test_idx.iter().map(|&k| rows[k]).collect();
        io::write_features_csv(path, &held)?;
        io::write_meta(path, &meta)?;
    }
    Ok(())
}

// ----------------------------------------------------------------- program

#[derive(Debug, Args)]
pub struct ProgramArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Model JSON from `train`.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub devices: Option<PathBuf>,
    /// Relative programming tolerance on the target conductance.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory receiving per-layer program CSVs, the summary and the
    /// programmed network.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProgramConfig {
    pub model: Option<PathBuf>,
    pub devices: Option<PathBuf>,
    pub epsilon: f64,
    pub max_iter: usize,
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
}

impl Default for ProgramConfig {
    fn default() -> Self {
        Self { model: None, devices: None, epsilon: 0.02, max_iter: 200, seed: None, out_dir: None }
    }
}

/// One programmed layer on disk.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeployedLayerFile {
    pub tile: TileSnapshot,
    pub mapping: WeightMapping,
    pub bias: Vec<f64>,
}

/// Programmed network on disk.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeployedFile {
    pub spec: NetworkSpec,
    pub layers: Vec<DeployedLayerFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalizer: Option<Standardizer>,
    #[serde(default)]
    pub config_hash: String,
}

impl DeployedFile {
    fn to_network(&self) -> Result<DeployedNetwork> {
        self.spec.validate()?;
        crate::error::check_dim(self.spec.layers(), self.layers.len())?;
        let layers = self
            .layers
            .iter()
            .zip(self.spec.layer_dims.windows(2))
            .map(|(l, d)| {
                let tile = AnalogTile::from_snapshot(l.tile.clone())?;
                crate::error::check_dim(d[0], tile.rows())?;
                crate::error::check_dim(d[1], tile.cols())?;
                crate::error::check_dim(d[1], l.bias.len())?;
                Ok(DeployedLayer { tile, mapping: l.mapping, bias: l.bias.clone() })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DeployedNetwork { spec: self.spec.clone(), layers })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProgramSummaryFile {
    pub layers: Vec<ProgramSummary>,
}

pub const DEPLOYED_FILE: &str = "deployed.json";
pub const PROGRAM_SUMMARY_FILE: &str = "program_summary.json";

pub fn program_csv_name(layer: usize) -> String {
    format!("program_layer{layer}.csv")
}

fn cmd_program(a: ProgramArgs) -> Result<()> {
    let mut c: ProgramConfig = load_config(a.config.as_deref())?;
    set_opt(&mut c.model, a.model);
    set_opt(&mut c.devices, a.devices);
    set(&mut c.epsilon, a.epsilon);
    set(&mut c.max_iter, a.max_iter);
    set_opt(&mut c.seed, a.seed);
    set_opt(&mut c.out_dir, a.out_dir);
    let seed = require(&c.seed, "seed")?;
    let model_path = require(&c.model, "model")?;
    let out_dir = require(&c.out_dir, "out_dir")?;
    require_file(&model_path)?;
    if let Some(d) = &c.devices {
        require_file(d)?;
    }

    let model: ModelFile = io::read_json(&model_path)?;
    let net = model.to_mlp()?;
    let dist = load_distribution(c.devices.as_deref())?;
    let (deployed, reports) = deploy(&net, &dist, c.epsilon, c.max_iter, seed)?;
    let meta = meta_for("program", &c)?;
    std::fs::create_dir_all(&out_dir)?;
    for (l, r) in reports.iter().enumerate() {
        let path = out_dir.join(program_csv_name(l));
        io::write_program_csv(&path, r)?;
        io::write_meta(&path, &meta)?;
        info!(
            "layer {l}: {:.2}% converged, {:.1} mean iterations",
            100.0 * r.summary.converged_fraction,
            r.summary.mean_iterations
        );
    }
    let summary = ProgramSummaryFile { layers: reports.into_iter().map(|r| r.summary).collect() };
    write_hashed(&out_dir.join(PROGRAM_SUMMARY_FILE), &meta.config_hash, &summary)?;
    let file = DeployedFile {
        spec: deployed.spec.clone(),
        layers: deployed
            .layers
            .iter()
            .map(|l| DeployedLayerFile { tile: l.tile.snapshot(), mapping: l.mapping, bias: l.bias.clone() })
            .collect(),
        normalizer: model.normalizer,
        config_hash: meta.config_hash,
    };
    io::write_json(&out_dir.join(DEPLOYED_FILE), &file)
}

// ------------------------------------------------------------------- infer

#[derive(Debug, Args)]
pub struct InferArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// FP model JSON from `train`.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Programmed network from `program`.
    #[arg(long)]
    pub deployed: Option<PathBuf>,
    /// Feature CSV to evaluate on.
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Accuracy report JSON output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InferConfig {
    pub model: Option<PathBuf>,
    pub deployed: Option<PathBuf>,
    pub features: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub samples: usize,
    pub fp_accuracy: f64,
    pub analog_accuracy: f64,
    /// `fp_accuracy − analog_accuracy` in percentage points.
    pub gap_points: f64,
}

fn cmd_infer(a: InferArgs) -> Result<()> {
    let mut c: InferConfig = load_config(a.config.as_deref())?;
    set_opt(&mut c.model, a.model);
    set_opt(&mut c.deployed, a.deployed);
    set_opt(&mut c.features, a.features);
    set_opt(&mut c.out, a.out);
    let model_path = require(&c.model, "model")?;
    let deployed_path = require(&c.deployed, "deployed")?;
    let features = require(&c.features, "features")?;
    let out = require(&c.out, "out")?;
    for p in [&model_path, &deployed_path, &features] {
        require_file(p)?;
    }

    let model: ModelFile = io::read_json(&model_path)?;
    let net = model.to_mlp()?;
    let deployed = io::read_json::<DeployedFile>(&deployed_path)?.to_network()?;
    crate::error::check_dim(net.spec.layers(), deployed.spec.layers())?;
    let mut data = to_dataset(&io::read_features_csv(&features)?)?;
    if let Some(n) = &model.normalizer {
        data = n.apply(&data)?;
    }
    let fp_accuracy = evaluate(&net, &data)?;
    let analog_accuracy = evaluate(&deployed, &data)?;
    let report = AccuracyReport {
        samples: data.len(),
        fp_accuracy,
        analog_accuracy,
        gap_points: 100.0 * (fp_accuracy - analog_accuracy),
    };
    info!("fp {:.4} analog {:.4} gap {:.2} points", fp_accuracy, analog_accuracy, report.gap_points);
    write_hashed(&out, &io::config_hash(&c)?, &report)
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenData(a) => cmd_gen_data(a),
        Command::ExtractFeatures(a) => cmd_extract(a),
        Command::FitDevice(a) => cmd_fit(a),
        Command::SimulateTrace(a) => cmd_trace(a),
        Command::Train(a) => cmd_train(a),
        Command::Program(a) => cmd_program(a),
        Command::Infer(a) => cmd_infer(a),
    }
}

/// Entry point for the binary; returns the process exit status.
pub fn main() -> i32 {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            log::error!("{e}");
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("reram-sim").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn train_defaults_follow_mode() {
        let c = TrainCliConfig::default();
        assert_eq!(c.train_config(1).lr, 0.05);
        let tt = TrainCliConfig { mode: ModeArg::Ttv2, ..c };
        let cfg = tt.train_config(1);
        assert_eq!((cfg.lr, cfg.fast_lr, cfg.transfer_every), (0.1, 0.5, 5));
    }

    #[test]
    fn program_defaults() {
        let c = ProgramConfig::default();
        assert_eq!((c.epsilon, c.max_iter), (0.02, 200));
    }

    #[test]
    fn flags_override_config() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.json");
        std::fs::write(&cfg, r#"{"epsilon": 0.05, "max_iter": 50, "seed": 3}"#).unwrap();
        let Command::Program(a) = parse(&["program", "--config", cfg.to_str().unwrap(), "--max-iter", "7"]).command else {
            panic!()
        };
        let mut c: ProgramConfig = load_config(a.config.as_deref()).unwrap();
        set(&mut c.max_iter, a.max_iter);
        assert_eq!((c.epsilon, c.max_iter, c.seed), (0.05, 7, Some(3)));
    }

    #[test]
    fn unknown_config_keys_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.json");
        std::fs::write(&cfg, r#"{"epsilonn": 0.05}"#).unwrap();
        assert!(load_config::<ProgramConfig>(Some(&cfg)).is_err());
    }

    #[test]
    fn missing_seed_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("t.csv");
        let Command::SimulateTrace(a) = parse(&["simulate-trace", "--out", out.to_str().unwrap()]).command else {
            panic!()
        };
        assert!(matches!(cmd_trace(a), Err(Error::InvalidArgument(_))));
        assert!(!out.exists());
    }

    #[test]
    fn distribution_file_accepts_plain_distribution() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.json");
        io::write_json(&p, &DeviceDistribution::fixed(30.0, 0.0, 0.01)).unwrap();
        assert_eq!(load_distribution(Some(&p)).unwrap(), DeviceDistribution::fixed(30.0, 0.0, 0.01));
    }
}
