//! File formats: traces, parameters, gestures, features, histories, program
//! reports, tile snapshots and models.
//!
//! CSV files carry a fixed header. Commands that write CSV also write a
//! `<file>.meta.json` sidecar holding the effective config and its hash.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::crossbar::ProgramReport;
use crate::device::Trace;
use crate::error::{Error, Result};
use crate::gesturegen::GestureRecord;
use crate::matrix::Matrix;
use crate::nn::{Mlp, NetworkSpec, Standardizer, TrainHistory};
use crate::tactile::{FeatureVector, FEATURE_LEN, FEATURE_NAMES};

pub const TRACE_HEADER: [&str; 2] = ["pulse_index", "conductance"];
pub const HISTORY_HEADER: [&str; 4] = ["epoch", "train_acc", "test_acc", "loss"];
pub const PROGRAM_HEADER: [&str; 6] = ["row", "col", "target", "achieved", "iterations", "converged"];

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

/// Hex SHA-256 of the compact JSON encoding of `config`.
pub fn config_hash<T: Serialize + ?Sized>(config: &T) -> Result<String> {
    let bytes = serde_json::to_vec(config)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(open(path)?)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub command: String,
    pub config: serde_json::Value,
    pub config_hash: String,
}

pub fn meta_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

pub fn write_meta(path: &Path, meta: &Meta) -> Result<()> {
    write_json(&meta_path(path), meta)
}

fn check_header(found: &csv::StringRecord, expected: &[&str], path: &Path) -> Result<()> {
    if found.iter().ne(expected.iter().copied()) {
        return Err(Error::Parse(format!(
            "{}: expected header {:?}, found {:?}",
            path.display(),
            expected,
            found.iter().collect::<Vec<_>>()
        )));
    }
    Ok(())
}

fn parse_field<T: std::str::FromStr>(rec: &csv::StringRecord, k: usize, path: &Path) -> Result<T> {
    let line = rec.position().map_or(0, |p| p.line());
    let raw = rec.get(k).ok_or_else(|| Error::Parse(format!("{}:{line}: missing column {k}", path.display())))?;
    raw.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("{}:{line}: cannot parse {raw:?} in column {k}", path.display())))
}

pub fn write_trace_csv(path: &Path, trace: &Trace) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(TRACE_HEADER)?;
    for (k, g) in trace.samples.iter().enumerate() {
        w.write_record([k.to_string(), g.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a trace; rows must be indexed `0, 1, 2, …` in order.
pub fn read_trace_csv(path: &Path) -> Result<Trace> {
    let mut r = csv::Reader::from_reader(open(path)?);
    check_header(r.headers()?, &TRACE_HEADER, path)?;
    let mut samples = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let k: usize = parse_field(&rec, 0, path)?;
        if k != samples.len() {
            return Err(Error::Parse(format!("{}: expected pulse_index {}, found {k}", path.display(), samples.len())));
        }
        let g: f64 = parse_field(&rec, 1, path)?;
        if !g.is_finite() {
            return Err(Error::Parse(format!("{}: non-finite conductance at index {k}", path.display())));
        }
        samples.push(g);
    }
    if samples.is_empty() {
        return Err(Error::Empty(format!("{}: trace has no samples", path.display())));
    }
    Ok(Trace { samples })
}

pub fn write_gestures_jsonl(path: &Path, records: &[GestureRecord]) -> Result<()> {
    let mut w = create(path)?;
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_gestures_jsonl(path: &Path) -> Result<Vec<GestureRecord>> {
    let mut out = Vec::new();
    for (n, line) in open(path)?.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: GestureRecord = serde_json::from_str(&line)
            .map_err(|e| Error::Parse(format!("{}:{}: {e}", path.display(), n + 1)))?;
        rec.series().validate()?;
        out.push(rec);
    }
    Ok(out)
}

/// Feature CSV header: the 38 feature names followed by `label`.
pub fn feature_header() -> Vec<&'static str> {
    FEATURE_NAMES.iter().copied().chain(std::iter::once("label")).collect()
}

pub fn write_features_csv(path: &Path, rows: &[(FeatureVector, u8)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(feature_header())?;
    for (f, label) in rows {
        w.write_record(f.as_slice().iter().map(f64::to_string).chain(std::iter::once(label.to_string())))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_features_csv(path: &Path) -> Result<Vec<(FeatureVector, u8)>> {
    let mut r = csv::Reader::from_reader(open(path)?);
    check_header(r.headers()?, &feature_header(), path)?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let mut f = [0.0; FEATURE_LEN];
        for (k, v) in f.iter_mut().enumerate() {
            *v = parse_field(&rec, k, path)?;
        }
        out.push((FeatureVector(f), parse_field(&rec, FEATURE_LEN, path)?));
    }
    Ok(out)
}

pub fn write_history_csv(path: &Path, history: &TrainHistory) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(HISTORY_HEADER)?;
    for r in &history.records {
        w.write_record([r.epoch.to_string(), r.train_acc.to_string(), r.test_acc.to_string(), r.loss.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_history_csv(path: &Path) -> Result<TrainHistory> {
    let mut r = csv::Reader::from_reader(open(path)?);
    check_header(r.headers()?, &HISTORY_HEADER, path)?;
    let mut history = TrainHistory::default();
    for rec in r.records() {
        let rec = rec?;
        history.records.push(crate::nn::EpochRecord {
            epoch: parse_field(&rec, 0, path)?,
            train_acc: parse_field(&rec, 1, path)?,
            test_acc: parse_field(&rec, 2, path)?,
            loss: parse_field(&rec, 3, path)?,
        });
    }
    Ok(history)
}

/// One row per device of a single tile's report.
pub fn write_program_csv(path: &Path, report: &ProgramReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(PROGRAM_HEADER)?;
    for r in &report.records {
        w.write_record([
            r.row.to_string(),
            r.col.to_string(),
            r.target.to_string(),
            r.achieved.to_string(),
            r.iterations.to_string(),
            r.converged.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Model file: network spec, row-major `[inputs, outputs]` weights per layer,
/// biases, the input standardizer and the hash of the training config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub spec: NetworkSpec,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalizer: Option<Standardizer>,
    #[serde(default)]
    pub config_hash: String,
}

impl ModelFile {
    pub fn from_mlp(net: &Mlp, normalizer: Option<Standardizer>, config_hash: String) -> Self {
        Self {
            spec: net.spec.clone(),
            weights: net.weights.iter().map(|m| m.data.clone()).collect(),
            biases: net.biases.clone(),
            normalizer,
            config_hash,
        }
    }

    pub fn to_mlp(&self) -> Result<Mlp> {
        self.spec.validate()?;
        crate::error::check_dim(self.spec.layers(), self.weights.len())?;
        let weights = self
            .spec
            .layer_dims
            .windows(2)
            .zip(&self.weights)
            .map(|(d, w)| Matrix::from_vec(d[0], d[1], w.clone()))
            .collect::<Result<Vec<_>>>()?;
        let net = Mlp { spec: self.spec.clone(), weights, biases: self.biases.clone() };
        net.validate()?;
        if let Some(n) = &self.normalizer {
            crate::error::check_dim(self.spec.input_dim(), n.mean.len())?;
            crate::error::check_dim(self.spec.input_dim(), n.std.len())?;
        }
        Ok(net)
    }
}
