use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{augment, generate_gesture, AugmentConfig, Templates};
use crate::error::{Error, Result};
use crate::rng;
use crate::tactile::{merge_labels_10_to_5, Frame, GestureSeries, Speed};

pub const FORMAT_VERSION: u32 = 1;

const GESTURE_STREAM: u64 = 0x6E5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum LabelSet {
    Ten,
    Five,
}

impl LabelSet {
    pub fn classes(self) -> usize {
        match self {
            LabelSet::Ten => 10,
            LabelSet::Five => 5,
        }
    }

    pub fn map(self, template: u8) -> Result<u8> {
        match self {
            LabelSet::Ten if (1..=10).contains(&template) => Ok(template),
            LabelSet::Ten => Err(Error::InvalidLabel(template as i64)),
            LabelSet::Five => Ok(merge_labels_10_to_5(template)?.id()),
        }
    }
}

impl TryFrom<u8> for LabelSet {
    type Error = String;
    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            10 => Ok(LabelSet::Ten),
            5 => Ok(LabelSet::Five),
            other => Err(format!("label set must be 10 or 5, got {other}")),
        }
    }
}

impl From<LabelSet> for u8 {
    fn from(l: LabelSet) -> u8 {
        l.classes() as u8
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenSpec {
    /// Gestures generated per 10-category template.
    pub samples_per_label: usize,
    pub labels: LabelSet,
    /// Fractions of `[slow, regular, fast]`.
    pub speed_mix: [f64; 3],
    pub templates: Templates,
    pub augment: bool,
    pub augmentation: AugmentConfig,
    pub seed: u64,
}

impl Default for GenSpec {
    fn default() -> Self {
        Self {
            samples_per_label: 306,
            labels: LabelSet::Five,
            speed_mix: [1.0 / 3.0; 3],
            templates: Templates::default(),
            augment: true,
            augmentation: AugmentConfig::default(),
            seed: 0,
        }
    }
}

impl GenSpec {
    pub fn validate(&self) -> Result<()> {
        if self.samples_per_label == 0 {
            return Err(Error::InvalidArgument("samples_per_label must be at least 1".into()));
        }
        let sum: f64 = self.speed_mix.iter().sum();
        if self.speed_mix.iter().any(|f| !(*f >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("speed mix must be non-negative and sum to 1, got {:?}", self.speed_mix)));
        }
        Ok(())
    }
}

/// One line of a gesture JSONL file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GestureRecord {
    pub id: u64,
    /// Class label in the dataset's label set.
    pub label: u8,
    pub speed: Speed,
    /// Originating 10-category template.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template: Option<u8>,
    pub frames: Vec<Frame>,
}

impl GestureRecord {
    pub fn series(&self) -> GestureSeries {
        GestureSeries { frames: self.frames.clone(), label: self.template.unwrap_or(self.label), speed: self.speed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub spec: GenSpec,
    pub seed: u64,
    pub counts: BTreeMap<u8, usize>,
    pub total: usize,
}

fn pick_speed<R: Rng + ?Sized>(mix: &[f64; 3], rng: &mut R) -> Speed {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (speed, f) in Speed::ALL.iter().zip(mix) {
        acc += f;
        if u < acc {
            return *speed;
        }
    }
    Speed::ALL[mix.iter().rposition(|&f| f > 0.0).unwrap_or(2)]
}

/// Generate a balanced dataset; gesture `g` draws from its own stream derived
/// from `(seed, g)`, so output is independent of evaluation order.
pub fn generate_dataset(spec: &GenSpec) -> Result<(Vec<GestureRecord>, Manifest)> {
    spec.validate()?;
    let mut records = Vec::with_capacity(spec.samples_per_label * 10);
    let mut counts = BTreeMap::new();
    for k in 0..spec.samples_per_label {
        for template in 1..=10u8 {
            let id = (k * 10 + template as usize - 1) as u64;
            let mut rng = rng::stream(spec.seed, rng::child_id(GESTURE_STREAM, id));
            let speed = pick_speed(&spec.speed_mix, &mut rng);
            let mut series = generate_gesture(template, speed, &spec.templates, &mut rng)?;
            if spec.augment {
                series = augment(&series, &spec.augmentation, &mut rng);
            }
            let label = spec.labels.map(template)?;
            *counts.entry(label).or_insert(0) += 1;
            records.push(GestureRecord { id, label, speed, template: Some(template), frames: series.frames });
        }
    }
    let manifest = Manifest { format_version: FORMAT_VERSION, spec: spec.clone(), seed: spec.seed, counts, total: records.len() };
    Ok((records, manifest))
}

/// Stratified split of item indices by label. Each label contributes
/// `round(n·test_fraction)` items to the test side, kept within `[1, n-1]`.
pub fn split_indices<R: Rng + ?Sized>(labels: &[u8], test_fraction: f64, rng: &mut R) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!("test fraction must lie in (0, 1), got {test_fraction}")));
    }
    let mut groups: BTreeMap<u8, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        groups.entry(l).or_default().push(i);
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (label, mut idx) in groups {
        if idx.len() < 2 {
            return Err(Error::InsufficientData(format!("label {label} has fewer than 2 samples")));
        }
        idx.shuffle(rng);
        let n_test = ((idx.len() as f64 * test_fraction).round() as usize).clamp(1, idx.len() - 1);
        test.extend_from_slice(&idx[..n_test]);
        train.extend_from_slice(&idx[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

pub fn split<T: Clone, R: Rng + ?Sized>(
    items: &[T],
    label_of: impl Fn(&T) -> u8,
    test_fraction: f64,
    rng: &mut R,
) -> Result<(Vec<T>, Vec<T>)> {
    let labels: Vec<u8> = items.iter().map(label_of).collect();
    let (train, test) = split_indices(&labels, test_fraction, rng)?;
    Ok((train.iter().map(|&i| items[i].clone()).collect(), test.iter().map(|&i| items[i].clone()).collect()))
}
