//! Glue from gesture records to standardized train/test sets.

use crate::error::{Error, Result};
use crate::gesturegen::{split_indices, GestureRecord};
use crate::nn::{Dataset, Standardizer};
use crate::rng::stream;
use crate::tactile::{extract_features, preprocess, FeatureVector};

/// Test share of the stratified split.
pub const TEST_FRACTION: f64 = 0.25;

pub(crate) const SPLIT_STREAM: u64 = 0x5350;

/// Preprocess and extract features from every record, keeping its label.
pub fn featurize(records: &[GestureRecord], window: usize) -> Result<Vec<(FeatureVector, u8)>> {
    records
        .iter()
        .map(|r| Ok((extract_features(&preprocess(&r.series(), window)?)?, r.label)))
        .collect()
}

/// Dataset with 0-based class indices (`label − 1`).
pub fn to_dataset(rows: &[(FeatureVector, u8)]) -> Result<Dataset> {
    if let Some((_, bad)) = rows.iter().find(|(_, l)| *l == 0) {
        return Err(Error::InvalidLabel(*bad as i64));
    }
    Dataset::new(
        rows.iter().map(|(f, _)| f.as_slice().to_vec()).collect(),
        rows.iter().map(|(_, l)| (*l - 1) as usize).collect(),
    )
}

#[derive(Debug, Clone)]
pub struct Prepared {
    pub train: Dataset,
    pub test: Dataset,
    pub standardizer: Standardizer,
}

/// Stratified split, then z-scoring fitted on the training side only.
pub fn prepare(rows: &[(FeatureVector, u8)], test_fraction: f64, seed: u64) -> Result<Prepared> {
    let labels: Vec<u8> = rows.iter().map(|(_, l)| *l).collect();
    let (train_idx, test_idx) = split_indices(&labels, test_fraction, &mut stream(seed, SPLIT_STREAM))?;
    let all = to_dataset(rows)?;
    let train = all.subset(&train_idx);
    let test = all.subset(&test_idx);
    let standardizer = Standardizer::fit(&train)?;
    Ok(Prepared { train: standardizer.apply(&train)?, test: standardizer.apply(&test)?, standardizer })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gesturegen::{generate_dataset, GenSpec};
    use crate::tactile::DEFAULT_SMOOTHING_WINDOW;

    #[test]
    fn small_dataset_prepares() {
        let spec = GenSpec { samples_per_label: 4, seed: 1, ..GenSpec::default() };
        let (records, _) = generate_dataset(&spec).unwrap();
        let rows = featurize(&records, DEFAULT_SMOOTHING_WINDOW).unwrap();
        let p = prepare(&rows, TEST_FRACTION, 0).unwrap();
        assert_eq!(p.train.len() + p.test.len(), 40);
        assert_eq!(p.test.len(), 10);
        assert_eq!(p.train.classes(), 5);
        assert_eq!(p.train.dim(), 38);
    }
}
