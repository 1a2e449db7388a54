//! SMOTE oversampling: synthetic minority rows interpolated between a minority row
//! and one of its k nearest minority neighbors.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataprep::{Dataset, FeatureVector};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SmoteConfig {
    pub k: usize,
    /// Minority/majority count ratio after resampling.
    pub target_ratio: f64,
    pub seed: u64,
}

impl Default for SmoteConfig {
    fn default() -> Self {
        Self {
            k: 10,
            target_ratio: 0.5,
            seed: 0,
        }
    }
}

impl SmoteConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::InvalidConfig("smote k must be at least 1".into()));
        }
        if !(self.target_ratio > 0.0 && self.target_ratio <= 1.0) {
            return Err(Error::InvalidConfig(
                "smote target_ratio must lie in (0, 1]".into(),
            ));
        }
        Ok(())
    }
}

/// Parents of one synthetic row: `row = base + gap · (neighbor − base)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticOrigin {
    /// Index of the synthetic row in the resampled output.
    pub row: usize,
    /// Input row index of the minority seed.
    pub base: usize,
    /// Input row index of the chosen neighbor.
    pub neighbor: usize,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoteAudit {
    pub minority_label: u8,
    pub minority_before: usize,
    pub majority: usize,
    pub synthetic: Vec<SyntheticOrigin>,
}

/// Number of synthetic rows needed so that minority/majority reaches `ratio` (floored).
pub fn synthetic_count(minority: usize, majority: usize, ratio: f64) -> usize {
    let target = (ratio * majority as f64).floor() as usize;
    target.saturating_sub(minority)
}

/// Indices (into `points`) of the `k` nearest other points, by Euclidean distance
/// with ties broken by index.
fn nearest(points: &[&[f64]], i: usize, k: usize) -> Vec<usize> {
    let mut d: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(j, p)| {
            let dist: f64 = p
                .iter()
                .zip(points[i])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            (dist, j)
        })
        .collect();
    d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    d.truncate(k);
    d.into_iter().map(|(_, j)| j).collect()
}

/// Resamples a feature matrix. Original rows come first, unchanged and in order;
/// synthetic rows follow.
pub fn resample_matrix(
    x: &Matrix,
    y: &[u8],
    config: &SmoteConfig,
) -> Result<(Matrix, Vec<u8>, SmoteAudit)> {
    config.validate()?;
    if x.n_rows() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.n_rows(),
            right: y.len(),
        });
    }
    let ones = y.iter().filter(|&&v| v == 1).count();
    let zeros = y.len() - ones;
    let minority_label = u8::from(ones <= zeros);
    let minority_rows: Vec<usize> = (0..y.len()).filter(|&i| y[i] == minority_label).collect();
    let minority = minority_rows.len();
    let majority = y.len() - minority;
    let n_synth = synthetic_count(minority, majority, config.target_ratio);
    let mut audit = SmoteAudit {
        minority_label,
        minority_before: minority,
        majority,
        synthetic: Vec::new(),
    };
    if n_synth == 0 {
        return Ok((x.clone(), y.to_vec(), audit));
    }
    if minority <= config.k {
        return Err(Error::TooFewMinority {
            minority,
            k: config.k,
        });
    }

    let points: Vec<&[f64]> = minority_rows.iter().map(|&i| x.row(i)).collect();
    let neighbors: Vec<Vec<usize>> = (0..minority)
        .into_par_iter()
        .map(|i| nearest(&points, i, config.k))
        .collect();

    let mut rng = rng::seeded(config.seed);
    let mut data = Vec::with_capacity((x.n_rows() + n_synth) * x.n_cols());
    data.extend_from_slice(x.as_slice());
    let mut labels = y.to_vec();
    for s in 0..n_synth {
        let b = rng.random_range(0..minority);
        let nb = neighbors[b][rng.random_range(0..config.k)];
        let gap: f64 = rng.random();
        let (base, other) = (points[b], points[nb]);
        data.extend(
            base.iter()
                .zip(other)
                .map(|(&xb, &xn)| xb + gap * (xn - xb)),
        );
        labels.push(minority_label);
        audit.synthetic.push(SyntheticOrigin {
            row: x.n_rows() + s,
            base: minority_rows[b],
            neighbor: minority_rows[nb],
            gap,
        });
    }
    let out = Matrix::new(x.n_rows() + n_synth, x.n_cols(), data)?;
    Ok((out, labels, audit))
}

/// Resamples a training dataset. Synthetic rows get ids `smote-<n>` and the
/// statement year of their base row.
pub fn resample(train: &Dataset, config: &SmoteConfig) -> Result<(Dataset, SmoteAudit)> {
    let (x, y, audit) = resample_matrix(&train.matrix(), &train.labels(), config)?;
    let mut rows = train.rows.clone();
    for (i, origin) in audit.synthetic.iter().enumerate() {
        rows.push(FeatureVector {
            company_id: format!("smote-{i}"),
            statement_year: train.rows[origin.base].statement_year,
            features: x.row(origin.row).to_vec(),
            label: y[origin.row],
        });
    }
    Ok((Dataset::new(train.schema.clone(), rows), audit))
}
