//! Random forest: gini trees on bootstrap samples with per-split feature sampling.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::binary_targets;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng;
use crate::trees::{self, ColumnOrder, Criterion, Tree, TreeConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RfParams {
    pub n_estimators: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// Bootstrap sample size as a fraction of the training rows (drawn with replacement).
    pub bootstrap_fraction: f64,
    /// Features tried at each split; `None` means `max(1, ⌊√M⌋)`.
    pub max_features: Option<usize>,
}

impl Default for RfParams {
    fn default() -> Self {
        Self {
            n_estimators: 1500,
            max_depth: 12,
            min_samples_leaf: 1,
            bootstrap_fraction: 1.0,
            max_features: None,
        }
    }
}

impl RfParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_estimators < 1 || self.max_depth < 1 || self.min_samples_leaf < 1 {
            return Err(Error::InvalidConfig(
                "rf n_estimators, max_depth and min_samples_leaf must be at least 1".into(),
            ));
        }
        if !(self.bootstrap_fraction > 0.0 && self.bootstrap_fraction <= 1.0) {
            return Err(Error::InvalidConfig(
                "rf bootstrap_fraction must lie in (0, 1]".into(),
            ));
        }
        if self.max_features == Some(0) {
            return Err(Error::InvalidConfig(
                "rf max_features must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
}

impl ForestModel {
    /// Mean of the trees' leaf class probabilities.
    pub fn predict(&self, row: &[f64]) -> f64 {
        if self.trees.is_empty() {
            return 0.5;
        }
        self.trees.iter().map(|t| t.predict(row)).sum::<f64>() / self.trees.len() as f64
    }
}

pub fn fit(x: &Matrix, y: &[u8], params: &RfParams, seed: u64) -> Result<ForestModel> {
    let y = binary_targets(y)?;
    let n = x.n_rows();
    let m = x.n_cols();
    let per_split = params
        .max_features
        .unwrap_or_else(|| ((m as f64).sqrt().floor() as usize).max(1))
        .min(m);
    let n_boot = ((params.bootstrap_fraction * n as f64).round() as usize).max(1);
    let order = ColumnOrder::new(x);
    let features: Vec<usize> = (0..m).collect();
    let config = TreeConfig {
        max_depth: params.max_depth,
        min_samples_leaf: params.min_samples_leaf,
        max_features_per_split: Some(per_split),
        criterion: Criterion::Gini,
        seed,
        ..TreeConfig::default()
    };

    let trees = (0..params.n_estimators)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng::stream(seed, t as u64);
            let mut counts = vec![0u32; n];
            for _ in 0..n_boot {
                counts[rng.random_range(0..n)] += 1;
            }
            let rows: Vec<usize> = (0..n).filter(|&i| counts[i] > 0).collect();
            let b: Vec<f64> = counts.iter().map(|&c| f64::from(c)).collect();
            let a: Vec<f64> = b.iter().zip(&y).map(|(c, yi)| c * yi).collect();
            trees::grow(x, &order, &a, &b, &rows, &features, &config, &mut rng)
        })
        .collect();
    Ok(ForestModel { trees })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn averages_tree_outputs() {
        let f = ForestModel {
            trees: [0.2, 0.4, 0.6].iter().map(|&v| Tree::leaf(v)).collect(),
        };
        assert!((f.predict(&[0.0]) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn tree_order_does_not_matter() {
        let x = Matrix::new(40, 2, (0..80).map(|i| ((i * 37) % 23) as f64).collect()).unwrap();
        let y: Vec<u8> = (0..40)
            .map(|i| u8::from(x.get(i, 0) + x.get(i, 1) > 22.0))
            .collect();
        let p = RfParams {
            n_estimators: 15,
            ..RfParams::default()
        };
        let f = fit(&x, &y, &p, 5).unwrap();
        let mut rev = f.clone();
        rev.trees.reverse();
        for r in x.rows() {
            assert!((f.predict(r) - rev.predict(r)).abs() < 1e-12);
        }
        assert_eq!(f, fit(&x, &y, &p, 5).unwrap());
    }
}
