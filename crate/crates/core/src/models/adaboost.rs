//! Binary SAMME AdaBoost over weighted gini trees.
//!
//! Round `m` fits a tree to the current sample weights, takes its weighted error
//! `err`, assigns `α = learning_rate · ln((1 − err) / err)` and multiplies the weight
//! of every misclassified row by `e^α`. The ensemble decision is the normalized vote
//! `d = (Σ α·[h = 1] − Σ α·[h = 0]) / Σ α ∈ [−1, 1]` and the probability is
//! `sigmoid(d)`.

use serde::{Deserialize, Serialize};

use super::{binary_targets, sigmoid};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng;
use crate::trees::{self, ColumnOrder, Criterion, Tree, TreeConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdaBoostParams {
    pub learning_rate: f64,
    pub n_estimators: usize,
    /// Depth of each weak learner; 1 gives stumps.
    pub max_depth: usize,
}

impl Default for AdaBoostParams {
    fn default() -> Self {
        Self {
            learning_rate: 0.8,
            n_estimators: 100,
            max_depth: 1,
        }
    }
}

impl AdaBoostParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(
                "adaboost learning_rate must be positive".into(),
            ));
        }
        if self.n_estimators < 1 || self.max_depth < 1 {
            return Err(Error::InvalidConfig(
                "adaboost n_estimators and max_depth must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaBoostModel {
    pub trees: Vec<Tree>,
    pub alphas: Vec<f64>,
}

impl AdaBoostModel {
    /// Normalized vote in `[−1, 1]`; 0 for an empty ensemble.
    pub fn decision(&self, row: &[f64]) -> f64 {
        let total: f64 = self.alphas.iter().sum();
        if total <= 0.0 {
            return 0.0;
        }
        let vote: f64 = self
            .trees
            .iter()
            .zip(&self.alphas)
            .map(|(t, a)| if t.predict(row) >= 0.5 { *a } else { -*a })
            .sum();
        vote / total
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        sigmoid(self.decision(row))
    }
}

const MIN_ERROR: f64 = 1e-10;

pub fn fit(x: &Matrix, y: &[u8], params: &AdaBoostParams, seed: u64) -> Result<AdaBoostModel> {
    let y = binary_targets(y)?;
    let n = x.n_rows();
    let order = ColumnOrder::new(x);
    let rows: Vec<usize> = (0..n).collect();
    let features: Vec<usize> = (0..x.n_cols()).collect();
    let config = TreeConfig {
        max_depth: params.max_depth,
        criterion: Criterion::Gini,
        seed,
        ..TreeConfig::default()
    };
    let mut rng = rng::seeded(seed);

    let mut w = vec![1.0 / n as f64; n];
    let mut model = AdaBoostModel {
        trees: Vec::new(),
        alphas: Vec::new(),
    };
    for round in 0..params.n_estimators {
        let a: Vec<f64> = w.iter().zip(&y).map(|(wi, yi)| wi * yi).collect();
        let tree = trees::grow(x, &order, &a, &w, &rows, &features, &config, &mut rng);
        let wrong: Vec<bool> = x
            .rows()
            .zip(&y)
            .map(|(row, &yi)| (tree.predict(row) >= 0.5) != (yi == 1.0))
            .collect();
        let total: f64 = w.iter().sum();
        let err = w
            .iter()
            .zip(&wrong)
            .filter(|(_, &bad)| bad)
            .map(|(wi, _)| wi)
            .sum::<f64>()
            / total;
        if !err.is_finite() {
            return Err(Error::NonFiniteLoss { round });
        }
        if err >= 0.5 {
            break;
        }
        let clamped = err.max(MIN_ERROR);
        let alpha = params.learning_rate * ((1.0 - clamped) / clamped).ln();
        model.trees.push(tree);
        model.alphas.push(alpha);
        if err <= MIN_ERROR {
            break;
        }
        let boost = alpha.exp();
        for (wi, &bad) in w.iter_mut().zip(&wrong) {
            if bad {
                *wi *= boost;
            }
        }
        let total: f64 = w.iter().sum();
        for wi in &mut w {
            *wi /= total;
        }
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn learns_an_interval_with_stumps() {
        // positives in the middle need at least two stumps
        let xs: Vec<f64> = (0..30).map(f64::from).collect();
        let y: Vec<u8> = xs
            .iter()
            .map(|&v| u8::from((10.0..20.0).contains(&v)))
            .collect();
        let x = Matrix::new(30, 1, xs).unwrap();
        let m = fit(&x, &y, &AdaBoostParams::default(), 0).unwrap();
        assert!(m.trees.len() > 1);
        let correct = x
            .rows()
            .zip(&y)
            .filter(|(r, &l)| u8::from(m.predict(r) >= 0.5) == l)
            .count();
        assert!(correct >= 27, "{correct}");
        for r in x.rows() {
            let p = m.predict(r);
            assert!((0.0..=1.0).contains(&p));
        }
    }

    #[test]
    fn deterministic() {
        let x = Matrix::new(6, 1, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let y = [0, 1, 0, 1, 1, 1];
        let p = AdaBoostParams::default();
        assert_eq!(fit(&x, &y, &p, 1).unwrap(), fit(&x, &y, &p, 1).unwrap());
    }
}
