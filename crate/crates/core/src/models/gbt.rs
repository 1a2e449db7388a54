//! Second-order gradient boosting on the logistic loss.
//!
//! Starting from the base score `F0 = logit(p̄)`, each round computes
//! `g = p − y` and `h = p(1 − p)`, fits a second-order tree on a row subsample and a
//! per-tree feature subsample, and adds `learning_rate · tree` to the margin `F`.
//! The probability is `sigmoid(F)`.

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::{binary_targets, logloss, sigmoid};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng;
use crate::trees::{self, ColumnOrder, Criterion, Tree, TreeConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbtParams {
    pub learning_rate: f64,
    /// Boosting rounds; 0 leaves the base score only.
    pub n_estimators: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// Minimum hessian mass per child.
    pub min_child_weight: f64,
    /// Fraction of rows sampled (without replacement) per round.
    pub subsample: f64,
    /// Fraction of features sampled per tree.
    pub colsample_bytree: f64,
    pub gamma: f64,
    pub lambda: f64,
}

impl Default for GbtParams {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            n_estimators: 100,
            max_depth: 10,
            min_samples_leaf: 1,
            min_child_weight: 1.0,
            subsample: 1.0,
            colsample_bytree: 1.0,
            gamma: 0.7,
            lambda: 1.0,
        }
    }
}

impl GbtParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(
                "gbt learning_rate must be positive".into(),
            ));
        }
        if self.max_depth < 1 || self.min_samples_leaf < 1 {
            return Err(Error::InvalidConfig(
                "gbt max_depth and min_samples_leaf must be at least 1".into(),
            ));
        }
        for (name, v) in [
            ("subsample", self.subsample),
            ("colsample_bytree", self.colsample_bytree),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "gbt {name} must lie in (0, 1]"
                )));
            }
        }
        if !(self.gamma >= 0.0 && self.lambda >= 0.0 && self.min_child_weight >= 0.0) {
            return Err(Error::InvalidConfig(
                "gbt gamma, lambda and min_child_weight must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtModel {
    pub base_score: f64,
    pub learning_rate: f64,
    pub trees: Vec<Tree>,
}

impl GbtModel {
    /// Additive score `F(x)`, accumulated in tree order.
    pub fn margin(&self, row: &[f64]) -> f64 {
        let mut f = self.base_score;
        for t in &self.trees {
            f += self.learning_rate * t.predict(row);
        }
        f
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        sigmoid(self.margin(row))
    }
}

/// Per-round training diagnostics; entry 0 is the base score before any tree.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GbtHistory {
    /// Mean logistic loss on the training rows.
    pub mean_loss: Vec<f64>,
    /// Summed logistic loss plus the accumulated L2 leaf penalty
    /// `½ λ Σ (learning_rate · w)²` over every leaf added so far.
    pub objective: Vec<f64>,
}

fn total_loss(y: &[f64], f: &[f64]) -> f64 {
    y.iter().zip(f).map(|(&yi, &fi)| logloss(yi, fi)).sum()
}

pub fn fit(x: &Matrix, y: &[u8], params: &GbtParams, seed: u64) -> Result<(GbtModel, GbtHistory)> {
    params.validate()?;
    let y = binary_targets(y)?;
    let n = x.n_rows();
    let rate = y.iter().sum::<f64>() / n as f64;
    let base_score = (rate / (1.0 - rate)).ln();
    let mut model = GbtModel {
        base_score,
        learning_rate: params.learning_rate,
        trees: Vec::with_capacity(params.n_estimators),
    };
    let mut f = vec![base_score; n];
    let mut history = GbtHistory::default();
    let loss = total_loss(&y, &f);
    history.mean_loss.push(loss / n as f64);
    history.objective.push(loss);
    if params.n_estimators == 0 {
        return Ok((model, history));
    }

    let order = ColumnOrder::new(x);
    let config = TreeConfig {
        max_depth: params.max_depth,
        min_samples_leaf: params.min_samples_leaf,
        min_child_weight: params.min_child_weight,
        criterion: Criterion::SecondOrder,
        lambda: params.lambda,
        gamma: params.gamma,
        seed,
        ..TreeConfig::default()
    };
    let all_rows: Vec<usize> = (0..n).collect();
    let n_sub = ((params.subsample * n as f64).round() as usize).clamp(1, n);
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    let mut penalty = 0.0;

    for round in 0..params.n_estimators {
        let mut rng = rng::stream(seed, round as u64);
        for i in 0..n {
            let p = sigmoid(f[i]);
            grad[i] = p - y[i];
            hess[i] = p * (1.0 - p);
        }
        let rows = if n_sub < n {
            let mut r = sample(&mut rng, n, n_sub).into_vec();
            r.sort_unstable();
            r
        } else {
            all_rows.clone()
        };
        let features = trees::tree_features(x.n_cols(), params.colsample_bytree, &mut rng);
        let tree = trees::grow(x, &order, &grad, &hess, &rows, &features, &config, &mut rng);

        for (fi, row) in f.iter_mut().zip(x.rows()) {
            *fi += params.learning_rate * tree.predict(row);
        }
        penalty += 0.5
            * params.lambda
            * tree
                .leaf_values()
                .map(|w| (params.learning_rate * w).powi(2))
                .sum::<f64>();
        let loss = total_loss(&y, &f);
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss { round });
        }
        history.mean_loss.push(loss / n as f64);
        history.objective.push(loss + penalty);
        model.trees.push(tree);
    }
    Ok((model, history))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_rounds_predict_prior() {
        let x = Matrix::new(4, 1, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        let p = GbtParams {
            n_estimators: 0,
            ..GbtParams::default()
        };
        let (m, _) = fit(&x, &[0, 0, 0, 1], &p, 0).unwrap();
        assert!(m.trees.is_empty());
        for r in x.rows() {
            assert!((m.predict(r) - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn balanced_single_leaf_round_is_neutral() {
        // p = 0.5 on labels {1,1,0,0}: G = 0, so the single leaf is 0.
        let x = Matrix::new(4, 1, vec![1.0, 1.0, 1.0, 1.0]).unwrap();
        let p = GbtParams {
            n_estimators: 1,
            lambda: 1.0,
            ..GbtParams::default()
        };
        let (m, _) = fit(&x, &[1, 1, 0, 0], &p, 0).unwrap();
        assert_eq!(m.base_score, 0.0);
        assert_eq!(m.trees[0].nodes.len(), 1);
        assert_eq!(m.trees[0].predict(&[1.0]), 0.0);
        assert_eq!(m.predict(&[1.0]), 0.5);
    }

    #[test]
    fn margin_matches_training_accumulation() {
        let x = Matrix::new(12, 2, (0..24).map(|i| ((i * 5) % 7) as f64).collect()).unwrap();
        let y: Vec<u8> = (0..12).map(|i| u8::from(x.get(i, 0) > 3.0)).collect();
        let p = GbtParams {
            n_estimators: 5,
            gamma: 0.0,
            min_child_weight: 0.0,
            ..GbtParams::default()
        };
        let (m, h) = fit(&x, &y, &p, 0).unwrap();
        let yf: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
        let f: Vec<f64> = x.rows().map(|r| m.margin(r)).collect();
        assert_eq!(total_loss(&yf, &f) / 12.0, *h.mean_loss.last().unwrap());
    }
}
