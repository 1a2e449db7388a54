//! L2-regularized logistic regression trained by full-batch gradient descent.
//!
//! Objective: mean logistic loss + (l2 / 2)·‖w‖², bias unregularized.

use serde::{Deserialize, Serialize};

use super::{binary_targets, logloss, sigmoid};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LrParams {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
}

impl Default for LrParams {
    fn default() -> Self {
        Self {
            learning_rate: 0.5,
            epochs: 500,
            l2: 1e-4,
        }
    }
}

impl LrParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(
                "lr learning_rate must be positive".into(),
            ));
        }
        if self.epochs < 1 {
            return Err(Error::InvalidConfig("lr epochs must be at least 1".into()));
        }
        if !(self.l2 >= 0.0) {
            return Err(Error::InvalidConfig("lr l2 must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearModel {
    pub fn margin(&self, row: &[f64]) -> f64 {
        self.bias
            + self
                .weights
                .iter()
                .zip(row)
                .map(|(w, x)| w * x)
                .sum::<f64>()
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        sigmoid(self.margin(row))
    }
}

/// Training objective at parameters `(w, b)`.
pub fn logistic_objective(x: &Matrix, y: &[f64], w: &[f64], b: f64, l2: f64) -> f64 {
    let n = x.n_rows() as f64;
    let loss: f64 = x
        .rows()
        .zip(y)
        .map(|(row, &yi)| {
            let z = b + w.iter().zip(row).map(|(wj, xj)| wj * xj).sum::<f64>();
            logloss(yi, z)
        })
        .sum();
    loss / n + 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>()
}

/// Analytic gradient of [`logistic_objective`]: `(∂/∂w, ∂/∂b)`.
pub fn logistic_gradient(x: &Matrix, y: &[f64], w: &[f64], b: f64, l2: f64) -> (Vec<f64>, f64) {
    let n = x.n_rows() as f64;
    let mut gw = vec![0.0; w.len()];
    let mut gb = 0.0;
    for (row, &yi) in x.rows().zip(y) {
        let z = b + w.iter().zip(row).map(|(wj, xj)| wj * xj).sum::<f64>();
        let r = sigmoid(z) - yi;
        gb += r;
        for (g, xj) in gw.iter_mut().zip(row) {
            *g += r * xj;
        }
    }
    for (g, wj) in gw.iter_mut().zip(w) {
        *g = *g / n + l2 * wj;
    }
    (gw, gb / n)
}

pub fn fit(x: &Matrix, y: &[u8], params: &LrParams) -> Result<LinearModel> {
    let y = binary_targets(y)?;
    let mut w = vec![0.0; x.n_cols()];
    let mut b = 0.0;
    for epoch in 0..params.epochs {
        let (gw, gb) = logistic_gradient(x, &y, &w, b, params.l2);
        for (wj, g) in w.iter_mut().zip(&gw) {
            *wj -= params.learning_rate * g;
        }
        b -= params.learning_rate * gb;
        if !b.is_finite() || w.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteLoss { round: epoch });
        }
    }
    Ok(LinearModel {
        weights: w,
        bias: b,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_data_fits_perfectly() {
        let pts = [
            (-2.0, -1.0),
            (-1.0, -2.0),
            (-1.5, -0.5),
            (1.0, 2.0),
            (2.0, 1.0),
            (0.5, 1.5),
        ];
        let x =
            Matrix::from_rows(&pts.iter().map(|&(a, b)| vec![a, b]).collect::<Vec<_>>()).unwrap();
        let y = [0, 0, 0, 1, 1, 1];
        let m = fit(&x, &y, &LrParams::default()).unwrap();
        for (row, &label) in x.rows().zip(&y) {
            assert_eq!(u8::from(m.predict(row) >= 0.5), label);
        }
    }

    #[test]
    fn zero_model_predicts_half() {
        let m = LinearModel {
            weights: vec![0.0; 3],
            bias: 0.0,
        };
        assert_eq!(m.predict(&[1.0, -4.0, 9.0]), 0.5);
    }
}
