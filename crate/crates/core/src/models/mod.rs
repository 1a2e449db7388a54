//! The four probability-of-default classifiers behind one interface.
//!
//! [`fit`] trains any kind from a [`Hyperparameters`] value; the result is a
//! [`FittedModel`] that predicts probabilities, serializes to a single JSON document
//! and implements [`Predictor`] for attribution.

pub mod adaboost;
pub mod forest;
pub mod gbt;
pub mod logistic;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataprep::Dataset;
use crate::error::{Error, Result};
use crate::io;
use crate::matrix::Matrix;

pub use adaboost::{AdaBoostModel, AdaBoostParams};
pub use forest::{ForestModel, RfParams};
pub use gbt::{GbtHistory, GbtModel, GbtParams};
pub use logistic::{LinearModel, LrParams};

/// Anything that maps a feature row to a probability-like output.
pub trait Predictor: Sync {
    fn n_features(&self) -> usize;
    fn predict_row(&self, row: &[f64]) -> f64;
}

/// Wraps a closure as a [`Predictor`].
pub struct FnPredictor<F> {
    n_features: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> FnPredictor<F> {
    pub fn new(n_features: usize, f: F) -> Self {
        Self { n_features, f }
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync> Predictor for FnPredictor<F> {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_row(&self, row: &[f64]) -> f64 {
        (self.f)(row)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Lr,
    Adaboost,
    Rf,
    Gbt,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::Lr,
        ModelKind::Adaboost,
        ModelKind::Rf,
        ModelKind::Gbt,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Lr => "lr",
            ModelKind::Adaboost => "adaboost",
            ModelKind::Rf => "rf",
            ModelKind::Gbt => "gbt",
        }
    }

    /// Display name used in report tables.
    pub fn label(self) -> &'static str {
        match self {
            ModelKind::Lr => "Logistic Regression",
            ModelKind::Adaboost => "AdaBoost",
            ModelKind::Rf => "Random Forest",
            ModelKind::Gbt => "Gradient Boosting",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lr" => Ok(ModelKind::Lr),
            "adaboost" => Ok(ModelKind::Adaboost),
            "rf" => Ok(ModelKind::Rf),
            "gbt" => Ok(ModelKind::Gbt),
            other => Err(Error::InvalidConfig(format!(
                "unknown model kind `{other}` (expected lr, adaboost, rf or gbt)"
            ))),
        }
    }
}

/// Per-kind training settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Hyperparameters {
    Lr(LrParams),
    Adaboost(AdaBoostParams),
    Rf(RfParams),
    Gbt(GbtParams),
}

impl Hyperparameters {
    pub fn default_for(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Lr => Hyperparameters::Lr(LrParams::default()),
            ModelKind::Adaboost => Hyperparameters::Adaboost(AdaBoostParams::default()),
            ModelKind::Rf => Hyperparameters::Rf(RfParams::default()),
            ModelKind::Gbt => Hyperparameters::Gbt(GbtParams::default()),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            Hyperparameters::Lr(_) => ModelKind::Lr,
            Hyperparameters::Adaboost(_) => ModelKind::Adaboost,
            Hyperparameters::Rf(_) => ModelKind::Rf,
            Hyperparameters::Gbt(_) => ModelKind::Gbt,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Hyperparameters::Lr(p) => p.validate(),
            Hyperparameters::Adaboost(p) => p.validate(),
            Hyperparameters::Rf(p) => p.validate(),
            Hyperparameters::Gbt(p) => p.validate(),
        }
    }
}

/// Learned parameters of each model family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Parameters {
    Linear(LinearModel),
    Adaboost(AdaBoostModel),
    Forest(ForestModel),
    Boosted(GbtModel),
}

/// A trained classifier plus the metadata needed to apply it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub kind: ModelKind,
    pub hyperparameters: Hyperparameters,
    pub seed: u64,
    pub feature_names: Vec<String>,
    pub parameters: Parameters,
}

impl FittedModel {
    /// Probability of default for one row (no column check).
    pub fn predict_one(&self, row: &[f64]) -> f64 {
        let p = match &self.parameters {
            Parameters::Linear(m) => m.predict(row),
            Parameters::Adaboost(m) => m.predict(row),
            Parameters::Forest(m) => m.predict(row),
            Parameters::Boosted(m) => m.predict(row),
        };
        p.clamp(0.0, 1.0)
    }

    /// Probabilities for every row of a matrix with the training column count.
    pub fn predict_matrix(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.n_cols() != self.feature_names.len() {
            return Err(Error::InvalidInput(format!(
                "model expects {} features, got {}",
                self.feature_names.len(),
                x.n_cols()
            )));
        }
        Ok((0..x.n_rows())
            .into_par_iter()
            .map(|i| self.predict_one(x.row(i)))
            .collect())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        io::save_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        io::load_json(path)
    }
}

impl Predictor for FittedModel {
    fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    fn predict_row(&self, row: &[f64]) -> f64 {
        self.predict_one(row)
    }
}

/// Converts `{0,1}` labels to floats, rejecting single-class input.
pub(crate) fn binary_targets(y: &[u8]) -> Result<Vec<f64>> {
    if y.iter().any(|&v| v > 1) {
        return Err(Error::InvalidInput("labels must be 0 or 1".into()));
    }
    let pos = y.iter().filter(|&&v| v == 1).count();
    if pos == 0 || pos == y.len() {
        return Err(Error::SingleClass);
    }
    Ok(y.iter().map(|&v| f64::from(v)).collect())
}

/// Trains a model on a feature matrix.
pub fn fit_matrix(
    x: &Matrix,
    y: &[u8],
    feature_names: Vec<String>,
    hyperparameters: &Hyperparameters,
    seed: u64,
) -> Result<FittedModel> {
    hyperparameters.validate()?;
    if x.n_rows() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.n_rows(),
            right: y.len(),
        });
    }
    if feature_names.len() != x.n_cols() {
        return Err(Error::LengthMismatch {
            left: feature_names.len(),
            right: x.n_cols(),
        });
    }
    if !x.all_finite() {
        return Err(Error::NonFinite("training features".into()));
    }
    let parameters = match hyperparameters {
        Hyperparameters::Lr(p) => Parameters::Linear(logistic::fit(x, y, p)?),
        Hyperparameters::Adaboost(p) => Parameters::Adaboost(adaboost::fit(x, y, p, seed)?),
        Hyperparameters::Rf(p) => Parameters::Forest(forest::fit(x, y, p, seed)?),
        Hyperparameters::Gbt(p) => Parameters::Boosted(gbt::fit(x, y, p, seed)?.0),
    };
    Ok(FittedModel {
        kind: hyperparameters.kind(),
        hyperparameters: hyperparameters.clone(),
        seed,
        feature_names,
        parameters,
    })
}

/// Trains a model on a labeled dataset.
pub fn fit(train: &Dataset, hyperparameters: &Hyperparameters, seed: u64) -> Result<FittedModel> {
    fit_matrix(
        &train.matrix(),
        &train.labels(),
        train.column_names(),
        hyperparameters,
        seed,
    )
}

/// Probability of default for every row; the dataset columns must match training.
pub fn predict_proba(model: &FittedModel, rows: &Dataset) -> Result<Vec<f64>> {
    let names = rows.column_names();
    if names != model.feature_names {
        return Err(Error::ColumnMismatch {
            expected: model.feature_names.clone(),
            found: names,
        });
    }
    model.predict_matrix(&rows.matrix())
}

/// Label 1 iff probability ≥ threshold.
pub fn classify(probabilities: &[f64], threshold: f64) -> Result<Vec<u8>> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::InvalidThreshold(threshold));
    }
    Ok(probabilities
        .iter()
        .map(|&p| u8::from(p >= threshold))
        .collect())
}

#[inline]
pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
#[inline]
pub(crate) fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Logistic loss of label `y` at margin `z`.
#[inline]
pub(crate) fn logloss(y: f64, z: f64) -> f64 {
    softplus(z) - y * z
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classify_boundary_is_inclusive() {
        assert_eq!(classify(&[0.5, 0.49, 0.51], 0.5).unwrap(), vec![1, 0, 1]);
        assert!(matches!(
            classify(&[0.5], 1.5),
            Err(Error::InvalidThreshold(_))
        ));
    }

    #[test]
    fn raising_threshold_never_adds_positives() {
        let p: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
        let mut prev = classify(&p, 0.0).unwrap();
        for t in 1..=20 {
            let cur = classify(&p, t as f64 / 20.0).unwrap();
            assert!(cur.iter().zip(&prev).all(|(c, q)| c <= q));
            prev = cur;
        }
    }

    #[test]
    fn kind_roundtrip() {
        for k in ModelKind::ALL {
            assert_eq!(k.as_str().parse::<ModelKind>().unwrap(), k);
            assert_eq!(Hyperparameters::default_for(k).kind(), k);
        }
        assert!("svm".parse::<ModelKind>().is_err());
    }

    #[test]
    fn single_class_is_rejected() {
        let x = Matrix::new(3, 1, vec![1.0, 2.0, 3.0]).unwrap();
        for k in ModelKind::ALL {
            let r = fit_matrix(
                &x,
                &[0, 0, 0],
                vec!["a".into()],
                &Hyperparameters::default_for(k),
                0,
            );
            assert!(matches!(r, Err(Error::SingleClass)), "{k}");
        }
    }

    #[test]
    fn sigmoid_by_hand() {
        assert!((sigmoid(-1.0986) - 0.25).abs() < 1e-4);
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
        assert!((softplus(-800.0)).abs() < 1e-300);
        assert_eq!(softplus(800.0), 800.0);
    }

    #[test]
    fn json_roundtrip_every_kind() {
        let x = Matrix::new(8, 2, (0..16).map(|i| ((i * 7) % 5) as f64).collect()).unwrap();
        let y = [0, 1, 0, 1, 1, 0, 0, 1];
        for k in ModelKind::ALL {
            let hp = match Hyperparameters::default_for(k) {
                Hyperparameters::Rf(p) => Hyperparameters::Rf(RfParams {
                    n_estimators: 5,
                    ..p
                }),
                other => other,
            };
            let m = fit_matrix(&x, &y, vec!["a".into(), "b".into()], &hp, 3).unwrap();
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("m.json");
            m.save(&path).unwrap();
            let back = FittedModel::load(&path).unwrap();
            assert_eq!(back, m);
            assert_eq!(
                back.predict_matrix(&x).unwrap(),
                m.predict_matrix(&x).unwrap()
            );
        }
    }

    #[test]
    fn column_mismatch_is_rejected() {
        let x = Matrix::new(4, 1, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        let m = fit_matrix(
            &x,
            &[0, 0, 1, 1],
            vec!["a".into()],
            &Hyperparameters::default_for(ModelKind::Lr),
            0,
        )
        .unwrap();
        let wide = Matrix::new(1, 2, vec![0.0, 0.0]).unwrap();
        assert!(m.predict_matrix(&wide).is_err());
    }
}
