//! Company default prediction with explainable attributions.
//!
//! The crate covers the whole desk-scale workflow:
//!
//! * [`synthgen`] builds seeded synthetic company panels with a planted default signal,
//! * [`dataprep`] labels one-year-ahead defaults, computes financial ratios, splits by
//!   year and standardizes,
//! * [`smote`] oversamples the minority class,
//! * [`trees`] and [`models`] provide logistic regression, AdaBoost, random forest and a
//!   second-order gradient-boosted tree learner,
//! * [`metrics`] evaluates binary classifiers,
//! * [`shapley`] computes exact Shapley attributions by coalition enumeration,
//! * [`grading`] maps probabilities onto A–F rating grades,
//! * [`alignment`] scores agreement between analyst feature weights and model importance,
//! * [`pipeline`] and [`report`] orchestrate everything and emit plot-ready tables.

// Validation is written as `!(x >= 0.0)` on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod alignment;
pub mod dataprep;
pub mod error;
pub mod grading;
pub mod io;
pub mod matrix;
pub mod metrics;
pub mod models;
pub mod pipeline;
pub mod report;
pub mod rng;
pub mod shapley;
pub mod smote;
pub mod synthgen;
pub mod trees;

pub use alignment::{AlignmentReport, ExpertSurvey};
pub use dataprep::{CompanyRecord, Dataset, FeatureSchema, FeatureVector, ScalerParams, SplitSpec};
pub use error::{Error, Result};
pub use grading::{Grade, GradeCalibration, GradeConfusion};
pub use matrix::Matrix;
pub use metrics::EvalReport;
pub use models::{FittedModel, Hyperparameters, ModelKind, Predictor};
pub use shapley::{AttributionConfig, AttributionReport};
pub use synthgen::GeneratorConfig;
pub use trees::{Tree, TreeConfig, TreeNode};
