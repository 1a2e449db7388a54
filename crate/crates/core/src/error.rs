use thiserror::Error;

use crate::grading::Grade;

#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate statement for company {company_id} in year {year}")]
    DuplicateStatement { company_id: String, year: i32 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("training split is empty")]
    EmptyTrain,

    #[error("column mismatch: expected {expected:?}, found {found:?}")]
    ColumnMismatch {
        expected: Vec<String>,
        found: Vec<String>,
    },

    #[error(
        "target default rate {target:.5} is unreachable at signal strength {signal}; \
         achievable range is [{low:.5}, {high:.5}]"
    )]
    InfeasibleCalibration {
        target: f64,
        signal: f64,
        low: f64,
        high: f64,
    },

    #[error("minority class has {minority} rows but k = {k}; use k < {minority}")]
    TooFewMinority { minority: usize, k: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("training labels contain a single class")]
    SingleClass,

    #[error("non-finite training loss at round {round}")]
    NonFiniteLoss { round: usize },

    #[error("threshold {0} outside [0, 1]")]
    InvalidThreshold(f64),

    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),

    #[error(
        "{players} players exceed the limit of {max}; group columns or reduce the feature set"
    )]
    TooManyPlayers { players: usize, max: usize },

    #[error("background set is empty")]
    EmptyBackground,

    #[error("no reference examples for grades {0:?}")]
    MissingGrades(Vec<Grade>),

    #[error("per-grade mean probabilities are not strictly increasing: {0:?}")]
    NonMonotoneCalibration(Vec<f64>),

    #[error("invalid interval table: {0}")]
    InvalidIntervals(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("analyst {analyst} distributes {total} points, expected 100")]
    SurveyTotal { analyst: String, total: u64 },

    #[error("unknown feature {feature} in survey (analyst {analyst})")]
    UnknownFeature { analyst: String, feature: String },

    #[error(
        "feature sets differ: only in expert survey {only_expert:?}, only in model {only_model:?}"
    )]
    FeatureSetMismatch {
        only_expert: Vec<String>,
        only_model: Vec<String>,
    },

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn in_stage(self, stage: &str) -> Error {
        Error::Stage {
            stage: stage.to_string(),
            source: Box::new(self),
        }
    }
}
