//! Data preparation: raw yearly statements to labeled, encoded, standardized features.
//!
//! The flow is `label_records` (one-year default horizon) → `compute_ratios`
//! (ratio features and country one-hot) → `split` (by statement year) →
//! `fit_scaler` / `apply_scaler` (train-only standardization).

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng;

/// Continuous model inputs, in column order.
pub const RATIO_COLUMNS: [&str; 9] = [
    "r1_solvency",
    "r2_solvency",
    "r1_liquidity",
    "r2_liquidity",
    "r1_profitability",
    "r2_profitability",
    "r3_profitability",
    "time_in_business",
    "sales_evolution",
];

/// Raw statement CSV header, in field order.
pub const RECORD_COLUMNS: [&str; 19] = [
    "company_id",
    "statement_year",
    "out_of_business",
    "country_code",
    "total_employees",
    "net_worth",
    "total_assets",
    "gross_income",
    "total_liabilities",
    "current_ratio",
    "cash_liquid_assets",
    "sales",
    "working_capital",
    "net_income",
    "incorporation_year",
    "previous_sales",
    "financial_debt",
    "total_current_assets",
    "total_current_liabilities",
];

pub const DEFAULT_COUNTRIES: [&str; 6] = ["FR", "GB", "BE", "ES", "NL", "PT"];

/// Prefix of the one-hot country columns.
pub const COUNTRY_PREFIX: &str = "country_";

/// One raw yearly financial statement. Any field may be missing.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CompanyRecord {
    pub company_id: String,
    pub statement_year: Option<i32>,
    pub out_of_business: Option<bool>,
    pub country_code: Option<String>,
    pub total_employees: Option<u32>,
    pub net_worth: Option<f64>,
    pub total_assets: Option<f64>,
    pub gross_income: Option<f64>,
    pub total_liabilities: Option<f64>,
    pub current_ratio: Option<f64>,
    pub cash_liquid_assets: Option<f64>,
    pub sales: Option<f64>,
    pub working_capital: Option<f64>,
    pub net_income: Option<f64>,
    pub incorporation_year: Option<i32>,
    pub previous_sales: Option<f64>,
    pub financial_debt: Option<f64>,
    pub total_current_assets: Option<f64>,
    pub total_current_liabilities: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledRecord {
    pub record: CompanyRecord,
    /// 1 when the company is out of business in the following year.
    pub label: u8,
}

#[derive(Debug, Clone, Default)]
pub struct Labeling {
    pub rows: Vec<LabeledRecord>,
    /// Records lacking an id, a statement year or an out-of-business flag.
    pub unusable: usize,
}

/// Attaches the one-year-ahead default label.
///
/// A statement for year `t` of a live company is kept when the same company also
/// has a statement for `t + 1`; the label is that statement's out-of-business flag.
/// Output follows input order.
pub fn label_records(records: &[CompanyRecord]) -> Result<Labeling> {
    let mut status: HashMap<(&str, i32), bool> = HashMap::with_capacity(records.len());
    let mut unusable = 0;
    for rec in records {
        let (Some(year), Some(oob)) = (rec.statement_year, rec.out_of_business) else {
            unusable += 1;
            continue;
        };
        if rec.company_id.is_empty() {
            unusable += 1;
            continue;
        }
        if status
            .insert((rec.company_id.as_str(), year), oob)
            .is_some()
        {
            return Err(Error::DuplicateStatement {
                company_id: rec.company_id.clone(),
                year,
            });
        }
    }

    let mut rows = Vec::new();
    for rec in records {
        let (Some(year), Some(false)) = (rec.statement_year, rec.out_of_business) else {
            continue;
        };
        if rec.company_id.is_empty() {
            continue;
        }
        if let Some(&next) = status.get(&(rec.company_id.as_str(), year + 1)) {
            rows.push(LabeledRecord {
                record: rec.clone(),
                label: u8::from(next),
            });
        }
    }
    Ok(Labeling { rows, unusable })
}

/// Why a labeled record could not become a feature row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rejection {
    Missing(&'static str),
    ZeroDenominator(&'static str),
    NonFinite(&'static str),
    UnknownCountry(String),
    NegativeTimeInBusiness,
}

impl Rejection {
    /// Stable reason code used in run reports.
    pub fn code(&self) -> String {
        match self {
            Rejection::Missing(field) => format!("missing:{field}"),
            Rejection::ZeroDenominator(field) => format!("zero_denominator:{field}"),
            Rejection::NonFinite(column) => format!("non_finite:{column}"),
            Rejection::UnknownCountry(_) => "unknown_country".to_string(),
            Rejection::NegativeTimeInBusiness => "negative_time_in_business".to_string(),
        }
    }
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rejection::UnknownCountry(code) => write!(f, "unknown_country:{code}"),
            other => f.write_str(&other.code()),
        }
    }
}

/// Column layout of a feature matrix: the nine ratio columns followed by one
/// indicator per known country.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub countries: Vec<String>,
}

impl Default for FeatureSchema {
    fn default() -> Self {
        Self::new(DEFAULT_COUNTRIES.iter().map(|c| c.to_string()).collect())
    }
}

impl FeatureSchema {
    pub fn new(countries: Vec<String>) -> Self {
        Self { countries }
    }

    pub fn n_continuous(&self) -> usize {
        RATIO_COLUMNS.len()
    }

    pub fn n_features(&self) -> usize {
        RATIO_COLUMNS.len() + self.countries.len()
    }

    pub fn column_names(&self) -> Vec<String> {
        RATIO_COLUMNS
            .iter()
            .map(|c| c.to_string())
            .chain(
                self.countries
                    .iter()
                    .map(|c| format!("{COUNTRY_PREFIX}{c}")),
            )
            .collect()
    }

    /// Recovers a schema from full column names, checking the ratio prefix.
    pub fn from_column_names(names: &[String]) -> Result<Self> {
        let ratio_ok = names.len() >= RATIO_COLUMNS.len()
            && names.iter().zip(RATIO_COLUMNS).all(|(a, b)| a == b);
        let countries: Option<Vec<String>> = names[RATIO_COLUMNS.len().min(names.len())..]
            .iter()
            .map(|n| n.strip_prefix(COUNTRY_PREFIX).map(str::to_string))
            .collect();
        match (ratio_ok, countries) {
            (true, Some(countries)) => Ok(Self { countries }),
            _ => Err(Error::ColumnMismatch {
                expected: FeatureSchema::default().column_names(),
                found: names.to_vec(),
            }),
        }
    }
}

/// A model input row: ratios, country one-hot, and label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub company_id: String,
    pub statement_year: i32,
    /// Laid out per [`FeatureSchema::column_names`].
    pub features: Vec<f64>,
    pub label: u8,
}

impl FeatureVector {
    pub fn ratio(&self, name: &str) -> Option<f64> {
        RATIO_COLUMNS
            .iter()
            .position(|c| *c == name)
            .map(|i| self.features[i])
    }
}

fn require(value: Option<f64>, field: &'static str) -> std::result::Result<f64, Rejection> {
    value.ok_or(Rejection::Missing(field))
}

fn ratio(
    num: f64,
    den: f64,
    den_field: &'static str,
    column: &'static str,
) -> std::result::Result<f64, Rejection> {
    if den == 0.0 {
        return Err(Rejection::ZeroDenominator(den_field));
    }
    let v = num / den;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Rejection::NonFinite(column))
    }
}

/// Computes the ratio features and country encoding for one labeled statement.
pub fn compute_ratios(
    labeled: &LabeledRecord,
    schema: &FeatureSchema,
) -> std::result::Result<FeatureVector, Rejection> {
    let r = &labeled.record;
    let year = r
        .statement_year
        .ok_or(Rejection::Missing("statement_year"))?;
    let country = r
        .country_code
        .as_deref()
        .ok_or(Rejection::Missing("country_code"))?;
    let net_worth = require(r.net_worth, "net_worth")?;
    let total_assets = require(r.total_assets, "total_assets")?;
    let financial_debt = require(r.financial_debt, "financial_debt")?;
    let gross_income = require(r.gross_income, "gross_income")?;
    let tca = require(r.total_current_assets, "total_current_assets")?;
    let tcl = require(r.total_current_liabilities, "total_current_liabilities")?;
    let cash = require(r.cash_liquid_assets, "cash_liquid_assets")?;
    let sales = require(r.sales, "sales")?;
    let working_capital = require(r.working_capital, "working_capital")?;
    let net_income = require(r.net_income, "net_income")?;
    let incorporation = r
        .incorporation_year
        .ok_or(Rejection::Missing("incorporation_year"))?;
    let previous_sales = require(r.previous_sales, "previous_sales")?;

    let time_in_business = f64::from(year - incorporation);
    if time_in_business < 0.0 {
        return Err(Rejection::NegativeTimeInBusiness);
    }
    let Some(country_idx) = schema.countries.iter().position(|c| c == country) else {
        return Err(Rejection::UnknownCountry(country.to_string()));
    };

    let sales_evolution = sales - previous_sales;
    let ratios = [
        ratio(net_worth, total_assets, "total_assets", "r1_solvency")?,
        ratio(financial_debt, gross_income, "gross_income", "r2_solvency")?,
        ratio(tca, tcl, "total_current_liabilities", "r1_liquidity")?,
        ratio(cash, sales, "sales", "r2_liquidity")?,
        ratio(working_capital, sales, "sales", "r1_profitability")?,
        net_income,
        ratio(
            gross_income,
            total_assets,
            "total_assets",
            "r3_profitability",
        )?,
        time_in_business,
        sales_evolution,
    ];
    for (v, name) in ratios.iter().zip(RATIO_COLUMNS) {
        if !v.is_finite() {
            return Err(Rejection::NonFinite(name));
        }
    }

    let mut features = Vec::with_capacity(schema.n_features());
    features.extend_from_slice(&ratios);
    features.extend((0..schema.countries.len()).map(|i| if i == country_idx { 1.0 } else { 0.0 }));
    Ok(FeatureVector {
        company_id: r.company_id.clone(),
        statement_year: year,
        features,
        label: labeled.label,
    })
}

/// Counts of rejected rows keyed by reason code.
pub type RejectionCounts = BTreeMap<String, usize>;

/// Feature rows sharing a schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub schema: FeatureSchema,
    pub rows: Vec<FeatureVector>,
}

impl Dataset {
    pub fn new(schema: FeatureSchema, rows: Vec<FeatureVector>) -> Self {
        Self { schema, rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_names(&self) -> Vec<String> {
        self.schema.column_names()
    }

    pub fn matrix(&self) -> Matrix {
        let n_cols = self.schema.n_features();
        let mut data = Vec::with_capacity(self.rows.len() * n_cols);
        for row in &self.rows {
            data.extend_from_slice(&row.features);
        }
        Matrix::new(self.rows.len(), n_cols, data).expect("rows follow the schema")
    }

    pub fn labels(&self) -> Vec<u8> {
        self.rows.iter().map(|r| r.label).collect()
    }

    pub fn positives(&self) -> usize {
        self.rows.iter().filter(|r| r.label == 1).count()
    }

    /// Checks every row against the schema width.
    pub fn validate(&self) -> Result<()> {
        let width = self.schema.n_features();
        for (i, row) in self.rows.iter().enumerate() {
            if row.features.len() != width {
                return Err(Error::InvalidInput(format!(
                    "row {i} has {} features, schema has {width}",
                    row.features.len()
                )));
            }
            if row.label > 1 {
                return Err(Error::InvalidInput(format!(
                    "row {i} has label {}",
                    row.label
                )));
            }
        }
        Ok(())
    }
}

/// Runs `compute_ratios` over labeled rows, collecting rejections by reason.
pub fn build_features(
    labeled: &[LabeledRecord],
    schema: &FeatureSchema,
) -> (Dataset, RejectionCounts) {
    let mut rows = Vec::with_capacity(labeled.len());
    let mut rejections = RejectionCounts::new();
    for rec in labeled {
        match compute_ratios(rec, schema) {
            Ok(fv) => rows.push(fv),
            Err(reason) => {
                log::debug!(
                    "rejected {} ({:?}): {reason}",
                    rec.record.company_id,
                    rec.record.statement_year
                );
                *rejections.entry(reason.code()).or_default() += 1;
            }
        }
    }
    (Dataset::new(schema.clone(), rows), rejections)
}

/// Year-based train/test/validation split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitSpec {
    pub train_years: (i32, i32),
    pub validation_years: (i32, i32),
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_years: (2004, 2012),
            validation_years: (2013, 2018),
            test_fraction: 0.3,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        let (a0, a1) = self.train_years;
        let (b0, b1) = self.validation_years;
        if a0 > a1 || b0 > b1 {
            return Err(Error::InvalidConfig("year ranges must be ordered".into()));
        }
        if a0 <= b1 && b0 <= a1 {
            return Err(Error::InvalidConfig(
                "train and validation years overlap".into(),
            ));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "test_fraction {} must lie strictly between 0 and 1",
                self.test_fraction
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Splits {
    pub train: Dataset,
    pub test: Dataset,
    pub validation: Dataset,
    /// Rows whose year falls in neither range.
    pub out_of_range: usize,
}

/// Splits by statement year, then shuffles the train-year rows with `spec.seed`
/// and cuts off `test_fraction` of them as the test set.
pub fn split(dataset: &Dataset, spec: &SplitSpec) -> Result<Splits> {
    spec.validate()?;
    let in_range = |y: i32, (lo, hi): (i32, i32)| y >= lo && y <= hi;
    let mut train_pool = Vec::new();
    let mut validation = Vec::new();
    let mut out_of_range = 0;
    for row in &dataset.rows {
        if in_range(row.statement_year, spec.train_years) {
            train_pool.push(row.clone());
        } else if in_range(row.statement_year, spec.validation_years) {
            validation.push(row.clone());
        } else {
            out_of_range += 1;
        }
    }
    let mut rng = rng::seeded(spec.seed);
    train_pool.shuffle(&mut rng);
    let n_test = (train_pool.len() as f64 * spec.test_fraction).round() as usize;
    let n_train = train_pool.len() - n_test;
    if n_train == 0 {
        return Err(Error::EmptyTrain);
    }
    let test = train_pool.split_off(n_train);
    let schema = dataset.schema.clone();
    Ok(Splits {
        train: Dataset::new(schema.clone(), train_pool),
        test: Dataset::new(schema.clone(), test),
        validation: Dataset::new(schema, validation),
        out_of_range,
    })
}

/// Standardization parameters for the continuous columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub columns: Vec<String>,
    pub mean: Vec<f64>,
    /// Population standard deviation; 1.0 for constant columns.
    pub std: Vec<f64>,
    pub constant: Vec<bool>,
}

/// Fits per-column mean and population standard deviation on the ratio columns.
pub fn fit_scaler(train: &Dataset) -> Result<ScalerParams> {
    if train.is_empty() {
        return Err(Error::EmptyTrain);
    }
    let k = train.schema.n_continuous();
    let n = train.len() as f64;
    let mut mean = vec![0.0; k];
    let mut lo = vec![f64::INFINITY; k];
    let mut hi = vec![f64::NEG_INFINITY; k];
    for row in &train.rows {
        for j in 0..k {
            let v = row.features[j];
            mean[j] += v;
            lo[j] = lo[j].min(v);
            hi[j] = hi[j].max(v);
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; k];
    for row in &train.rows {
        for j in 0..k {
            let d = row.features[j] - mean[j];
            var[j] += d * d;
        }
    }
    let constant: Vec<bool> = (0..k).map(|j| lo[j] == hi[j]).collect();
    let std = (0..k)
        .map(|j| {
            if constant[j] {
                1.0
            } else {
                (var[j] / n).sqrt()
            }
        })
        .collect();
    for (j, c) in constant.iter().enumerate() {
        if *c {
            log::warn!("column {} is constant on the train split", RATIO_COLUMNS[j]);
        }
    }
    Ok(ScalerParams {
        columns: RATIO_COLUMNS.iter().map(|c| c.to_string()).collect(),
        mean,
        std,
        constant,
    })
}

/// Applies `(x - mean) / std` to the ratio columns; one-hot columns and labels pass through.
pub fn apply_scaler(params: &ScalerParams, data: &Dataset) -> Result<Dataset> {
    let names = data.column_names();
    let k = params.columns.len();
    if k > names.len() || names[..k] != params.columns[..] {
        return Err(Error::ColumnMismatch {
            expected: params.columns.clone(),
            found: names,
        });
    }
    let rows = data
        .rows
        .iter()
        .map(|row| {
            let mut out = row.clone();
            for j in 0..k {
                out.features[j] = (row.features[j] - params.mean[j]) / params.std[j];
            }
            out
        })
        .collect();
    Ok(Dataset::new(data.schema.clone(), rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn statement(id: &str, year: i32, oob: bool) -> CompanyRecord {
        CompanyRecord {
            company_id: id.into(),
            statement_year: Some(year),
            out_of_business: Some(oob),
            ..Default::default()
        }
    }

    fn full_record() -> CompanyRecord {
        CompanyRecord {
            company_id: "c1".into(),
            statement_year: Some(2012),
            out_of_business: Some(false),
            country_code: Some("FR".into()),
            total_employees: Some(12),
            net_worth: Some(50.0),
            total_assets: Some(100.0),
            gross_income: Some(20.0),
            total_liabilities: Some(50.0),
            current_ratio: Some(1.5),
            cash_liquid_assets: Some(10.0),
            sales: Some(80.0),
            working_capital: Some(16.0),
            net_income: Some(4.0),
            incorporation_year: Some(2000),
            previous_sales: Some(70.0),
            financial_debt: Some(10.0),
            total_current_assets: Some(48.0),
            total_current_liabilities: Some(32.0),
        }
    }

    fn labeled(record: CompanyRecord) -> LabeledRecord {
        LabeledRecord { record, label: 0 }
    }

    #[test]
    fn default_next_year_is_positive() {
        let out =
            label_records(&[statement("a", 2010, false), statement("a", 2011, true)]).unwrap();
        assert_eq!(out.rows.len(), 1);
        assert_eq!(out.rows[0].record.statement_year, Some(2010));
        assert_eq!(out.rows[0].label, 1);
    }

    #[test]
    fn survival_is_negative() {
        let out =
            label_records(&[statement("a", 2010, false), statement("a", 2011, false)]).unwrap();
        assert_eq!(out.rows.len(), 1);
        assert_eq!(out.rows[0].label, 0);
    }

    #[test]
    fn single_year_and_gaps_yield_nothing() {
        assert!(label_records(&[statement("a", 2010, false)])
            .unwrap()
            .rows
            .is_empty());
        let gap =
            label_records(&[statement("a", 2010, false), statement("a", 2012, false)]).unwrap();
        assert!(gap.rows.is_empty());
    }

    #[test]
    fn defaulted_statements_are_never_emitted() {
        let recs = [statement("a", 2010, true), statement("a", 2011, true)];
        assert!(label_records(&recs).unwrap().rows.is_empty());
    }

    #[test]
    fn duplicate_statement_is_rejected() {
        let err =
            label_records(&[statement("a", 2010, false), statement("a", 2010, false)]).unwrap_err();
        assert!(
            matches!(err, Error::DuplicateStatement { ref company_id, year: 2010 } if company_id == "a")
        );
    }

    #[test]
    fn missing_status_is_unusable() {
        let mut rec = statement("a", 2010, false);
        rec.out_of_business = None;
        let out = label_records(&[rec, statement("a", 2011, false)]).unwrap();
        assert_eq!(out.unusable, 1);
        assert!(out.rows.is_empty());
    }

    #[test]
    fn ratio_formulas() {
        let fv = compute_ratios(&labeled(full_record()), &FeatureSchema::default()).unwrap();
        assert_eq!(fv.ratio("r1_solvency"), Some(0.5));
        assert_eq!(fv.ratio("r2_solvency"), Some(0.5));
        assert_eq!(fv.ratio("r1_liquidity"), Some(1.5));
        assert_eq!(fv.ratio("r2_liquidity"), Some(0.125));
        assert_eq!(fv.ratio("r1_profitability"), Some(0.2));
        assert_eq!(fv.ratio("r2_profitability"), Some(4.0));
        assert_eq!(fv.ratio("r3_profitability"), Some(0.2));
        assert_eq!(fv.ratio("time_in_business"), Some(12.0));
        assert_eq!(fv.ratio("sales_evolution"), Some(10.0));
        assert_eq!(&fv.features[9..], &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn zero_denominator_and_missing_are_rejected() {
        let mut rec = full_record();
        rec.gross_income = Some(0.0);
        let err = compute_ratios(&labeled(rec), &FeatureSchema::default()).unwrap_err();
        assert_eq!(err, Rejection::ZeroDenominator("gross_income"));

        let mut rec = full_record();
        rec.sales = None;
        let err = compute_ratios(&labeled(rec), &FeatureSchema::default()).unwrap_err();
        assert_eq!(err.code(), "missing:sales");
    }

    #[test]
    fn unknown_country_is_rejected() {
        let mut rec = full_record();
        rec.country_code = Some("DE".into());
        let err = compute_ratios(&labeled(rec), &FeatureSchema::default()).unwrap_err();
        assert_eq!(err, Rejection::UnknownCountry("DE".into()));
    }

    #[test]
    fn statement_before_incorporation_is_rejected() {
        let mut rec = full_record();
        rec.incorporation_year = Some(2013);
        let err = compute_ratios(&labeled(rec), &FeatureSchema::default()).unwrap_err();
        assert_eq!(err, Rejection::NegativeTimeInBusiness);
    }

    fn dataset_with_years(years: &[i32]) -> Dataset {
        let schema = FeatureSchema::default();
        let rows = years
            .iter()
            .enumerate()
            .map(|(i, &y)| {
                let mut features = vec![i as f64; 9];
                features.extend([1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
                FeatureVector {
                    company_id: format!("c{i}"),
                    statement_year: y,
                    features,
                    label: (i % 2) as u8,
                }
            })
            .collect();
        Dataset::new(schema, rows)
    }

    #[test]
    fn split_seventy_thirty() {
        let years: Vec<i32> = (0..100).map(|i| 2004 + i % 9).collect();
        let ds = dataset_with_years(&years);
        let s = split(
            &ds,
            &SplitSpec {
                seed: 3,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(
            (s.train.len(), s.test.len(), s.validation.len()),
            (70, 30, 0)
        );
    }

    #[test]
    fn split_without_train_years_fails() {
        let ds = dataset_with_years(&[2013, 2014, 2018]);
        assert!(matches!(
            split(&ds, &SplitSpec::default()),
            Err(Error::EmptyTrain)
        ));
    }

    #[test]
    fn split_is_deterministic() {
        let years: Vec<i32> = (0..50).map(|i| 2004 + i % 15).collect();
        let ds = dataset_with_years(&years);
        let spec = SplitSpec {
            seed: 11,
            ..Default::default()
        };
        assert_eq!(split(&ds, &spec).unwrap(), split(&ds, &spec).unwrap());
    }

    #[test]
    fn overlapping_years_are_invalid() {
        let spec = SplitSpec {
            validation_years: (2012, 2018),
            ..Default::default()
        };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn scaler_population_std() {
        let mut ds = dataset_with_years(&[2005, 2006]);
        ds.rows[0].features[0] = 1.0;
        ds.rows[1].features[0] = 3.0;
        let p = fit_scaler(&ds).unwrap();
        assert_eq!(p.mean[0], 2.0);
        assert_eq!(p.std[0], 1.0);
        let scaled = apply_scaler(&p, &ds).unwrap();
        assert_eq!(scaled.rows[0].features[0], -1.0);
        assert_eq!(scaled.rows[1].features[0], 1.0);
    }

    #[test]
    fn constant_column_uses_sentinel() {
        let mut ds = dataset_with_years(&[2005, 2006, 2007]);
        for row in &mut ds.rows {
            row.features[2] = 5.0;
        }
        let p = fit_scaler(&ds).unwrap();
        assert!(p.constant[2]);
        assert_eq!(p.std[2], 1.0);
        let scaled = apply_scaler(&p, &ds).unwrap();
        assert!(scaled.rows.iter().all(|r| r.features[2] == 0.0));
        // one-hot columns untouched
        assert!(scaled.rows.iter().all(|r| r.features[9] == 1.0));
    }

    #[test]
    fn scaler_rejects_other_columns() {
        let ds = dataset_with_years(&[2005, 2006]);
        let mut p = fit_scaler(&ds).unwrap();
        p.columns[0] = "something_else".into();
        assert!(matches!(
            apply_scaler(&p, &ds),
            Err(Error::ColumnMismatch { .. })
        ));
    }

    #[test]
    fn schema_roundtrip_from_names() {
        let schema = FeatureSchema::new(vec!["FR".into(), "GB".into()]);
        assert_eq!(
            FeatureSchema::from_column_names(&schema.column_names()).unwrap(),
            schema
        );
        assert!(FeatureSchema::from_column_names(&["x".to_string()]).is_err());
    }
}
