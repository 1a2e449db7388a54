//! Mapping probabilities of default onto A–F rating grades.
//!
//! Calibration takes, for each reference grade `R`, the mean model probability
//! `μ(R)` of the companies the reference system rated `R`. A probability is then
//! assigned the grade with the nearest `μ` (`argmin_R |p − μ(R)|`, ties to the less
//! risky grade). Equivalently, grades are intervals `A = [0, b₁]`, `B = (b₁, b₂]`, …,
//! `F = (b₅, 1]` whose bounds sit at the midpoints between consecutive `μ`. The bounds
//! are placed at the exact floating-point switch point of the argmin comparison so
//! that both formulations agree bit for bit.

use std::collections::HashMap;
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rating grades from least (A) to most (F) risky.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Grade {
    A,
    B,
    C,
    D,
    E,
    F,
}

impl Grade {
    pub const ALL: [Grade; 6] = [Grade::A, Grade::B, Grade::C, Grade::D, Grade::E, Grade::F];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Grade> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        ["A", "B", "C", "D", "E", "F"][self.index()]
    }
}

impl fmt::Display for Grade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Grade {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Grade::ALL
            .into_iter()
            .find(|g| g.as_str() == s.trim())
            .ok_or_else(|| Error::InvalidInput(format!("unknown grade `{s}`")))
    }
}

const N_GRADES: usize = 6;

/// One grade's probability interval. A includes its lower bound 0; every interval
/// includes its upper bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradeInterval {
    pub grade: Grade,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradeCalibration {
    /// Mean probability per grade (`None` for the fixed-interval path).
    pub mu: Option<Vec<f64>>,
    /// Companies per grade behind each mean.
    pub counts: Option<Vec<usize>>,
    /// Upper bounds of A through E.
    pub bounds: Vec<f64>,
}

impl GradeCalibration {
    /// Uses published interval bounds directly.
    pub fn from_bounds(bounds: &[f64]) -> Result<Self> {
        if bounds.len() != N_GRADES - 1 {
            return Err(Error::InvalidIntervals(format!(
                "expected {} inner bounds, got {}",
                N_GRADES - 1,
                bounds.len()
            )));
        }
        let inside = bounds.iter().all(|b| *b > 0.0 && *b < 1.0);
        let increasing = bounds.windows(2).all(|w| w[0] < w[1]);
        if !inside || !increasing {
            return Err(Error::InvalidIntervals(format!(
                "bounds must be strictly increasing inside (0, 1): {bounds:?}"
            )));
        }
        Ok(Self {
            mu: None,
            counts: None,
            bounds: bounds.to_vec(),
        })
    }

    /// Reads an interval table: a JSON list of `{grade, lower, upper}` covering A–F.
    pub fn from_intervals(intervals: &[GradeInterval]) -> Result<Self> {
        if intervals.len() != N_GRADES {
            return Err(Error::InvalidIntervals(format!(
                "expected {N_GRADES} intervals, got {}",
                intervals.len()
            )));
        }
        for (i, iv) in intervals.iter().enumerate() {
            if iv.grade.index() != i {
                return Err(Error::InvalidIntervals(
                    "intervals must be listed A to F".into(),
                ));
            }
            let expected_lower = if i == 0 { 0.0 } else { intervals[i - 1].upper };
            if iv.lower != expected_lower {
                return Err(Error::InvalidIntervals(format!(
                    "grade {} starts at {} but the previous interval ends at {expected_lower}",
                    iv.grade, iv.lower
                )));
            }
        }
        if intervals[N_GRADES - 1].upper != 1.0 {
            return Err(Error::InvalidIntervals("grade F must end at 1".into()));
        }
        let bounds: Vec<f64> = intervals[..N_GRADES - 1]
            .iter()
            .map(|iv| iv.upper)
            .collect();
        Self::from_bounds(&bounds)
    }

    pub fn intervals(&self) -> Vec<GradeInterval> {
        Grade::ALL
            .iter()
            .enumerate()
            .map(|(i, &grade)| GradeInterval {
                grade,
                lower: if i == 0 { 0.0 } else { self.bounds[i - 1] },
                upper: if i == N_GRADES - 1 {
                    1.0
                } else {
                    self.bounds[i]
                },
            })
            .collect()
    }
}

/// True when `p` is strictly closer to `riskier` than to `safer` in floating point.
#[inline]
fn prefers_riskier(p: f64, safer: f64, riskier: f64) -> bool {
    (p - riskier).abs() < (p - safer).abs()
}

/// The largest float in `[0, 1]` that the argmin comparison still assigns to the
/// safer of two neighboring grades.
fn switch_point(safer: f64, riskier: f64) -> f64 {
    let mut b = 0.5 * (safer + riskier);
    while b > 0.0 && prefers_riskier(b, safer, riskier) {
        b = b.next_down();
    }
    while b < 1.0 && !prefers_riskier(b.next_up(), safer, riskier) {
        b = b.next_up();
    }
    b
}

/// Calibrates grade means (Eq. 1) and derives the interval bounds.
pub fn calibrate(reference: &[Grade], probabilities: &[f64]) -> Result<GradeCalibration> {
    if reference.len() != probabilities.len() {
        return Err(Error::LengthMismatch {
            left: reference.len(),
            right: probabilities.len(),
        });
    }
    if let Some(&p) = probabilities.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidProbability(p));
    }
    let mut sums = [0.0; N_GRADES];
    let mut counts = [0usize; N_GRADES];
    for (g, &p) in reference.iter().zip(probabilities) {
        sums[g.index()] += p;
        counts[g.index()] += 1;
    }
    let missing: Vec<Grade> = Grade::ALL
        .into_iter()
        .filter(|g| counts[g.index()] == 0)
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingGrades(missing));
    }
    let mu: Vec<f64> = (0..N_GRADES).map(|i| sums[i] / counts[i] as f64).collect();
    calibration_from_means(&mu, Some(counts.to_vec()))
}

/// Derives interval bounds from per-grade means that must strictly increase A → F.
pub fn calibration_from_means(mu: &[f64], counts: Option<Vec<usize>>) -> Result<GradeCalibration> {
    if mu.len() != N_GRADES || mu.iter().any(|m| !(0.0..=1.0).contains(m)) {
        return Err(Error::InvalidInput(format!(
            "need {N_GRADES} means in [0, 1]"
        )));
    }
    if !mu.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::NonMonotoneCalibration(mu.to_vec()));
    }
    let bounds = mu.windows(2).map(|w| switch_point(w[0], w[1])).collect();
    Ok(GradeCalibration {
        mu: Some(mu.to_vec()),
        counts,
        bounds,
    })
}

/// Interval lookup: the first grade whose upper bound is at least `p`.
pub fn assign_grade(p: f64, calibration: &GradeCalibration) -> Result<Grade> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidProbability(p));
    }
    let i = calibration
        .bounds
        .iter()
        .position(|&b| p <= b)
        .unwrap_or(N_GRADES - 1);
    Ok(Grade::ALL[i])
}

/// Direct Eq. 2 evaluation: nearest mean, ties to the less risky grade.
pub fn argmin_grade(p: f64, mu: &[f64]) -> Grade {
    let mut best = 0;
    for i in 1..mu.len() {
        if (p - mu[i]).abs() < (p - mu[best]).abs() {
            best = i;
        }
    }
    Grade::ALL[best]
}

pub fn assign_all(probabilities: &[f64], calibration: &GradeCalibration) -> Result<Vec<Grade>> {
    probabilities
        .iter()
        .map(|&p| assign_grade(p, calibration))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradeConfusion {
    /// Rows are reference grades, columns mapped grades, both A–F.
    pub matrix: Vec<Vec<usize>>,
    pub n: usize,
    /// Fraction mapped strictly riskier than the reference.
    pub riskier: f64,
    /// Fraction mapped strictly safer than the reference.
    pub safer: f64,
    pub equal: f64,
    /// Reference E or F mapped to A or B.
    pub critical_underestimation: usize,
}

impl GradeConfusion {
    pub fn row_sums(&self) -> Vec<usize> {
        self.matrix.iter().map(|r| r.iter().sum()).collect()
    }
}

pub fn grade_confusion(reference: &[Grade], mapped: &[Grade]) -> Result<GradeConfusion> {
    if reference.len() != mapped.len() {
        return Err(Error::LengthMismatch {
            left: reference.len(),
            right: mapped.len(),
        });
    }
    let mut matrix = vec![vec![0usize; N_GRADES]; N_GRADES];
    let (mut riskier, mut safer, mut equal, mut critical) = (0usize, 0usize, 0usize, 0usize);
    for (&r, &m) in reference.iter().zip(mapped) {
        matrix[r.index()][m.index()] += 1;
        match m.cmp(&r) {
            std::cmp::Ordering::Greater => riskier += 1,
            std::cmp::Ordering::Less => safer += 1,
            std::cmp::Ordering::Equal => equal += 1,
        }
        if r >= Grade::E && m <= Grade::B {
            critical += 1;
        }
    }
    let n = reference.len();
    let frac = |c: usize| if n == 0 { 0.0 } else { c as f64 / n as f64 };
    Ok(GradeConfusion {
        matrix,
        n,
        riskier: frac(riskier),
        safer: frac(safer),
        equal: frac(equal),
        critical_underestimation: critical,
    })
}

/// Reference grades keyed by company, optionally by company and statement year.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReferenceGrades {
    by_company: HashMap<String, Grade>,
    by_company_year: HashMap<(String, i32), Grade>,
    /// Rows graded X (excluded for missing data).
    pub excluded: usize,
}

impl ReferenceGrades {
    pub fn get(&self, company_id: &str, year: i32) -> Option<Grade> {
        self.by_company_year
            .get(&(company_id.to_string(), year))
            .or_else(|| self.by_company.get(company_id))
            .copied()
    }

    pub fn len(&self) -> usize {
        self.by_company.len() + self.by_company_year.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Reads `company_id,grade` or `company_id,statement_year,grade` CSV. Grade `X`
/// rows are counted and skipped.
pub fn read_reference_grades<R: Read>(reader: R) -> Result<ReferenceGrades> {
    let mut rdr = csv::Reader::from_reader(reader);
    let header = rdr.headers()?.clone();
    let col = |name: &str| header.iter().position(|h| h == name);
    let id_col =
        col("company_id").ok_or_else(|| Error::InvalidInput("missing company_id column".into()))?;
    let grade_col =
        col("grade").ok_or_else(|| Error::InvalidInput("missing grade column".into()))?;
    let year_col = col("statement_year");
    let mut out = ReferenceGrades::default();
    for rec in rdr.records() {
        let rec = rec?;
        let raw = rec[grade_col].trim();
        if raw == "X" {
            out.excluded += 1;
            continue;
        }
        let grade: Grade = raw.parse()?;
        let id = rec[id_col].to_string();
        match year_col {
            Some(c) => {
                let year = rec[c].parse().map_err(|_| {
                    Error::InvalidInput(format!("bad statement_year `{}`", &rec[c]))
                })?;
                out.by_company_year.insert((id, year), grade);
            }
            None => {
                out.by_company.insert(id, grade);
            }
        }
    }
    Ok(out)
}

/// The published scorecard interval bounds (upper bounds of A through E).
pub const PUBLISHED_BOUNDS: [f64; 5] = [0.0828, 0.1411, 0.2029, 0.2486, 0.285];
