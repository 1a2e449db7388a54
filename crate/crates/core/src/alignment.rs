//! Analyst feature-weight surveys and their agreement with model importance.
//!
//! Each analyst distributes 100 points over the model's features. Aggregate weights
//! are the per-feature sums. Agreement with the model's global Shapley importance is
//! reported as a bundle: Spearman ρ and Kendall τ-b on the two weight vectors,
//! top-k overlap of the two rankings, and per-feature share disagreement
//! `δ = expert share − model share` (both sides normalized to sum 1).

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataprep::RATIO_COLUMNS;
use crate::error::{Error, Result};

/// Name of the grouped country player, matching the survey's feature name.
pub const COUNTRY_FEATURE: &str = "country_code";

/// The four-analyst survey shipped with the crate.
pub const BUNDLED_SURVEY: &str = include_str!("../fixtures/expert_survey.csv");

/// Points each analyst must distribute.
pub const POINTS_PER_ANALYST: u64 = 100;

/// The survey's feature list: every continuous model input plus the country code.
pub fn survey_features() -> Vec<String> {
    RATIO_COLUMNS
        .iter()
        .map(|s| s.to_string())
        .chain(std::iter::once(COUNTRY_FEATURE.to_string()))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpertSurvey {
    pub features: Vec<String>,
    /// Analyst id → points per feature (aligned with `features`).
    pub analysts: BTreeMap<String, Vec<u64>>,
}

#[derive(Deserialize)]
struct SurveyRow {
    analyst_id: String,
    feature: String,
    points: u64,
}

impl ExpertSurvey {
    /// Reads `analyst_id,feature,points` rows. Features an analyst does not list get
    /// 0 points.
    pub fn read<R: Read>(reader: R, features: &[String]) -> Result<Self> {
        let mut analysts: BTreeMap<String, Vec<u64>> = BTreeMap::new();
        let mut seen: BTreeSet<(String, String)> = BTreeSet::new();
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        for row in rdr.deserialize() {
            let row: SurveyRow = row?;
            let Some(j) = features.iter().position(|f| *f == row.feature) else {
                return Err(Error::UnknownFeature {
                    analyst: row.analyst_id,
                    feature: row.feature,
                });
            };
            if !seen.insert((row.analyst_id.clone(), row.feature.clone())) {
                return Err(Error::InvalidInput(format!(
                    "analyst {} lists feature {} twice",
                    row.analyst_id, row.feature
                )));
            }
            analysts
                .entry(row.analyst_id)
                .or_insert_with(|| vec![0; features.len()])[j] = row.points;
        }
        let survey = Self {
            features: features.to_vec(),
            analysts,
        };
        survey.validate()?;
        Ok(survey)
    }

    pub fn load(path: &Path, features: &[String]) -> Result<Self> {
        Self::read(std::fs::File::open(path)?, features)
    }

    /// The bundled survey over [`survey_features`].
    pub fn bundled() -> Result<Self> {
        Self::read(BUNDLED_SURVEY.as_bytes(), &survey_features())
    }

    pub fn validate(&self) -> Result<()> {
        if self.analysts.is_empty() {
            return Err(Error::InvalidInput("survey has no analysts".into()));
        }
        for (analyst, pts) in &self.analysts {
            let total: u64 = pts.iter().sum();
            if total != POINTS_PER_ANALYST {
                return Err(Error::SurveyTotal {
                    analyst: analyst.clone(),
                    total,
                });
            }
        }
        Ok(())
    }

    /// Points per feature summed over analysts, aligned with `features`.
    pub fn totals(&self) -> Vec<u64> {
        (0..self.features.len())
            .map(|j| self.analysts.values().map(|p| p[j]).sum())
            .collect()
    }

    fn median_points(&self, j: usize) -> f64 {
        let mut v: Vec<u64> = self.analysts.values().map(|p| p[j]).collect();
        v.sort_unstable();
        let n = v.len();
        if n % 2 == 1 {
            v[n / 2] as f64
        } else {
            (v[n / 2 - 1] + v[n / 2]) as f64 / 2.0
        }
    }
}

/// Features in ranked order with their weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub entries: Vec<RankedFeature>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedFeature {
    pub feature: String,
    pub weight: f64,
}

impl Ranking {
    /// Descending weight, ties by feature name.
    pub fn from_weights(weights: &[(String, f64)]) -> Self {
        let mut entries: Vec<RankedFeature> = weights
            .iter()
            .map(|(f, w)| RankedFeature {
                feature: f.clone(),
                weight: *w,
            })
            .collect();
        entries.sort_by(|a, b| {
            b.weight
                .total_cmp(&a.weight)
                .then_with(|| a.feature.cmp(&b.feature))
        });
        Self { entries }
    }

    pub fn features(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.feature.clone()).collect()
    }

    pub fn weight_of(&self, feature: &str) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.feature == feature)
            .map(|e| e.weight)
    }
}

/// Aggregate expert ranking: descending total points; ties go to the feature with
/// the higher median analyst weight, then to name order.
pub fn aggregate_and_rank(survey: &ExpertSurvey) -> Ranking {
    let totals = survey.totals();
    let mut idx: Vec<usize> = (0..survey.features.len()).collect();
    idx.sort_by(|&a, &b| {
        totals[b]
            .cmp(&totals[a])
            .then_with(|| survey.median_points(b).total_cmp(&survey.median_points(a)))
            .then_with(|| survey.features[a].cmp(&survey.features[b]))
    });
    Ranking {
        entries: idx
            .into_iter()
            .map(|j| RankedFeature {
                feature: survey.features[j].clone(),
                weight: totals[j] as f64,
            })
            .collect(),
    }
}

/// Average 1-based ranks of `values` in ascending order.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let avg = (i + j + 2) as f64 / 2.0;
        for &k in &idx[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman ρ with average ranks for ties; `None` if either side is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len());
    if x.len() < 2 {
        return None;
    }
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Kendall τ-b; `None` if either side is constant.
pub fn kendall_tau_b(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    let (mut concordant, mut discordant, mut tie_x, mut tie_y) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..n {
        for j in i + 1..n {
            let dx = x[i].total_cmp(&x[j]) as i64;
            let dy = y[i].total_cmp(&y[j]) as i64;
            if dx == 0 {
                tie_x += 1;
            }
            if dy == 0 {
                tie_y += 1;
            }
            match dx * dy {
                1 => concordant += 1,
                -1 => discordant += 1,
                _ => {}
            }
        }
    }
    let n0 = (n * n.saturating_sub(1) / 2) as i64;
    let den = (((n0 - tie_x) * (n0 - tie_y)) as f64).sqrt();
    if den == 0.0 {
        return None;
    }
    Some(((concordant - discordant) as f64 / den).clamp(-1.0, 1.0))
}

/// `|top-k(a) ∩ top-k(b)| / k`, with `k` capped at the list length.
pub fn top_k_overlap(a: &[String], b: &[String], k: usize) -> f64 {
    let k = k.min(a.len()).min(b.len());
    if k == 0 {
        return 0.0;
    }
    let top: BTreeSet<&String> = a[..k].iter().collect();
    b[..k].iter().filter(|f| top.contains(f)).count() as f64 / k as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureDelta {
    pub feature: String,
    pub expert_share: f64,
    pub model_share: f64,
    /// `expert_share − model_share`.
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalystAlignment {
    pub analyst: String,
    pub spearman: Option<f64>,
    pub kendall_tau: Option<f64>,
    pub top3_overlap: f64,
    pub top5_overlap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentReport {
    pub expert_ranking: Ranking,
    pub model_ranking: Ranking,
    pub spearman: Option<f64>,
    pub kendall_tau: Option<f64>,
    pub top3_overlap: f64,
    pub top5_overlap: f64,
    /// In expert-ranking order.
    pub deltas: Vec<FeatureDelta>,
    /// Per-analyst scores; empty when aligning plain rankings.
    pub per_analyst: Vec<AnalystAlignment>,
}

fn check_same_features(expert: &Ranking, model: &Ranking) -> Result<()> {
    let e: BTreeSet<String> = expert.features().into_iter().collect();
    let m: BTreeSet<String> = model.features().into_iter().collect();
    if e != m || e.len() != expert.entries.len() || m.len() != model.entries.len() {
        return Err(Error::FeatureSetMismatch {
            only_expert: e.difference(&m).cloned().collect(),
            only_model: m.difference(&e).cloned().collect(),
        });
    }
    Ok(())
}

fn shares(weights: &[f64]) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    if total == 0.0 {
        return vec![0.0; weights.len()];
    }
    weights.iter().map(|w| w / total).collect()
}

/// Scores the agreement between two rankings over the same feature set.
pub fn align(expert: &Ranking, model: &Ranking) -> Result<AlignmentReport> {
    check_same_features(expert, model)?;
    let features = expert.features();
    let ew: Vec<f64> = expert.entries.iter().map(|e| e.weight).collect();
    let mw: Vec<f64> = features
        .iter()
        .map(|f| model.weight_of(f).expect("feature sets checked"))
        .collect();
    let (es, ms) = (shares(&ew), shares(&mw));
    let deltas = features
        .iter()
        .enumerate()
        .map(|(i, f)| FeatureDelta {
            feature: f.clone(),
            expert_share: es[i],
            model_share: ms[i],
            delta: es[i] - ms[i],
        })
        .collect();
    let model_order = model.features();
    Ok(AlignmentReport {
        expert_ranking: expert.clone(),
        model_ranking: model.clone(),
        spearman: spearman(&ew, &mw),
        kendall_tau: kendall_tau_b(&ew, &mw),
        top3_overlap: top_k_overlap(&features, &model_order, 3),
        top5_overlap: top_k_overlap(&features, &model_order, 5),
        deltas,
        per_analyst: Vec::new(),
    })
}

/// Aligns the aggregate survey with the model and adds per-analyst scores.
pub fn align_survey(survey: &ExpertSurvey, model: &Ranking) -> Result<AlignmentReport> {
    let mut report = align(&aggregate_and_rank(survey), model)?;
    let model_order = model.features();
    for (analyst, pts) in &survey.analysts {
        let weights: Vec<(String, f64)> = survey
            .features
            .iter()
            .zip(pts)
            .map(|(f, &p)| (f.clone(), p as f64))
            .collect();
        let ranking = Ranking::from_weights(&weights);
        let ew: Vec<f64> = pts.iter().map(|&p| p as f64).collect();
        let mw: Vec<f64> = survey
            .features
            .iter()
            .map(|f| model.weight_of(f).expect("feature sets checked"))
            .collect();
        report.per_analyst.push(AnalystAlignment {
            analyst: analyst.clone(),
            spearman: spearman(&ew, &mw),
            kendall_tau: kendall_tau_b(&ew, &mw),
            top3_overlap: top_k_overlap(&ranking.features(), &model_order, 3),
            top5_overlap: top_k_overlap(&ranking.features(), &model_order, 5),
        });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("f{i}")).collect()
    }

    fn ranking(ws: &[f64]) -> Ranking {
        let w: Vec<(String, f64)> = names(ws.len())
            .into_iter()
            .zip(ws.iter().copied())
            .collect();
        Ranking::from_weights(&w)
    }

    #[test]
    fn bundled_totals() {
        let s = ExpertSurvey::bundled().unwrap();
        let r = aggregate_and_rank(&s);
        assert_eq!(r.entries[0].feature, "r2_liquidity");
        assert_eq!(r.entries[0].weight, 90.0);
        assert_eq!(r.entries[1].feature, "r1_solvency");
        assert_eq!(r.entries[9].feature, "r3_profitability");
    }

    #[test]
    fn analyst_summing_to_99_is_named() {
        let csv = "analyst_id,feature,points\nann,r1_solvency,99\n";
        match ExpertSurvey::read(csv.as_bytes(), &survey_features()) {
            Err(Error::SurveyTotal { analyst, total }) => {
                assert_eq!((analyst.as_str(), total), ("ann", 99))
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_feature_and_negative_points() {
        let csv = "analyst_id,feature,points\nann,ebitda,100\n";
        assert!(matches!(
            ExpertSurvey::read(csv.as_bytes(), &survey_features()),
            Err(Error::UnknownFeature { .. })
        ));
        let csv = "analyst_id,feature,points\nann,r1_solvency,-5\n";
        assert!(ExpertSurvey::read(csv.as_bytes(), &survey_features()).is_err());
    }

    #[test]
    fn single_analyst_all_points() {
        let csv = "analyst_id,feature,points\nsolo,sales_evolution,100\n";
        let s = ExpertSurvey::read(csv.as_bytes(), &survey_features()).unwrap();
        let r = aggregate_and_rank(&s);
        assert_eq!(r.entries[0].feature, "sales_evolution");
        // remaining all tie at 0 -> name order
        let rest: Vec<String> = r.features()[1..].to_vec();
        let mut sorted = rest.clone();
        sorted.sort();
        assert_eq!(rest, sorted);
    }

    #[test]
    fn identical_and_reversed() {
        let w: Vec<f64> = (1..=10).map(f64::from).collect();
        let a = align(&ranking(&w), &ranking(&w)).unwrap();
        assert_eq!(
            (a.spearman, a.kendall_tau, a.top3_overlap),
            (Some(1.0), Some(1.0), 1.0)
        );
        let rev: Vec<f64> = w.iter().rev().copied().collect();
        let a = align(&ranking(&w), &ranking(&rev)).unwrap();
        assert_eq!(a.spearman, Some(-1.0));
        assert_eq!(a.kendall_tau, Some(-1.0));
    }

    #[test]
    fn deltas_sum_to_zero_and_are_scale_free() {
        let e = ranking(&[90.0, 80.0, 55.0, 5.0]);
        let m = ranking(&[0.01, 0.2, 0.03, 0.5]);
        let a = align(&e, &m).unwrap();
        assert!(a.deltas.iter().map(|d| d.delta).sum::<f64>().abs() < 1e-12);
        let m10 = ranking(&[0.1, 2.0, 0.3, 5.0]);
        let b = align(&e, &m10).unwrap();
        for (x, y) in a.deltas.iter().zip(&b.deltas) {
            assert!((x.delta - y.delta).abs() < 1e-15);
        }
        assert_eq!(a.spearman, b.spearman);
    }

    #[test]
    fn mismatch_lists_difference() {
        let e = ranking(&[1.0, 2.0]);
        let m = Ranking::from_weights(&[("f0".into(), 1.0), ("zz".into(), 2.0)]);
        match align(&e, &m) {
            Err(Error::FeatureSetMismatch {
                only_expert,
                only_model,
            }) => {
                assert_eq!(only_expert, vec!["f1".to_string()]);
                assert_eq!(only_model, vec!["zz".to_string()]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn r3_profitability_scenario() {
        let s = ExpertSurvey::bundled().unwrap();
        let feats = survey_features();
        // model puts r3_profitability first
        let weights: Vec<(String, f64)> = feats
            .iter()
            .enumerate()
            .map(|(i, f)| {
                (
                    f.clone(),
                    if f == "r3_profitability" {
                        1.0
                    } else {
                        0.05 / (i + 1) as f64
                    },
                )
            })
            .collect();
        let a = align_survey(&s, &Ranking::from_weights(&weights)).unwrap();
        let most_negative = a
            .deltas
            .iter()
            .min_by(|x, y| x.delta.total_cmp(&y.delta))
            .unwrap();
        assert_eq!(most_negative.feature, "r3_profitability");
        assert_eq!(a.per_analyst.len(), 4);
    }

    #[test]
    fn tau_b_with_ties() {
        // hand-computed: x = (1,2,2,3), y = (1,3,2,3): nc=4, nd=0, ties x=1, ties y=1, n0=6
        let t = kendall_tau_b(&[1.0, 2.0, 2.0, 3.0], &[1.0, 3.0, 2.0, 3.0]).unwrap();
        assert!((t - 4.0 / 5.0).abs() < 1e-15);
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0]), vec![2.5, 1.0, 2.5]);
    }

    #[test]
    fn top_k_symmetric() {
        let a = names(6);
        let mut b = a.clone();
        b.swap(0, 5);
        assert_eq!(top_k_overlap(&a, &b, 3), top_k_overlap(&b, &a, 3));
        assert!((top_k_overlap(&a, &b, 3) - 2.0 / 3.0).abs() < 1e-15);
    }
}
