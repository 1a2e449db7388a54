//! Binary-classification metrics: confusion counts, accuracy, precision, recall,
//! F1 and ROC AUC.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n: usize,
    pub threshold: f64,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// `None` when the labels contain a single class.
    pub auc: Option<f64>,
}

/// Evaluates probabilities against `{0,1}` labels; label 1 is predicted iff `p ≥ threshold`.
pub fn evaluate(labels: &[u8], probabilities: &[f64], threshold: f64) -> Result<EvalReport> {
    if labels.len() != probabilities.len() {
        return Err(Error::LengthMismatch {
            left: labels.len(),
            right: probabilities.len(),
        });
    }
    if labels.is_empty() {
        return Err(Error::InvalidInput("cannot evaluate zero rows".into()));
    }
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::InvalidThreshold(threshold));
    }
    if let Some(&p) = probabilities.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidProbability(p));
    }
    if labels.iter().any(|&y| y > 1) {
        return Err(Error::InvalidInput("labels must be 0 or 1".into()));
    }
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for (&y, &p) in labels.iter().zip(probabilities) {
        match (y == 1, p >= threshold) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (false, false) => tn += 1,
            (true, false) => fn_ += 1,
        }
    }
    let ratio = |num: usize, den: usize| {
        if den == 0 {
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    let n = labels.len();
    Ok(EvalReport {
        n,
        threshold,
        tp,
        fp,
        tn,
        fn_,
        accuracy: (tp + tn) as f64 / n as f64,
        precision,
        recall,
        f1,
        auc: auc(labels, probabilities),
    })
}

/// ROC AUC by the Mann–Whitney rank statistic with average ranks for ties, which
/// counts tied positive/negative pairs as ½. `None` if either class is absent.
pub fn auc(labels: &[u8], scores: &[f64]) -> Option<f64> {
    assert_eq!(labels.len(), scores.len());
    let n_pos = labels.iter().filter(|&&y| y == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Twice the positive rank sum stays an exact integer with average ranks.
    let mut twice_rank_sum: u64 = 0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        // ranks i+1 ..= j+1 share the average (i + j + 2) / 2
        let twice_avg = (i + j + 2) as u64;
        let pos_in_group = idx[i..=j].iter().filter(|&&k| labels[k] == 1).count() as u64;
        twice_rank_sum += twice_avg * pos_in_group;
        i = j + 1;
    }
    let (p, q) = (n_pos as u64, n_neg as u64);
    // U = R − p(p+1)/2, doubled to stay integral
    let twice_u = twice_rank_sum - p * (p + 1);
    Some(twice_u as f64 / (2 * p * q) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_auc() {
        let r = evaluate(&[0, 0, 1, 1], &[0.1, 0.4, 0.35, 0.8], 0.5).unwrap();
        assert_eq!(r.auc, Some(0.75));
    }

    #[test]
    fn perfect_predictor() {
        let r = evaluate(&[0, 1, 0, 1], &[0.0, 1.0, 0.2, 0.9], 0.5).unwrap();
        assert_eq!(
            (r.accuracy, r.precision, r.recall, r.f1, r.auc),
            (1.0, 1.0, 1.0, 1.0, Some(1.0))
        );
    }

    #[test]
    fn all_negative_predictions() {
        let mut labels = vec![0u8; 98];
        labels.extend([1, 1]);
        let r = evaluate(&labels, &vec![0.01; 100], 0.5).unwrap();
        assert_eq!((r.precision, r.recall, r.f1), (0.0, 0.0, 0.0));
        assert_eq!(r.accuracy, 0.98);
        assert_eq!(r.tp + r.fp + r.tn + r.fn_, r.n);
        // all scores tied: AUC is exactly one half
        assert_eq!(r.auc, Some(0.5));
    }

    #[test]
    fn single_class_auc_is_undefined() {
        let r = evaluate(&[0, 0, 0], &[0.2, 0.7, 0.9], 0.5).unwrap();
        assert_eq!(r.auc, None);
        assert_eq!(r.fp, 2);
    }

    #[test]
    fn invalid_inputs() {
        assert!(evaluate(&[0, 1], &[0.5], 0.5).is_err());
        assert!(evaluate(&[0, 1], &[0.5, 1.5], 0.5).is_err());
        assert!(evaluate(&[0, 1], &[0.5, 0.5], -0.1).is_err());
    }

    #[test]
    fn fn_field_serializes_as_fn() {
        let r = evaluate(&[1], &[0.1], 0.5).unwrap();
        let json = serde_json::to_value(&r).unwrap();
        assert_eq!(json["fn"], 1);
        assert!(json["auc"].is_null());
    }
}
