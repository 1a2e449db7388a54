//! CART-style binary decision trees shared by every ensemble.
//!
//! Two split criteria are supported:
//!
//! * [`Criterion::Gini`]: weighted Gini impurity decrease, leaves hold the weighted
//!   positive-class fraction.
//! * [`Criterion::SecondOrder`]: the regularized gradient/hessian gain used by
//!   boosting, `½[G_L²/(H_L+λ) + G_R²/(H_R+λ) − G²/(H+λ)] − γ`, leaves hold `−G/(H+λ)`.
//!
//! Growth is level-wise exact greedy search. Each feature's rows are pre-sorted once;
//! every level scans each sorted column a single time, updating running sums for
//! all open nodes at once. Candidate thresholds are midpoints between consecutive
//! distinct values inside a node. Routing is `left iff value < threshold` both when
//! fitting and predicting. Equal gains keep the lowest feature index, then the lowest
//! threshold.

use std::collections::BTreeSet;

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

/// A fitted tree stored as a node list; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn leaf(value: f64) -> Self {
        Self {
            nodes: vec![TreeNode::Leaf { value }],
        }
    }

    /// Index of the leaf a row is routed to.
    #[inline]
    pub fn leaf_index(&self, row: &[f64]) -> usize {
        let mut idx = 0;
        loop {
            match self.nodes[idx] {
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    idx = if row[feature] < threshold {
                        left
                    } else {
                        right
                    }
                }
                TreeNode::Leaf { .. } => return idx,
            }
        }
    }

    #[inline]
    pub fn predict(&self, row: &[f64]) -> f64 {
        match self.nodes[self.leaf_index(row)] {
            TreeNode::Leaf { value } => value,
            TreeNode::Split { .. } => unreachable!("leaf_index returns a leaf"),
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Leaf { .. }))
            .count()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], idx: usize) -> usize {
            match nodes[idx] {
                TreeNode::Split { left, right, .. } => {
                    1 + walk(nodes, left).max(walk(nodes, right))
                }
                TreeNode::Leaf { .. } => 0,
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn features_used(&self) -> BTreeSet<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                TreeNode::Split { feature, .. } => Some(*feature),
                TreeNode::Leaf { .. } => None,
            })
            .collect()
    }

    pub fn leaf_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            TreeNode::Leaf { value } => Some(*value),
            TreeNode::Split { .. } => None,
        })
    }

    /// Checks structural invariants: child indices in range, finite leaves, depth bound.
    pub fn validate(&self, max_depth: Option<usize>) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::InvalidInput("tree has no nodes".into()));
        }
        for node in &self.nodes {
            match *node {
                TreeNode::Split {
                    left,
                    right,
                    threshold,
                    ..
                } => {
                    if left >= self.nodes.len()
                        || right >= self.nodes.len()
                        || !threshold.is_finite()
                    {
                        return Err(Error::InvalidInput("malformed split node".into()));
                    }
                }
                TreeNode::Leaf { value } => {
                    if !value.is_finite() {
                        return Err(Error::NonFinite("leaf value".into()));
                    }
                }
            }
        }
        if let Some(max) = max_depth {
            if self.depth() > max {
                return Err(Error::InvalidInput(format!("tree deeper than {max}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    Gini,
    SecondOrder,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeConfig {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// Minimum statistic mass (`Σb`: weight in gini mode, hessian in second-order mode)
    /// each child must keep.
    pub min_child_weight: f64,
    /// Fraction of features available to the whole tree.
    pub feature_subsample_fraction: f64,
    /// Features drawn afresh at every split (random-forest style).
    pub max_features_per_split: Option<usize>,
    pub criterion: Criterion,
    /// L2 leaf regularization, second-order mode only.
    pub lambda: f64,
    /// Minimum gain to split, second-order mode only.
    pub gamma: f64,
    pub seed: u64,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self {
            max_depth: 6,
            min_samples_leaf: 1,
            min_child_weight: 0.0,
            feature_subsample_fraction: 1.0,
            max_features_per_split: None,
            criterion: Criterion::Gini,
            lambda: 1.0,
            gamma: 0.0,
            seed: 0,
        }
    }
}

impl TreeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_depth < 1 {
            return Err(Error::InvalidConfig("max_depth must be at least 1".into()));
        }
        if self.min_samples_leaf < 1 {
            return Err(Error::InvalidConfig(
                "min_samples_leaf must be at least 1".into(),
            ));
        }
        if !(self.feature_subsample_fraction > 0.0 && self.feature_subsample_fraction <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "feature_subsample_fraction {} must lie in (0, 1]",
                self.feature_subsample_fraction
            )));
        }
        if self.max_features_per_split == Some(0) {
            return Err(Error::InvalidConfig(
                "max_features_per_split must be at least 1".into(),
            ));
        }
        if !(self.lambda >= 0.0) || !(self.gamma >= 0.0) || !(self.min_child_weight >= 0.0) {
            return Err(Error::InvalidConfig(
                "lambda, gamma and min_child_weight must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// What a tree is fitted to.
#[derive(Debug, Clone, Copy)]
pub enum Targets<'a> {
    /// Binary labels in {0, 1} with optional per-row weights (gini mode).
    Labels {
        labels: &'a [f64],
        weights: Option<&'a [f64]>,
    },
    /// Per-row gradient and hessian (second-order mode), `hess >= 0`.
    GradHess { grad: &'a [f64], hess: &'a [f64] },
}

/// Fits a single tree on all rows of `x`.
pub fn fit_tree(x: &Matrix, targets: Targets<'_>, config: &TreeConfig) -> Result<Tree> {
    config.validate()?;
    let n = x.n_rows();
    if n == 0 {
        return Err(Error::InvalidInput("cannot fit a tree on zero rows".into()));
    }
    if !x.all_finite() {
        return Err(Error::NonFinite("feature matrix".into()));
    }
    let (a, b) = node_statistics(n, targets, config.criterion)?;
    let order = ColumnOrder::new(x);
    let rows: Vec<usize> = (0..n).collect();
    let mut rng = rng::seeded(config.seed);
    let features = tree_features(x.n_cols(), config.feature_subsample_fraction, &mut rng);
    Ok(grow(x, &order, &a, &b, &rows, &features, config, &mut rng))
}

/// Converts targets into the additive per-row statistics the split search uses.
pub(crate) fn node_statistics(
    n: usize,
    targets: Targets<'_>,
    criterion: Criterion,
) -> Result<(Vec<f64>, Vec<f64>)> {
    match (targets, criterion) {
        (Targets::Labels { labels, weights }, Criterion::Gini) => {
            if labels.len() != n || weights.is_some_and(|w| w.len() != n) {
                return Err(Error::LengthMismatch {
                    left: n,
                    right: labels.len(),
                });
            }
            let mut a = Vec::with_capacity(n);
            let mut b = Vec::with_capacity(n);
            for i in 0..n {
                let y = labels[i];
                let w = weights.map_or(1.0, |w| w[i]);
                if !(y == 0.0 || y == 1.0) {
                    return Err(Error::InvalidInput(format!("label {y} is not 0 or 1")));
                }
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::NonFinite("sample weight".into()));
                }
                a.push(w * y);
                b.push(w);
            }
            Ok((a, b))
        }
        (Targets::GradHess { grad, hess }, Criterion::SecondOrder) => {
            if grad.len() != n || hess.len() != n {
                return Err(Error::LengthMismatch {
                    left: n,
                    right: grad.len().min(hess.len()),
                });
            }
            if grad.iter().any(|g| !g.is_finite()) || hess.iter().any(|h| !h.is_finite()) {
                return Err(Error::NonFinite("gradient or hessian".into()));
            }
            if hess.iter().any(|&h| h < 0.0) {
                return Err(Error::InvalidInput("negative hessian".into()));
            }
            Ok((grad.to_vec(), hess.to_vec()))
        }
        _ => Err(Error::InvalidConfig(
            "targets do not match the split criterion".into(),
        )),
    }
}

/// Row indices sorted by value, per feature. Ties keep row order.
pub(crate) struct ColumnOrder {
    columns: Vec<Vec<u32>>,
}

impl ColumnOrder {
    pub(crate) fn new(x: &Matrix) -> Self {
        let columns = (0..x.n_cols())
            .map(|f| {
                let mut idx: Vec<u32> = (0..x.n_rows() as u32).collect();
                idx.sort_by(|&i, &j| x.get(i as usize, f).total_cmp(&x.get(j as usize, f)));
                idx
            })
            .collect();
        Self { columns }
    }
}

/// Samples the per-tree feature subset (`round(fraction * m)`, at least one).
pub(crate) fn tree_features(n_features: usize, fraction: f64, rng: &mut rng::Rng) -> Vec<usize> {
    if fraction >= 1.0 {
        return (0..n_features).collect();
    }
    let k = ((fraction * n_features as f64).round() as usize).clamp(1, n_features);
    let mut picked = sample(rng, n_features, k).into_vec();
    picked.sort_unstable();
    picked
}

const NO_SLOT: u32 = u32::MAX;

#[derive(Clone, Copy)]
struct Candidate {
    gain: f64,
    feature: usize,
    threshold: f64,
}

struct Slot {
    node: usize,
    a: f64,
    b: f64,
    n: usize,
    /// Bitmask of features searchable at this node.
    mask: u128,
    best: Option<Candidate>,
    acc_a: f64,
    acc_b: f64,
    acc_n: usize,
    last: f64,
}

impl Slot {
    fn new(node: usize, a: f64, b: f64, n: usize, mask: u128) -> Self {
        Self {
            node,
            a,
            b,
            n,
            mask,
            best: None,
            acc_a: 0.0,
            acc_b: 0.0,
            acc_n: 0,
            last: f64::NAN,
        }
    }
}

fn leaf_value(a: f64, b: f64, config: &TreeConfig) -> f64 {
    match config.criterion {
        Criterion::Gini => {
            if b > 0.0 {
                a / b
            } else {
                0.0
            }
        }
        Criterion::SecondOrder => {
            let den = b + config.lambda;
            if den > 0.0 {
                -a / den
            } else {
                0.0
            }
        }
    }
}

/// Gain of splitting a node with totals `(a, b)` into a left part `(la, lb)`.
#[inline]
fn split_gain(a: f64, b: f64, la: f64, lb: f64, config: &TreeConfig) -> Option<f64> {
    let ra = a - la;
    let rb = b - lb;
    match config.criterion {
        Criterion::Gini => {
            if lb <= 0.0 || rb <= 0.0 {
                return None;
            }
            let score = |pos: f64, w: f64| (pos * pos + (w - pos) * (w - pos)) / w;
            Some(score(la, lb) + score(ra, rb) - score(a, b))
        }
        Criterion::SecondOrder => {
            let lam = config.lambda;
            if lb + lam <= 0.0 || rb + lam <= 0.0 || b + lam <= 0.0 {
                return None;
            }
            Some(
                0.5 * (la * la / (lb + lam) + ra * ra / (rb + lam) - a * a / (b + lam))
                    - config.gamma,
            )
        }
    }
}

/// Whether a gain justifies a split. Gini gains within rounding noise of zero do not.
#[inline]
fn accepts(gain: f64, parent_b: f64, criterion: Criterion) -> bool {
    match criterion {
        Criterion::Gini => gain > 1e-12 * parent_b.max(1.0),
        Criterion::SecondOrder => gain > 0.0,
    }
}

fn is_pure(a: f64, b: f64, criterion: Criterion) -> bool {
    criterion == Criterion::Gini && (a == 0.0 || a == b)
}

fn split_mask(features: &[usize], per_split: Option<usize>, rng: &mut rng::Rng) -> u128 {
    let chosen: Vec<usize> = match per_split {
        Some(k) if k < features.len() => sample(rng, features.len(), k)
            .into_iter()
            .map(|i| features[i])
            .collect(),
        _ => features.to_vec(),
    };
    chosen.iter().fold(0u128, |m, &f| m | (1u128 << f))
}

/// Grows a tree over `rows` (distinct, ascending) using per-row statistics `a`, `b`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn grow(
    x: &Matrix,
    order: &ColumnOrder,
    a: &[f64],
    b: &[f64],
    rows: &[usize],
    features: &[usize],
    config: &TreeConfig,
    rng: &mut rng::Rng,
) -> Tree {
    assert!(x.n_cols() <= 128, "at most 128 features are supported");
    let n_cols = x.n_cols();
    let data = x.as_slice();
    let min_leaf = config.min_samples_leaf;
    let min_child = config.min_child_weight;
    let criterion = config.criterion;

    let mut nodes: Vec<TreeNode> = Vec::new();
    // node currently holding each row; NO_SLOT once the row sits in a final leaf
    let mut node_of_row = vec![NO_SLOT; x.n_rows()];
    let mut slot_of_node: Vec<u32> = Vec::new();

    let (mut ra, mut rb) = (0.0, 0.0);
    for &r in rows {
        node_of_row[r] = 0;
        ra += a[r];
        rb += b[r];
    }
    nodes.push(TreeNode::Leaf {
        value: leaf_value(ra, rb, config),
    });
    slot_of_node.push(NO_SLOT);

    let splittable = |a: f64, b: f64, n: usize| n >= 2 * min_leaf && !is_pure(a, b, criterion);
    let mut slots: Vec<Slot> = Vec::new();
    if splittable(ra, rb, rows.len()) {
        slots.push(Slot::new(
            0,
            ra,
            rb,
            rows.len(),
            split_mask(features, config.max_features_per_split, rng),
        ));
        slot_of_node[0] = 0;
    } else {
        return Tree { nodes };
    }
    let tree_mask = features.iter().fold(0u128, |m, &f| m | (1u128 << f));

    for depth in 0..config.max_depth {
        if slots.is_empty() {
            break;
        }
        for &f in features {
            let bit = 1u128 << f;
            if slots.iter().all(|s| s.mask & bit == 0) {
                continue;
            }
            for s in slots.iter_mut() {
                s.acc_a = 0.0;
                s.acc_b = 0.0;
                s.acc_n = 0;
                s.last = f64::NAN;
            }
            for &r in &order.columns[f] {
                let r = r as usize;
                let node = node_of_row[r];
                if node == NO_SLOT {
                    continue;
                }
                let slot_idx = slot_of_node[node as usize];
                if slot_idx == NO_SLOT {
                    continue;
                }
                let s = &mut slots[slot_idx as usize];
                if s.mask & bit == 0 {
                    continue;
                }
                let v = data[r * n_cols + f];
                if v > s.last
                    && s.acc_n >= min_leaf
                    && s.n - s.acc_n >= min_leaf
                    && s.acc_b >= min_child
                    && s.b - s.acc_b >= min_child
                {
                    if let Some(gain) = split_gain(s.a, s.b, s.acc_a, s.acc_b, config) {
                        if s.best.is_none_or(|c| gain > c.gain) {
                            let mut threshold = 0.5 * (s.last + v);
                            if threshold <= s.last {
                                threshold = v;
                            }
                            s.best = Some(Candidate {
                                gain,
                                feature: f,
                                threshold,
                            });
                        }
                    }
                }
                s.acc_a += a[r];
                s.acc_b += b[r];
                s.acc_n += 1;
                s.last = v;
            }
        }

        // Apply the chosen splits.
        let mut split_of_slot: Vec<Option<(usize, f64, usize, usize)>> =
            Vec::with_capacity(slots.len());
        for s in &slots {
            match s.best {
                Some(c) if accepts(c.gain, s.b, criterion) => {
                    let left = nodes.len();
                    let right = left + 1;
                    nodes.push(TreeNode::Leaf { value: 0.0 });
                    nodes.push(TreeNode::Leaf { value: 0.0 });
                    slot_of_node.push(NO_SLOT);
                    slot_of_node.push(NO_SLOT);
                    nodes[s.node] = TreeNode::Split {
                        feature: c.feature,
                        threshold: c.threshold,
                        left,
                        right,
                    };
                    split_of_slot.push(Some((c.feature, c.threshold, left, right)));
                }
                _ => split_of_slot.push(None),
            }
        }

        // Route rows to children and recompute child statistics in row order.
        let mut child_stats: Vec<(f64, f64, usize)> = vec![(0.0, 0.0, 0); nodes.len()];
        for &r in rows {
            let node = node_of_row[r];
            if node == NO_SLOT {
                continue;
            }
            let slot_idx = slot_of_node[node as usize];
            if slot_idx == NO_SLOT {
                continue;
            }
            match split_of_slot[slot_idx as usize] {
                Some((f, thr, left, right)) => {
                    let child = if data[r * n_cols + f] < thr {
                        left
                    } else {
                        right
                    };
                    node_of_row[r] = child as u32;
                    let st = &mut child_stats[child];
                    st.0 += a[r];
                    st.1 += b[r];
                    st.2 += 1;
                }
                None => node_of_row[r] = NO_SLOT,
            }
        }

        let last_level = depth + 1 >= config.max_depth;
        let mut next = Vec::new();
        for (slot_idx, s) in slots.iter().enumerate() {
            slot_of_node[s.node] = NO_SLOT;
            let Some((_, _, left, right)) = split_of_slot[slot_idx] else {
                continue;
            };
            for child in [left, right] {
                let (ca, cb, cn) = child_stats[child];
                nodes[child] = TreeNode::Leaf {
                    value: leaf_value(ca, cb, config),
                };
                if !last_level && splittable(ca, cb, cn) {
                    slot_of_node[child] = next.len() as u32;
                    let mask = match config.max_features_per_split {
                        Some(_) => split_mask(features, config.max_features_per_split, rng),
                        None => tree_mask,
                    };
                    next.push(Slot::new(child, ca, cb, cn, mask));
                }
            }
        }
        // rows whose child became a final leaf stop participating
        if last_level || next.len() < 2 * slots.len() {
            for &r in rows {
                let node = node_of_row[r];
                if node != NO_SLOT && slot_of_node[node as usize] == NO_SLOT {
                    node_of_row[r] = NO_SLOT;
                }
            }
        }
        slots = next;
    }
    Tree { nodes }
}
