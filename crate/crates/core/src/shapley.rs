//! Exact Shapley attribution with an interventional background set.
//!
//! Players are groups of feature columns (by default every column is its own player,
//! except that the one-hot country columns form a single `country_code` player).
//! The value of a coalition `S` for instance `x` is
//! `v(S) = mean_b f(x_S ∪ b_{S̄})` over background rows `b`, with `v(all) = f(x)`.
//! All `2^M` coalition values are evaluated once and cached, then
//! `φ_i = Σ_{S ⊆ P∖{i}} |S|!(M−|S|−1)!/M! · (v(S ∪ {i}) − v(S))`.

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alignment::{Ranking, COUNTRY_FEATURE};
use crate::dataprep::COUNTRY_PREFIX;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::models::Predictor;
use crate::rng;

/// Hard ceiling imposed by the 64-bit coalition masks and memory.
const ABSOLUTE_MAX_PLAYERS: usize = 24;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AttributionConfig {
    /// Background rows sampled (without replacement) from the training split.
    pub background_size: usize,
    /// Largest player count accepted.
    pub max_features: usize,
    /// Collapse the one-hot country columns into one player.
    pub group_countries: bool,
    pub seed: u64,
}

impl Default for AttributionConfig {
    fn default() -> Self {
        Self {
            background_size: 100,
            max_features: 20,
            group_countries: true,
            seed: 0,
        }
    }
}

/// Players of the attribution game and the columns each one controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerMap {
    pub names: Vec<String>,
    pub columns: Vec<Vec<usize>>,
}

impl PlayerMap {
    /// One player per column.
    pub fn identity(column_names: &[String]) -> Self {
        Self {
            names: column_names.to_vec(),
            columns: (0..column_names.len()).map(|j| vec![j]).collect(),
        }
    }

    /// One player per column, except that all `country_*` columns form the single
    /// player `country_code`, placed where the first country column was.
    pub fn group_countries(column_names: &[String]) -> Self {
        let mut names = Vec::new();
        let mut columns: Vec<Vec<usize>> = Vec::new();
        let mut country_player: Option<usize> = None;
        for (j, name) in column_names.iter().enumerate() {
            if name.starts_with(COUNTRY_PREFIX) {
                match country_player {
                    Some(p) => columns[p].push(j),
                    None => {
                        country_player = Some(names.len());
                        names.push(COUNTRY_FEATURE.to_string());
                        columns.push(vec![j]);
                    }
                }
            } else {
                names.push(name.clone());
                columns.push(vec![j]);
            }
        }
        Self { names, columns }
    }

    pub fn for_config(column_names: &[String], config: &AttributionConfig) -> Self {
        if config.group_countries {
            Self::group_countries(column_names)
        } else {
            Self::identity(column_names)
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Player owning each column; checks that players partition `0..n_columns`.
    fn owner_of_columns(&self, n_columns: usize) -> Result<Vec<usize>> {
        let mut owner = vec![usize::MAX; n_columns];
        for (p, cols) in self.columns.iter().enumerate() {
            for &c in cols {
                if c >= n_columns || owner[c] != usize::MAX {
                    return Err(Error::InvalidInput(format!(
                        "player map does not partition the {n_columns} columns"
                    )));
                }
                owner[c] = p;
            }
        }
        if owner.contains(&usize::MAX) {
            return Err(Error::InvalidInput(
                "player map leaves columns unassigned".into(),
            ));
        }
        Ok(owner)
    }
}

/// Samples `size` background rows (all rows if fewer), in ascending row order.
pub fn sample_background(train: &Matrix, size: usize, seed: u64) -> Result<Matrix> {
    if train.n_rows() == 0 || size == 0 {
        return Err(Error::EmptyBackground);
    }
    let take = size.min(train.n_rows());
    let mut idx = sample(&mut rng::seeded(seed), train.n_rows(), take).into_vec();
    idx.sort_unstable();
    let rows: Vec<&[f64]> = idx.iter().map(|&i| train.row(i)).collect();
    Matrix::from_rows(&rows)
}

/// A prepared attribution game for one model and background.
pub struct Game<'a, P: Predictor + ?Sized> {
    model: &'a P,
    background: &'a Matrix,
    players: &'a PlayerMap,
    owner: Vec<usize>,
}

impl<'a, P: Predictor + ?Sized> Game<'a, P> {
    pub fn new(
        model: &'a P,
        background: &'a Matrix,
        players: &'a PlayerMap,
        max_features: usize,
    ) -> Result<Self> {
        if background.n_rows() == 0 {
            return Err(Error::EmptyBackground);
        }
        if background.n_cols() != model.n_features() {
            return Err(Error::InvalidInput(format!(
                "background has {} columns, model expects {}",
                background.n_cols(),
                model.n_features()
            )));
        }
        let max = max_features.min(ABSOLUTE_MAX_PLAYERS);
        if players.len() > max {
            return Err(Error::TooManyPlayers {
                players: players.len(),
                max,
            });
        }
        let owner = players.owner_of_columns(background.n_cols())?;
        Ok(Self {
            model,
            background,
            players,
            owner,
        })
    }

    pub fn n_players(&self) -> usize {
        self.players.len()
    }

    fn full_mask(&self) -> u64 {
        (1u64 << self.n_players()) - 1
    }

    fn check_instance(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.background.n_cols() {
            return Err(Error::InvalidInput(format!(
                "instance has {} columns, expected {}",
                x.len(),
                self.background.n_cols()
            )));
        }
        Ok(())
    }

    /// `v(S)` for the coalition encoded by `mask` (bit `i` = player `i`).
    pub fn value(&self, x: &[f64], mask: u64) -> f64 {
        if mask == self.full_mask() {
            return self.model.predict_row(x);
        }
        let mut mixed = vec![0.0; x.len()];
        let mut total = 0.0;
        for b in self.background.rows() {
            for (j, slot) in mixed.iter_mut().enumerate() {
                *slot = if mask >> self.owner[j] & 1 == 1 {
                    x[j]
                } else {
                    b[j]
                };
            }
            total += self.model.predict_row(&mixed);
        }
        total / self.background.n_rows() as f64
    }

    /// Mean model output over the background, `v(∅)`.
    pub fn base_value(&self) -> f64 {
        let total: f64 = self
            .background
            .rows()
            .map(|b| self.model.predict_row(b))
            .sum();
        total / self.background.n_rows() as f64
    }

    /// Exact Shapley values of every player for instance `x`.
    pub fn shapley_values(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_instance(x)?;
        let m = self.n_players();
        let values: Vec<f64> = (0..1u64 << m)
            .into_par_iter()
            .map(|mask| self.value(x, mask))
            .collect();
        Ok(phi_from_values(&values, m))
    }
}

/// Shapley values from a complete table of coalition values.
pub fn phi_from_values(values: &[f64], m: usize) -> Vec<f64> {
    assert_eq!(values.len(), 1usize << m);
    // weight(s) = s!(m−s−1)!/m! = 1 / (m · C(m−1, s))
    let mut weight = vec![0.0; m.max(1)];
    let mut binom = 1.0;
    for (s, w) in weight.iter_mut().enumerate().take(m) {
        *w = 1.0 / (m as f64 * binom);
        binom = binom * (m - 1 - s) as f64 / (s + 1) as f64;
    }
    (0..m)
        .map(|i| {
            let bit = 1u64 << i;
            let mut phi = 0.0;
            for mask in 0..(1u64 << m) {
                if mask & bit == 0 {
                    let s = mask.count_ones() as usize;
                    phi += weight[s] * (values[(mask | bit) as usize] - values[mask as usize]);
                }
            }
            phi
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceAttribution {
    /// Model output on the instance.
    pub prediction: f64,
    /// One value per player.
    pub phi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionReport {
    pub players: Vec<String>,
    pub base_value: f64,
    pub instances: Vec<InstanceAttribution>,
    /// Mean |φ| per player, aligned with `players`.
    pub global_importance: Vec<f64>,
    /// Players by descending importance, ties by name.
    pub ranking: Vec<String>,
}

impl AttributionReport {
    pub fn importance_ranking(&self) -> Ranking {
        let w: Vec<(String, f64)> = self
            .players
            .iter()
            .cloned()
            .zip(self.global_importance.iter().copied())
            .collect();
        Ranking::from_weights(&w)
    }

    /// Largest `|Σφ + base − f(x)|` over the explained instances.
    pub fn max_efficiency_gap(&self) -> f64 {
        self.instances
            .iter()
            .map(|a| (a.phi.iter().sum::<f64>() + self.base_value - a.prediction).abs())
            .fold(0.0, f64::max)
    }
}

/// Explains every row of `instances` and aggregates mean-|φ| importance.
pub fn global_importance<P: Predictor + ?Sized>(
    model: &P,
    instances: &Matrix,
    background: &Matrix,
    players: &PlayerMap,
    max_features: usize,
) -> Result<AttributionReport> {
    if instances.n_rows() == 0 {
        return Err(Error::InvalidInput("no instances to explain".into()));
    }
    let game = Game::new(model, background, players, max_features)?;
    let rows: Vec<InstanceAttribution> = (0..instances.n_rows())
        .map(|i| {
            let x = instances.row(i);
            Ok(InstanceAttribution {
                prediction: model.predict_row(x),
                phi: game.shapley_values(x)?,
            })
        })
        .collect::<Result<_>>()?;
    let m = players.len();
    let importance: Vec<f64> = (0..m)
        .map(|p| rows.iter().map(|r| r.phi[p].abs()).sum::<f64>() / rows.len() as f64)
        .collect();
    let mut report = AttributionReport {
        players: players.names.clone(),
        base_value: game.base_value(),
        instances: rows,
        global_importance: importance,
        ranking: Vec::new(),
    };
    report.ranking = report.importance_ranking().features();
    Ok(report)
}
