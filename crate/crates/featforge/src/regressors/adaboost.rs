//! AdaBoost.R2 boosting over shallow regression trees.
//!
//! Each round fits a weighted tree, scores its per-row losses against the
//! largest absolute error, reweights rows by `beta^(1 - loss)`, and stores
//! the tree with log-weight `ln(1/beta)`. Prediction is the weighted median
//! over members, which is robust to single bad estimators.

use serde::{Deserialize, Serialize};

use super::tree::{DecisionTree, TreeFitter};
use super::{LossShape, RegressorSpec};
use crate::matrix::Matrix;
use crate::seeding;

/// Base-tree depth used when max_depth is unset.
const DEFAULT_BASE_DEPTH: usize = 4;

const ADABOOST_TAG: u64 = 0xADA_0000;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AdaBoostEnsemble {
    trees: Vec<DecisionTree>,
    /// Per-member `ln(1/beta)`; larger means more trusted.
    log_weights: Vec<f64>,
}

impl AdaBoostEnsemble {
    pub fn n_members(&self) -> usize {
        self.trees.len()
    }

    pub fn members(&self) -> &[DecisionTree] {
        &self.trees
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    /// Weighted median over member predictions: sort members by predicted
    /// value and take the first whose cumulative weight reaches half the
    /// total. Ties in predicted value keep member order, so the result is
    /// deterministic.
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut preds: Vec<(f64, f64)> =
            self.trees.iter().zip(&self.log_weights).map(|(t, &a)| (t.predict_row(row), a)).collect();
        preds.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let total: f64 = preds.iter().map(|(_, a)| a).sum();
        let mut cum = 0.0;
        for (p, a) in &preds {
            cum += a;
            if cum >= 0.5 * total {
                return *p;
            }
        }
        preds.last().map(|(p, _)| *p).unwrap_or(0.0)
    }
}

/// Runs the boosting rounds, invoking `on_round` with the renormalized row
/// weights after every completed round.
pub(crate) fn fit_adaboost_observed(
    spec: &RegressorSpec,
    x: &Matrix,
    y: &[f64],
    mut on_round: impl FnMut(&[f64]),
) -> AdaBoostEnsemble {
    let n = y.len();
    let fitter = TreeFitter {
        max_depth: Some(spec.max_depth.unwrap_or(DEFAULT_BASE_DEPTH)),
        min_samples_leaf: spec.min_samples_leaf,
        mtry: x.n_cols(),
    };
    let rows: Vec<usize> = (0..n).collect();
    let mut w = vec![1.0 / n as f64; n];
    let mut trees = Vec::new();
    let mut log_weights = Vec::new();

    for m in 0..spec.n_estimators {
        let mut rng = seeding::rng_for(spec.seed, ADABOOST_TAG + m as u64);
        let tree = fitter.fit(x, y, &w, &rows, &mut rng);
        let errors: Vec<f64> =
            (0..n).map(|i| (tree.predict_row(x.row(i)) - y[i]).abs()).collect();
        let err_max = errors.iter().cloned().fold(0.0, f64::max);

        if err_max == 0.0 {
            // Perfect member; trust it fully and stop boosting.
            trees.push(tree);
            log_weights.push(1.0);
            on_round(&w);
            break;
        }

        let losses: Vec<f64> = errors
            .iter()
            .map(|e| {
                let r = e / err_max;
                match spec.loss_shape {
                    LossShape::Linear => r,
                    LossShape::Square => r * r,
                    LossShape::Exponential => 1.0 - (-r).exp(),
                }
            })
            .collect();
        let avg_loss: f64 = w.iter().zip(&losses).map(|(wi, li)| wi * li).sum();

        if avg_loss <= 0.0 {
            trees.push(tree);
            log_weights.push(1.0);
            on_round(&w);
            break;
        }
        if avg_loss >= 0.5 {
            // Too weak to help; keep it only if the ensemble would otherwise
            // be empty.
            if trees.is_empty() {
                trees.push(tree);
                log_weights.push(1.0);
                on_round(&w);
            }
            break;
        }

        let beta = avg_loss / (1.0 - avg_loss);
        trees.push(tree);
        log_weights.push((1.0 / beta).ln());

        for (wi, li) in w.iter_mut().zip(&losses) {
            *wi *= beta.powf(1.0 - li);
        }
        let sum: f64 = w.iter().sum();
        if sum <= 0.0 {
            break;
        }
        for wi in &mut w {
            *wi /= sum;
        }
        on_round(&w);
    }

    AdaBoostEnsemble { trees, log_weights }
}

pub(crate) fn fit_adaboost(spec: &RegressorSpec, x: &Matrix, y: &[f64]) -> AdaBoostEnsemble {
    fit_adaboost_observed(spec, x, y, |_| {})
}
