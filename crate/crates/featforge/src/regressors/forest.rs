//! Random forest: bootstrap bagging over CART trees with per-split feature
//! subsampling. Predictions are the plain mean over members.

use rand::Rng;
use rayon::prelude::*;

use super::tree::{DecisionTree, TreeFitter};
use super::RegressorSpec;
use crate::matrix::Matrix;
use crate::seeding;

/// Stream tag base for ensemble members; member `m` uses `FOREST_TAG + m`.
const FOREST_TAG: u64 = 0xF0_0000;

/// Fits `spec.n_estimators` trees. Each member draws from its own derived
/// RNG stream, so the parallel fit equals a sequential one.
pub(crate) fn fit_forest(spec: &RegressorSpec, x: &Matrix, y: &[f64]) -> Vec<DecisionTree> {
    let d = x.n_cols();
    let mtry = ((spec.feature_subsample * d as f64).ceil() as usize).clamp(1, d);
    let fitter = TreeFitter {
        max_depth: spec.max_depth,
        min_samples_leaf: spec.min_samples_leaf,
        mtry,
    };
    let w = vec![1.0; y.len()];
    let all_rows: Vec<usize> = (0..y.len()).collect();
    (0..spec.n_estimators)
        .into_par_iter()
        .map(|m| {
            let mut rng = seeding::rng_for(spec.seed, FOREST_TAG + m as u64);
            let rows: Vec<usize> = if spec.bootstrap {
                (0..y.len()).map(|_| rng.random_range(0..y.len())).collect()
            } else {
                all_rows.clone()
            };
            fitter.fit(x, y, &w, &rows, &mut rng)
        })
        .collect()
}

pub(crate) fn predict_forest(trees: &[DecisionTree], row: &[f64]) -> f64 {
    let sum: f64 = trees.iter().map(|t| t.predict_row(row)).sum();
    sum / trees.len() as f64
}
