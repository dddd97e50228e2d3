//! Pluggable regression models and the evaluation metrics used throughout
//! the pipeline.
//!
//! Three model families share one [`RegressorSpec`]: a CART decision tree,
//! a random forest (bootstrap bagging plus per-split feature subsampling),
//! and AdaBoost.R2 over shallow trees. Fields irrelevant to a family are
//! ignored during its training.

mod adaboost;
mod forest;
mod tree;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use adaboost::AdaBoostEnsemble;
pub use tree::DecisionTree;

use crate::dataset::Dataset;
use crate::matrix::Matrix;
use crate::seeding;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("cannot train on an empty dataset")]
    EmptyDataset,
    #[error("invalid regressor spec: {0}")]
    InvalidSpec(String),
    #[error("input has {got} columns but the model was trained on {expected}")]
    ColumnCountMismatch { expected: usize, got: usize },
    #[error("input feature names do not match the model's training columns")]
    FeatureNamesMismatch,
    #[error("vectors have different lengths ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("metric undefined on empty vectors")]
    EmptyVectors,
    #[error("R^2 is undefined for a zero-variance target")]
    ZeroVarianceTarget,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegressorKind {
    DecisionTree,
    RandomForest,
    AdaBoost,
}

/// Loss applied to normalized absolute errors in AdaBoost.R2 rounds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossShape {
    Linear,
    Square,
    Exponential,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressorSpec {
    pub kind: RegressorKind,
    /// Ensemble size; ignored by the plain decision tree.
    pub n_estimators: usize,
    /// Unset means unlimited for trees and forests, and the default base
    /// depth 4 for AdaBoost members. Zero yields single-leaf trees.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Fraction of features considered per split (forest only).
    pub feature_subsample: f64,
    /// Draw each member's rows with replacement (forest only).
    pub bootstrap: bool,
    /// AdaBoost.R2 loss shape; ignored elsewhere.
    pub loss_shape: LossShape,
    pub seed: u64,
}

impl RegressorSpec {
    pub fn decision_tree(seed: u64) -> Self {
        Self {
            kind: RegressorKind::DecisionTree,
            n_estimators: 1,
            max_depth: None,
            min_samples_leaf: 1,
            feature_subsample: 1.0,
            bootstrap: false,
            loss_shape: LossShape::Linear,
            seed,
        }
    }

    pub fn random_forest(seed: u64) -> Self {
        Self {
            kind: RegressorKind::RandomForest,
            n_estimators: 100,
            max_depth: None,
            min_samples_leaf: 1,
            feature_subsample: 1.0 / 3.0,
            bootstrap: true,
            loss_shape: LossShape::Linear,
            seed,
        }
    }

    pub fn adaboost(seed: u64) -> Self {
        Self {
            kind: RegressorKind::AdaBoost,
            n_estimators: 100,
            max_depth: None,
            min_samples_leaf: 1,
            feature_subsample: 1.0,
            bootstrap: false,
            loss_shape: LossShape::Linear,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.n_estimators == 0 {
            return Err(ModelError::InvalidSpec("n_estimators must be at least 1".into()));
        }
        if self.min_samples_leaf == 0 {
            return Err(ModelError::InvalidSpec("min_samples_leaf must be at least 1".into()));
        }
        if !(self.feature_subsample > 0.0 && self.feature_subsample <= 1.0) {
            return Err(ModelError::InvalidSpec("feature_subsample must be in (0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ModelInner {
    Tree(DecisionTree),
    Forest(Vec<DecisionTree>),
    AdaBoost(AdaBoostEnsemble),
}

/// A fitted model plus its training-time column contract.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainedModel {
    pub spec: RegressorSpec,
    pub feature_names: Vec<String>,
    inner: ModelInner,
}

/// Read-only prediction interface shared by everything that scores rows.
pub trait Predictor: Sync {
    fn n_features(&self) -> usize;

    fn predict_row(&self, row: &[f64]) -> f64;

    fn predict(&self, rows: &Matrix) -> Result<Vec<f64>, ModelError> {
        if rows.n_cols() != self.n_features() {
            return Err(ModelError::ColumnCountMismatch {
                expected: self.n_features(),
                got: rows.n_cols(),
            });
        }
        Ok(rows.rows().map(|r| self.predict_row(r)).collect())
    }
}

impl Predictor for TrainedModel {
    fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    fn predict_row(&self, row: &[f64]) -> f64 {
        match &self.inner {
            ModelInner::Tree(t) => t.predict_row(row),
            ModelInner::Forest(trees) => forest::predict_forest(trees, row),
            ModelInner::AdaBoost(e) => e.predict_row(row),
        }
    }
}

impl TrainedModel {
    /// Predicts a dataset's rows after checking its feature columns match
    /// the training contract by name and order.
    pub fn predict_dataset(&self, data: &Dataset) -> Result<Vec<f64>, ModelError> {
        if data.feature_names() != self.feature_names {
            return Err(ModelError::FeatureNamesMismatch);
        }
        self.predict(data.values())
    }
}

pub fn train(spec: &RegressorSpec, data: &Dataset) -> Result<TrainedModel, ModelError> {
    spec.validate()?;
    if data.n_rows() == 0 {
        return Err(ModelError::EmptyDataset);
    }
    let x = data.values();
    let y = data.target();
    let inner = match spec.kind {
        RegressorKind::DecisionTree => {
            let fitter = tree::TreeFitter {
                max_depth: spec.max_depth,
                min_samples_leaf: spec.min_samples_leaf,
                mtry: x.n_cols(),
            };
            let w = vec![1.0; y.len()];
            let rows: Vec<usize> = (0..y.len()).collect();
            let mut rng = seeding::rng_for(spec.seed, 0x7E_EE);
            ModelInner::Tree(fitter.fit(x, y, &w, &rows, &mut rng))
        }
        RegressorKind::RandomForest => ModelInner::Forest(forest::fit_forest(spec, x, y)),
        RegressorKind::AdaBoost => ModelInner::AdaBoost(adaboost::fit_adaboost(spec, x, y)),
    };
    Ok(TrainedModel {
        spec: spec.clone(),
        feature_names: data.feature_names().iter().map(|s| s.to_string()).collect(),
        inner,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionMetrics {
    pub r2: f64,
    pub rmse: f64,
}

/// Coefficient of determination, `1 - SS_res / SS_tot`.
pub fn r2_score(y_true: &[f64], y_pred: &[f64]) -> Result<f64, ModelError> {
    check_lengths(y_true, y_pred)?;
    let n = y_true.len() as f64;
    let mean = y_true.iter().sum::<f64>() / n;
    let ss_tot: f64 = y_true.iter().map(|y| (y - mean) * (y - mean)).sum();
    if ss_tot <= 0.0 {
        return Err(ModelError::ZeroVarianceTarget);
    }
    let ss_res: f64 = y_true.iter().zip(y_pred).map(|(t, p)| (t - p) * (t - p)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Root mean squared residual.
pub fn rmse(y_true: &[f64], y_pred: &[f64]) -> Result<f64, ModelError> {
    check_lengths(y_true, y_pred)?;
    let n = y_true.len() as f64;
    let ss: f64 = y_true.iter().zip(y_pred).map(|(t, p)| (t - p) * (t - p)).sum();
    Ok((ss / n).sqrt())
}

fn check_lengths(a: &[f64], b: &[f64]) -> Result<(), ModelError> {
    if a.is_empty() {
        return Err(ModelError::EmptyVectors);
    }
    if a.len() != b.len() {
        return Err(ModelError::LengthMismatch { left: a.len(), right: b.len() });
    }
    Ok(())
}

/// Scores a model on a dataset (matching columns required).
pub fn evaluate(model: &TrainedModel, data: &Dataset) -> Result<PredictionMetrics, ModelError> {
    let preds = model.predict_dataset(data)?;
    Ok(PredictionMetrics {
        r2: r2_score(data.target(), &preds)?,
        rmse: rmse(data.target(), &preds)?,
    })
}
