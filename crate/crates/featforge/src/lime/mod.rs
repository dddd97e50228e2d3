//! Local surrogate explanations and their aggregation into a global
//! feature-importance ranking.
//!
//! An instance is explained by sampling perturbations around it, weighting
//! them by an exponential kernel on standardized distance, scoring them with
//! the model under explanation, and fitting a weighted lasso surrogate. The
//! surrogate's coefficients are the local explanation. Global rankings
//! aggregate absolute coefficients over a picked set of instances, chosen
//! either by uniform sampling or by greedy submodular coverage.

mod lasso;
mod pick;

use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use lasso::{lasso_kkt_residual, weighted_lasso};
pub use pick::{coverage, feature_importances, submodular_pick};

use crate::dataset::{Dataset, FeatureStats};
use crate::matrix::Matrix;
use crate::regressors::{ModelError, Predictor};
use crate::seeding;

/// Stream tag for one instance's perturbation draw.
const PERTURB_TAG: u64 = 0x11_3E;
/// Stream tag base for per-instance explanation streams.
const EXPLAIN_TAG: u64 = 0xE0_0000;
/// Stream tag for drawing the instance pool of a global ranking.
const POOL_TAG: u64 = 0x900_1;

/// Candidate pool size for the greedy pick, as a multiple of the budget.
const GREEDY_POOL_FACTOR: usize = 4;

#[derive(Debug, Error)]
pub enum LimeError {
    #[error("need at least 2 perturbations, got {0}")]
    TooFewPerturbations(usize),
    #[error("kernel width must be positive, got {0}")]
    BadKernelWidth(f64),
    #[error("lasso penalty must be a nonnegative finite number, got {0}")]
    BadLambda(f64),
    #[error("rows disagree: {rows} sample rows, {targets} targets, {weights} weights")]
    ShapeMismatch { rows: usize, targets: usize, weights: usize },
    #[error("sample weights must be nonnegative")]
    NegativeWeight,
    #[error("all sample weights are zero")]
    AllZeroWeights,
    #[error("no explanations to pick from")]
    NoExplanations,
    #[error("budget {budget} must be in 1..={available}")]
    BadBudget { budget: usize, available: usize },
    #[error("instance index {index} out of range for {rows} rows")]
    InstanceOutOfRange { index: usize, rows: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Settings for one local explanation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LimeConfig {
    pub n_perturbations: usize,
    /// Unset means the default width `0.75 * sqrt(feature count)`.
    pub kernel_width: Option<f64>,
    pub lasso_lambda: f64,
    pub seed: u64,
}

impl Default for LimeConfig {
    fn default() -> Self {
        Self { n_perturbations: 5000, kernel_width: None, lasso_lambda: 0.01, seed: 0 }
    }
}

impl LimeConfig {
    pub fn effective_kernel_width(&self, n_features: usize) -> f64 {
        self.kernel_width.unwrap_or(0.75 * (n_features as f64).sqrt())
    }

    fn validate(&self, n_features: usize) -> Result<(), LimeError> {
        if self.n_perturbations < 2 {
            return Err(LimeError::TooFewPerturbations(self.n_perturbations));
        }
        let w = self.effective_kernel_width(n_features);
        if !(w > 0.0) || !w.is_finite() {
            return Err(LimeError::BadKernelWidth(w));
        }
        if self.lasso_lambda < 0.0 || !self.lasso_lambda.is_finite() {
            return Err(LimeError::BadLambda(self.lasso_lambda));
        }
        Ok(())
    }
}

/// Surrogate fit around one instance. Coefficients are in standardized
/// feature units (per training-split mean/std), so magnitudes are comparable
/// across features with different physical scales.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalExplanation {
    pub instance: usize,
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    /// Kernel-weighted R^2 of the surrogate on its own perturbation sample.
    pub local_fit_r2: f64,
}

/// How picked instances are chosen for the global ranking.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PickMethod {
    GreedySubmodular,
    Sampling,
}

/// How local coefficient magnitudes combine into one weight per feature.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    Sum,
    Mean,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PickConfig {
    pub method: PickMethod,
    pub budget: usize,
    pub aggregation: Aggregation,
}

impl Default for PickConfig {
    fn default() -> Self {
        Self { method: PickMethod::Sampling, budget: 1000, aggregation: Aggregation::Sum }
    }
}

/// Features ordered from least to most important. Entry 0 (rank 1) is the
/// least important feature; the last entry matters most.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlobalRanking {
    pub entries: Vec<RankedFeature>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedFeature {
    pub feature: String,
    pub weight: f64,
}

impl GlobalRanking {
    /// The `k` least important feature names, in ranking order.
    pub fn least_important(&self, k: usize) -> Vec<&str> {
        self.entries.iter().take(k).map(|e| e.feature.as_str()).collect()
    }

    pub fn position(&self, feature: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.feature == feature)
    }
}

/// Exponential smoothing kernel `exp(-distance^2 / width^2)`: 1 at distance
/// zero, strictly decreasing, never reaching 0.
pub fn kernel_weight(distance: f64, width: f64) -> f64 {
    (-(distance * distance) / (width * width)).exp()
}

/// Draws the perturbation sample around `x`.
///
/// Row 0 is `x` itself; the remaining rows draw each feature independently
/// from a Gaussian with the training column's mean and (clamped) std.
/// Distances are Euclidean between the sample row and `x` in standardized
/// coordinates, so row 0 has distance 0.
pub fn perturb(
    x: &[f64],
    stats: &FeatureStats,
    cfg: &LimeConfig,
) -> Result<(Matrix, Vec<f64>), LimeError> {
    let d = x.len();
    cfg.validate(d)?;
    let n = cfg.n_perturbations;
    let mut rng = seeding::rng_for(cfg.seed, PERTURB_TAG);

    let mut samples = Matrix::zeros(n, d);
    let mut distances = vec![0.0; n];
    for (j, &v) in x.iter().enumerate() {
        samples.set(0, j, v);
    }
    for i in 1..n {
        let mut dist2 = 0.0;
        for j in 0..d {
            let normal = Normal::new(stats.mean[j], stats.std[j]).expect("std is positive");
            let v = normal.sample(&mut rng);
            samples.set(i, j, v);
            let z = (v - x[j]) / stats.std[j];
            dist2 += z * z;
        }
        distances[i] = dist2.sqrt();
    }
    Ok((samples, distances))
}

/// Weighted coefficient of determination of predictions against targets.
/// A (numerically) constant target counts as perfectly fit.
fn weighted_r2(y: &[f64], y_hat: &[f64], w: &[f64]) -> f64 {
    let w_sum: f64 = w.iter().sum();
    let mean = y.iter().zip(w).map(|(v, wi)| v * wi).sum::<f64>() / w_sum;
    let ss_tot: f64 = y.iter().zip(w).map(|(v, wi)| wi * (v - mean) * (v - mean)).sum();
    let scale = 1.0 + mean * mean;
    if ss_tot <= 1e-18 * w_sum * scale {
        return 1.0;
    }
    let ss_res: f64 =
        y.iter().zip(y_hat).zip(w).map(|((t, p), wi)| wi * (t - p) * (t - p)).sum();
    1.0 - ss_res / ss_tot
}

fn explain_with_stats<P: Predictor>(
    model: &P,
    train: &Dataset,
    stats: &FeatureStats,
    instance: usize,
    cfg: &LimeConfig,
) -> Result<LocalExplanation, LimeError> {
    if instance >= train.n_rows() {
        return Err(LimeError::InstanceOutOfRange { index: instance, rows: train.n_rows() });
    }
    let x = train.values().row(instance);
    // Independent stream per instance, so explaining instances in parallel
    // or in any order yields identical results.
    let instance_cfg = LimeConfig {
        seed: seeding::derive_seed(cfg.seed, EXPLAIN_TAG + instance as u64),
        ..cfg.clone()
    };
    let (samples, distances) = perturb(x, stats, &instance_cfg)?;
    let predictions = model.predict(&samples)?;
    let width = cfg.effective_kernel_width(x.len());
    let weights: Vec<f64> = distances.iter().map(|&d| kernel_weight(d, width)).collect();

    let mut standardized = Matrix::zeros(samples.n_rows(), samples.n_cols());
    for (i, row) in samples.rows().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            standardized.set(i, j, (v - stats.mean[j]) / stats.std[j]);
        }
    }
    let (coefficients, intercept) =
        weighted_lasso(&standardized, &predictions, &weights, cfg.lasso_lambda)?;
    let fitted: Vec<f64> = standardized
        .rows()
        .map(|row| intercept + row.iter().zip(&coefficients).map(|(v, b)| v * b).sum::<f64>())
        .collect();
    let local_fit_r2 = weighted_r2(&predictions, &fitted, &weights);
    Ok(LocalExplanation { instance, coefficients, intercept, local_fit_r2 })
}

/// Explains one training instance by index.
pub fn explain_local<P: Predictor>(
    model: &P,
    train: &Dataset,
    instance: usize,
    cfg: &LimeConfig,
) -> Result<LocalExplanation, LimeError> {
    explain_with_stats(model, train, &train.stats(), instance, cfg)
}

fn explain_many<P: Predictor>(
    model: &P,
    train: &Dataset,
    stats: &FeatureStats,
    instances: &[usize],
    cfg: &LimeConfig,
) -> Result<Vec<LocalExplanation>, LimeError> {
    instances
        .par_iter()
        .map(|&i| explain_with_stats(model, train, stats, i, cfg))
        .collect()
}

/// Ranks every feature of `data` from least to most important.
///
/// Sampling draws `budget` instances uniformly without replacement; the
/// greedy method explains a pool of up to `4 * budget` instances and picks
/// `budget` of them by submodular coverage. Either way the per-feature
/// weight aggregates `|coefficient|` over the picked explanations, and the
/// result is sorted ascending (ties keep feature order).
pub fn global_ranking<P: Predictor>(
    model: &P,
    data: &Dataset,
    lime_cfg: &LimeConfig,
    pick_cfg: &PickConfig,
) -> Result<GlobalRanking, LimeError> {
    let rows = data.n_rows();
    if pick_cfg.budget == 0 || pick_cfg.budget > rows {
        return Err(LimeError::BadBudget { budget: pick_cfg.budget, available: rows });
    }
    let stats = data.stats();
    let mut pool_rng = seeding::rng_for(lime_cfg.seed, POOL_TAG);

    let picked: Vec<LocalExplanation> = match pick_cfg.method {
        PickMethod::Sampling => {
            let chosen: Vec<usize> = if pick_cfg.budget == rows {
                (0..rows).collect()
            } else {
                rand::seq::index::sample(&mut pool_rng, rows, pick_cfg.budget).into_vec()
            };
            explain_many(model, data, &stats, &chosen, lime_cfg)?
        }
        PickMethod::GreedySubmodular => {
            let pool_size = rows.min(pick_cfg.budget.saturating_mul(GREEDY_POOL_FACTOR));
            let pool: Vec<usize> = if pool_size == rows {
                (0..rows).collect()
            } else {
                rand::seq::index::sample(&mut pool_rng, rows, pool_size).into_vec()
            };
            let explanations = explain_many(model, data, &stats, &pool, lime_cfg)?;
            let keep = submodular_pick(&explanations, pick_cfg.budget)?;
            keep.into_iter().map(|i| explanations[i].clone()).collect()
        }
    };

    let d = data.n_features();
    let mut weights = vec![0.0; d];
    for e in &picked {
        for (wj, c) in weights.iter_mut().zip(&e.coefficients) {
            *wj += c.abs();
        }
    }
    if pick_cfg.aggregation == Aggregation::Mean {
        for wj in &mut weights {
            *wj /= picked.len() as f64;
        }
    }

    let names = data.feature_names();
    let mut entries: Vec<RankedFeature> = names
        .iter()
        .zip(&weights)
        .map(|(n, &w)| RankedFeature { feature: n.to_string(), weight: w })
        .collect();
    entries.sort_by(|a, b| a.weight.partial_cmp(&b.weight).unwrap());
    Ok(GlobalRanking { entries })
}
