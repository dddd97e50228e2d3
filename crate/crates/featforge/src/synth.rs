//! Ground-truth dataset generators and brute-force oracles for tests.
//!
//! The generator builds datasets whose target is an exact polynomial in the
//! features plus Gaussian noise, so recovery tests know the right answer.
//! The oracles re-solve the weighted lasso by exhaustive grid search and
//! score every feature subset's interaction strength, giving the fast
//! implementations something independent to agree with.

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{DataError, Dataset, FeatureDescriptor};
use crate::matrix::Matrix;
use crate::nid::{interaction_strength, InteractionCandidate, MlpWeights};
use crate::seeding;

const FEATURE_TAG: u64 = 0x5F_0001;
const NOISE_TAG: u64 = 0x5F_0002;

/// Grid points per axis in the default brute-force lasso search.
pub const DEFAULT_GRID_RESOLUTION: usize = 401;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("a synthetic spec needs at least one term")]
    NoTerms,
    #[error("term references feature index {index} but there are {n_features} features")]
    BadTermIndex { index: usize, n_features: usize },
    #[error("a term needs a nonempty set of distinct feature indices")]
    BadTermSet,
    #[error("noise_sigma must be nonnegative and finite")]
    BadNoise,
    #[error("brute-force lasso supports at most {max} features, got {got}")]
    TooManyLassoFeatures { got: usize, max: usize },
    #[error("exhaustive interaction scoring supports at most {max} features, got {got}")]
    TooManyOracleFeatures { got: usize, max: usize },
    #[error("grid resolution must be at least 3, got {0}")]
    BadResolution(usize),
    #[error(transparent)]
    Data(#[from] DataError),
}

/// One additive target term: `coefficient * product of the named features`.
/// A singleton feature set is a plain linear term.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticTerm {
    pub coefficient: f64,
    /// Distinct 0-based feature indices.
    pub features: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureDistribution {
    /// Uniform on [-1, 1].
    Uniform,
    StandardNormal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_rows: usize,
    pub n_features: usize,
    pub terms: Vec<SyntheticTerm>,
    pub noise_sigma: f64,
    pub distribution: FeatureDistribution,
    pub seed: u64,
}

impl SyntheticSpec {
    fn validate(&self) -> Result<(), SynthError> {
        if self.terms.is_empty() {
            return Err(SynthError::NoTerms);
        }
        for term in &self.terms {
            if term.features.is_empty() {
                return Err(SynthError::BadTermSet);
            }
            let mut sorted = term.features.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != term.features.len() {
                return Err(SynthError::BadTermSet);
            }
            if let Some(&index) = term.features.iter().find(|&&f| f >= self.n_features) {
                return Err(SynthError::BadTermIndex { index, n_features: self.n_features });
            }
        }
        if self.noise_sigma < 0.0 || !self.noise_sigma.is_finite() {
            return Err(SynthError::BadNoise);
        }
        Ok(())
    }
}

/// Builds the dataset (features "x1".."xd", target "y") and echoes the
/// ground-truth terms. Features and noise draw from separate seeded streams,
/// so changing `noise_sigma` never changes the feature values.
pub fn generate(spec: &SyntheticSpec) -> Result<(Dataset, Vec<SyntheticTerm>), SynthError> {
    spec.validate()?;
    let mut feature_rng = seeding::rng_for(spec.seed, FEATURE_TAG);
    let mut noise_rng = seeding::rng_for(spec.seed, NOISE_TAG);
    let standard = Normal::new(0.0, 1.0).expect("unit scale");

    let (n, d) = (spec.n_rows, spec.n_features);
    let mut values = Matrix::zeros(n, d);
    let mut target = vec![0.0; n];
    for i in 0..n {
        let row = values.row_mut(i);
        for v in row.iter_mut() {
            *v = match spec.distribution {
                FeatureDistribution::Uniform => rand::Rng::random_range(&mut feature_rng, -1.0..1.0),
                FeatureDistribution::StandardNormal => standard.sample(&mut feature_rng),
            };
        }
        let mut y = 0.0;
        for term in &spec.terms {
            let product: f64 = term.features.iter().map(|&f| row[f]).product();
            y += term.coefficient * product;
        }
        target[i] = y + spec.noise_sigma * standard.sample(&mut noise_rng);
    }

    let features = (0..d).map(|j| FeatureDescriptor::raw(format!("x{}", j + 1))).collect();
    let dataset = Dataset::new(features, values, "y", target)?;
    Ok((dataset, spec.terms.clone()))
}

/// Weighted lasso objective `sum_i w_i (y_i - intercept - x_i . beta)^2 +
/// lambda * |beta|_1` at an explicit point.
pub fn lasso_objective(
    x: &Matrix,
    y: &[f64],
    weights: &[f64],
    lambda: f64,
    beta: &[f64],
    intercept: f64,
) -> f64 {
    let mut total = 0.0;
    for (i, row) in x.rows().enumerate() {
        let r = y[i] - intercept - row.iter().zip(beta).map(|(v, b)| v * b).sum::<f64>();
        total += weights[i] * r * r;
    }
    total + lambda * beta.iter().map(|b| b.abs()).sum::<f64>()
}

/// The intercept minimizing the weighted squared error for fixed `beta`.
pub fn profiled_intercept(x: &Matrix, y: &[f64], weights: &[f64], beta: &[f64]) -> f64 {
    let w_sum: f64 = weights.iter().sum();
    let mut acc = 0.0;
    for (i, row) in x.rows().enumerate() {
        acc += weights[i]
            * (y[i] - row.iter().zip(beta).map(|(v, b)| v * b).sum::<f64>());
    }
    acc / w_sum
}

/// Centered sufficient statistics: Gram matrix `G`, correlation vector `b`,
/// and constant `c`, so that the squared-error part of the objective with a
/// profiled intercept equals `c - 2 b.beta + beta.G.beta`.
struct GramForm {
    g: Vec<Vec<f64>>,
    b: Vec<f64>,
    c: f64,
}

impl GramForm {
    fn build(x: &Matrix, y: &[f64], weights: &[f64]) -> Self {
        let d = x.n_cols();
        let w_sum: f64 = weights.iter().sum();
        let mut x_mean = vec![0.0; d];
        let mut y_mean = 0.0;
        for (i, row) in x.rows().enumerate() {
            for (m, v) in x_mean.iter_mut().zip(row) {
                *m += weights[i] * v;
            }
            y_mean += weights[i] * y[i];
        }
        for m in &mut x_mean {
            *m /= w_sum;
        }
        y_mean /= w_sum;

        let mut g = vec![vec![0.0; d]; d];
        let mut b = vec![0.0; d];
        let mut c = 0.0;
        for (i, row) in x.rows().enumerate() {
            let yc = y[i] - y_mean;
            c += weights[i] * yc * yc;
            for j in 0..d {
                let xj = row[j] - x_mean[j];
                b[j] += weights[i] * xj * yc;
                for (k, gk) in g[j].iter_mut().enumerate().skip(j) {
                    *gk += weights[i] * xj * (row[k] - x_mean[k]);
                }
            }
        }
        for j in 0..d {
            for k in 0..j {
                g[j][k] = g[k][j];
            }
        }
        Self { g, b, c }
    }

    fn objective(&self, beta: &[f64], lambda: f64) -> f64 {
        let d = beta.len();
        let mut quad = 0.0;
        let mut lin = 0.0;
        for j in 0..d {
            lin += self.b[j] * beta[j];
            for k in 0..d {
                quad += beta[j] * self.g[j][k] * beta[k];
            }
        }
        self.c - 2.0 * lin + quad + lambda * beta.iter().map(|v| v.abs()).sum::<f64>()
    }

    /// Solves `G beta = b` by Gaussian elimination with partial pivoting;
    /// `None` when (numerically) singular.
    fn ols(&self) -> Option<Vec<f64>> {
        let d = self.b.len();
        let mut a: Vec<Vec<f64>> = self
            .g
            .iter()
            .zip(&self.b)
            .map(|(row, &bi)| row.iter().copied().chain([bi]).collect())
            .collect();
        for col in 0..d {
            let pivot = (col..d).max_by(|&p, &q| {
                a[p][col].abs().partial_cmp(&a[q][col].abs()).unwrap()
            })?;
            if a[pivot][col].abs() < 1e-12 {
                return None;
            }
            a.swap(col, pivot);
            for r in 0..d {
                if r == col {
                    continue;
                }
                let factor = a[r][col] / a[col][col];
                for c in col..=d {
                    a[r][c] -= factor * a[col][c];
                }
            }
        }
        Some((0..d).map(|j| a[j][d] / a[j][j]).collect())
    }
}

/// Exhaustive grid minimization of the weighted lasso objective.
///
/// Each axis spans `[-2|ols_j| - 1, 2|ols_j| + 1]` at `resolution` points
/// (a singular system uses `[-1, 1]`), which contains the lasso optimum
/// because it shrinks from the least-squares solution toward zero. The best
/// cell is refined once with a same-resolution grid over one step in each
/// direction.
pub fn brute_force_lasso(
    x: &Matrix,
    y: &[f64],
    weights: &[f64],
    lambda: f64,
    resolution: usize,
) -> Result<Vec<f64>, SynthError> {
    let d = x.n_cols();
    if d > 3 {
        return Err(SynthError::TooManyLassoFeatures { got: d, max: 3 });
    }
    if resolution < 3 {
        return Err(SynthError::BadResolution(resolution));
    }
    let gram = GramForm::build(x, y, weights);
    let ols = gram.ols().unwrap_or_else(|| vec![0.0; d]);

    let mut center: Vec<f64> = vec![0.0; d];
    let mut half: Vec<f64> = ols.iter().map(|c| 2.0 * c.abs() + 1.0).collect();
    let mut best = center.clone();
    for _pass in 0..2 {
        best = grid_argmin(&gram, lambda, &center, &half, resolution);
        let step: Vec<f64> =
            half.iter().map(|h| 2.0 * h / (resolution - 1) as f64).collect();
        center = best.clone();
        half = step;
    }
    Ok(best)
}

/// Scans the axis-aligned grid `center ± half` and returns the argmin of
/// the Gram-form objective. Ties keep the first point in scan order.
fn grid_argmin(
    gram: &GramForm,
    lambda: f64,
    center: &[f64],
    half: &[f64],
    resolution: usize,
) -> Vec<f64> {
    let d = center.len();
    let axis: Vec<Vec<f64>> = (0..d)
        .map(|j| {
            (0..resolution)
                .map(|t| {
                    center[j] - half[j]
                        + 2.0 * half[j] * t as f64 / (resolution - 1) as f64
                })
                .collect()
        })
        .collect();
    let mut best_point = vec![0.0; d];
    let mut best_value = f64::INFINITY;
    let mut point = vec![0.0; d];
    let total: usize = resolution.pow(d as u32);
    for flat in 0..total {
        let mut rem = flat;
        for j in 0..d {
            point[j] = axis[j][rem % resolution];
            rem /= resolution;
        }
        let value = gram.objective(&point, lambda);
        if value < best_value {
            best_value = value;
            best_point.copy_from_slice(&point);
        }
    }
    best_point
}

/// Scores every feature subset of size 2 through `max_order`, sorted like
/// the greedy ranking (strength descending, then smaller set, then
/// lexicographic).
pub fn exhaustive_interaction_oracle(
    weights: &MlpWeights,
    max_order: usize,
) -> Result<Vec<InteractionCandidate>, SynthError> {
    let d = weights.n_features();
    if d > 12 {
        return Err(SynthError::TooManyOracleFeatures { got: d, max: 12 });
    }
    let mut out = Vec::new();
    for mask in 0u32..(1u32 << d) {
        let size = mask.count_ones() as usize;
        if size < 2 || size > max_order {
            continue;
        }
        let features: Vec<usize> = (0..d).filter(|&f| mask & (1 << f) != 0).collect();
        let strength = interaction_strength(weights, &features)
            .expect("bitmask subsets are valid feature sets");
        out.push(InteractionCandidate { features, strength });
    }
    out.sort_by(|a, b| {
        b.strength
            .partial_cmp(&a.strength)
            .unwrap()
            .then(a.features.len().cmp(&b.features.len()))
            .then(a.features.cmp(&b.features))
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lime::weighted_lasso;
    use rand::Rng;

    fn spec(terms: Vec<SyntheticTerm>, noise_sigma: f64) -> SyntheticSpec {
        SyntheticSpec {
            n_rows: 100,
            n_features: 3,
            terms,
            noise_sigma,
            distribution: FeatureDistribution::Uniform,
            seed: 1,
        }
    }

    fn term(coefficient: f64, features: &[usize]) -> SyntheticTerm {
        SyntheticTerm { coefficient, features: features.to_vec() }
    }

    #[test]
    fn linear_term_is_exact() {
        let (data, truth) = generate(&spec(vec![term(2.0, &[0])], 0.0)).unwrap();
        assert_eq!(truth.len(), 1);
        for (i, &y) in data.target().iter().enumerate() {
            assert_eq!(y, 2.0 * data.values().get(i, 0));
        }
    }

    #[test]
    fn product_term_matches_interaction_encoding() {
        let (data, _) = generate(&spec(vec![term(1.0, &[0, 1])], 0.0)).unwrap();
        let encoded = data.encode_interaction(&["x1", "x2"]).unwrap();
        let product = encoded.column(3);
        assert_eq!(product, data.target());
    }

    #[test]
    fn noise_variance_close_to_sigma_squared() {
        let s = SyntheticSpec {
            n_rows: 10_000,
            noise_sigma: 0.5,
            ..spec(vec![term(1.0, &[0]), term(-2.0, &[1, 2])], 0.5)
        };
        let (data, _) = generate(&s).unwrap();
        let residuals: Vec<f64> = (0..s.n_rows)
            .map(|i| {
                let row = data.values().row(i);
                data.target()[i] - (row[0] - 2.0 * row[1] * row[2])
            })
            .collect();
        let mean: f64 = residuals.iter().sum::<f64>() / residuals.len() as f64;
        let var: f64 =
            residuals.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / residuals.len() as f64;
        assert!((var - 0.25).abs() < 0.025, "residual variance {var}");
    }

    #[test]
    fn generation_is_deterministic_and_noise_stream_is_separate() {
        let a = generate(&spec(vec![term(1.0, &[0])], 0.1)).unwrap().0;
        let b = generate(&spec(vec![term(1.0, &[0])], 0.1)).unwrap().0;
        assert_eq!(a, b);
        let c = generate(&spec(vec![term(1.0, &[0])], 0.7)).unwrap().0;
        assert_eq!(a.values(), c.values(), "features unchanged by noise level");
        assert_ne!(a.target(), c.target());
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(matches!(generate(&spec(vec![], 0.0)), Err(SynthError::NoTerms)));
        assert!(matches!(
            generate(&spec(vec![term(1.0, &[5])], 0.0)),
            Err(SynthError::BadTermIndex { index: 5, .. })
        ));
        assert!(matches!(
            generate(&spec(vec![term(1.0, &[])], 0.0)),
            Err(SynthError::BadTermSet)
        ));
        assert!(matches!(
            generate(&spec(vec![term(1.0, &[1, 1])], 0.0)),
            Err(SynthError::BadTermSet)
        ));
    }

    #[test]
    fn grid_recovers_exact_line() {
        let x = Matrix::from_rows(&[vec![1.0], vec![2.0], vec![3.0]]);
        let y = [2.0, 4.0, 6.0];
        let w = [1.0; 3];
        let beta = brute_force_lasso(&x, &y, &w, 0.0, DEFAULT_GRID_RESOLUTION).unwrap();
        assert!((beta[0] - 2.0).abs() < 1e-3, "beta {beta:?}");
    }

    #[test]
    fn grid_agrees_with_coordinate_descent() {
        let mut rng = crate::seeding::rng_for(91, 0);
        for trial in 0..5 {
            let n = 30;
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
                .collect();
            let y: Vec<f64> = rows
                .iter()
                .map(|r| 1.2 * r[0] - 0.4 * r[1] + rng.random_range(-0.3..0.3))
                .collect();
            let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.5)).collect();
            let x = Matrix::from_rows(&rows);
            let lambda = 0.1;
            let grid = brute_force_lasso(&x, &y, &w, lambda, DEFAULT_GRID_RESOLUTION).unwrap();
            let (cd, cd_int) = weighted_lasso(&x, &y, &w, lambda).unwrap();
            for (g, c) in grid.iter().zip(&cd) {
                assert!((g - c).abs() < 1e-3, "trial {trial}: grid {grid:?} vs cd {cd:?}");
            }
            // The exhaustive search never loses to the iterative solver.
            let grid_obj = lasso_objective(
                &x,
                &y,
                &w,
                lambda,
                &grid,
                profiled_intercept(&x, &y, &w, &grid),
            );
            let cd_obj = lasso_objective(&x, &y, &w, lambda, &cd, cd_int);
            assert!(grid_obj <= cd_obj + 1e-6, "{grid_obj} vs {cd_obj}");
        }
    }

    #[test]
    fn lasso_feature_cap_enforced() {
        let x = Matrix::zeros(4, 4);
        let err = brute_force_lasso(&x, &[0.0; 4], &[1.0; 4], 0.0, 101).unwrap_err();
        assert!(matches!(err, SynthError::TooManyLassoFeatures { got: 4, max: 3 }));
    }

    #[test]
    fn oracle_d2_has_one_subset() {
        let w = MlpWeights {
            weights: vec![Matrix::from_rows(&[vec![1.0, 2.0]])],
            biases: vec![vec![0.0]],
            output: vec![1.0],
            output_bias: 0.0,
        };
        let all = exhaustive_interaction_oracle(&w, 2).unwrap();
        assert_eq!(all.len(), 1);
        assert_eq!(all[0].features, vec![0, 1]);
        assert_eq!(all[0].strength, 1.0);
    }

    #[test]
    fn oracle_sorted_and_anti_monotone() {
        let mut rng = crate::seeding::rng_for(17, 0);
        let rows: Vec<Vec<f64>> = (0..4)
            .map(|_| (0..5).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let w = MlpWeights {
            weights: vec![Matrix::from_rows(&rows)],
            biases: vec![vec![0.0; 4]],
            output: (0..4).map(|_| rng.random_range(-1.0..1.0)).collect(),
            output_bias: 0.0,
        };
        let all = exhaustive_interaction_oracle(&w, 5).unwrap();
        assert_eq!(all.len(), (1 << 5) - 5 - 1);
        for pair in all.windows(2) {
            assert!(pair[0].strength >= pair[1].strength);
        }
        // Every superset scores no higher than any of its subsets.
        for a in &all {
            for b in &all {
                if a.features.len() < b.features.len()
                    && a.features.iter().all(|f| b.features.contains(f))
                {
                    assert!(b.strength <= a.strength + 1e-12);
                }
            }
        }
    }

    #[test]
    fn oracle_feature_cap_enforced() {
        let w = MlpWeights {
            weights: vec![Matrix::zeros(1, 13)],
            biases: vec![vec![0.0]],
            output: vec![1.0],
            output_bias: 0.0,
        };
        assert!(matches!(
            exhaustive_interaction_oracle(&w, 2),
            Err(SynthError::TooManyOracleFeatures { got: 13, max: 12 })
        ));
    }
}
