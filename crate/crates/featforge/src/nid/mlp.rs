//! Fully-connected ReLU network trained by mini-batch gradient descent on
//! squared loss with an L1 penalty over all weight matrices.
//!
//! The network exists to expose its weights, not to serve predictions: the
//! interaction detector reads the trained first-layer matrix and the
//! aggregated influence of downstream layers. Inputs are standardized
//! internally so first-layer magnitudes are comparable across features with
//! different physical units.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::NidError;
use crate::dataset::Dataset;
use crate::matrix::Matrix;
use crate::seeding;

const INIT_TAG: u64 = 0x317_0001;
const SHUFFLE_TAG: u64 = 0x317_1000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpConfig {
    pub hidden_sizes: Vec<usize>,
    pub l1_lambda: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            hidden_sizes: vec![64, 32, 16],
            l1_lambda: 5e-5,
            learning_rate: 1e-3,
            epochs: 200,
            batch_size: 128,
            seed: 0,
        }
    }
}

impl MlpConfig {
    pub fn validate(&self) -> Result<(), NidError> {
        if self.hidden_sizes.is_empty() {
            return Err(NidError::BadConfig("at least one hidden layer is required".into()));
        }
        if self.hidden_sizes.iter().any(|&h| h == 0) {
            return Err(NidError::BadConfig("hidden layer sizes must be positive".into()));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(NidError::BadConfig("learning_rate must be positive".into()));
        }
        if self.l1_lambda < 0.0 || !self.l1_lambda.is_finite() {
            return Err(NidError::BadConfig("l1_lambda must be nonnegative".into()));
        }
        if self.batch_size == 0 {
            return Err(NidError::BadConfig("batch_size must be positive".into()));
        }
        Ok(())
    }
}

/// Trained parameters. `weights[l]` maps layer `l` inputs to its units (row
/// = unit, column = input); `weights[0]` has one column per dataset feature,
/// in feature order. `output` holds the linear read-out coefficients.
///
/// Inputs are expected in standardized space (training column mean/std);
/// outputs are in raw target units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpWeights {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
    pub output: Vec<f64>,
    pub output_bias: f64,
}

impl MlpWeights {
    pub fn n_features(&self) -> usize {
        self.weights.first().map_or(0, Matrix::n_cols)
    }

    pub fn n_hidden_layers(&self) -> usize {
        self.weights.len()
    }

    /// Zero-filled parameter set with the same shape, used as a gradient
    /// accumulator.
    fn zeros_like(&self) -> MlpWeights {
        MlpWeights {
            weights: self
                .weights
                .iter()
                .map(|w| Matrix::zeros(w.n_rows(), w.n_cols()))
                .collect(),
            biases: self.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
            output: vec![0.0; self.output.len()],
            output_bias: 0.0,
        }
    }

    /// Forward pass on one standardized row.
    pub fn forward(&self, row: &[f64]) -> f64 {
        let mut activation = row.to_vec();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            let mut next = vec![0.0; w.n_rows()];
            for (u, nv) in next.iter_mut().enumerate() {
                let z = dot(w.row(u), &activation) + b[u];
                *nv = z.max(0.0);
            }
            activation = next;
        }
        dot(&self.output, &activation) + self.output_bias
    }

    /// Smallest absolute pre-activation seen anywhere in the forward pass.
    ///
    /// Finite-difference gradient validation is only meaningful away from
    /// ReLU kinks; points where this is tiny should be skipped.
    pub fn min_abs_preactivation(&self, row: &[f64]) -> f64 {
        let mut activation = row.to_vec();
        let mut min_abs = f64::INFINITY;
        for (w, b) in self.weights.iter().zip(&self.biases) {
            let mut next = vec![0.0; w.n_rows()];
            for (u, nv) in next.iter_mut().enumerate() {
                let z = dot(w.row(u), &activation) + b[u];
                min_abs = min_abs.min(z.abs());
                *nv = z.max(0.0);
            }
            activation = next;
        }
        min_abs
    }

    /// Sum of absolute values over all penalized parameters (weight matrices
    /// and the output vector; biases excluded).
    pub fn l1_norm(&self) -> f64 {
        let mats: f64 = self.weights.iter().map(|w| w.iter().map(f64::abs).sum::<f64>()).sum();
        mats + self.output.iter().map(|v| v.abs()).sum::<f64>()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// He-uniform initialization: each layer draws from
/// `U(-sqrt(6/fan_in), sqrt(6/fan_in))`; biases start at zero.
fn initialize(n_features: usize, cfg: &MlpConfig) -> MlpWeights {
    let mut rng = seeding::rng_for(cfg.seed, INIT_TAG);
    let mut weights = Vec::new();
    let mut biases = Vec::new();
    let mut fan_in = n_features;
    for &units in &cfg.hidden_sizes {
        let limit = (6.0 / fan_in as f64).sqrt();
        let mut w = Matrix::zeros(units, fan_in);
        for u in 0..units {
            for v in w.row_mut(u) {
                *v = rng.random_range(-limit..limit);
            }
        }
        weights.push(w);
        biases.push(vec![0.0; units]);
        fan_in = units;
    }
    let limit = (6.0 / fan_in as f64).sqrt();
    let output = (0..fan_in).map(|_| rng.random_range(-limit..limit)).collect();
    MlpWeights { weights, biases, output, output_bias: 0.0 }
}

/// Mean squared error over `rows` plus the L1 penalty, with its gradient
/// (L1 subgradient `sign`, taken as 0 at 0). The gradient container mirrors
/// the parameter shapes.
pub fn loss_and_gradient(
    params: &MlpWeights,
    x: &Matrix,
    y: &[f64],
    rows: &[usize],
    l1_lambda: f64,
) -> (f64, MlpWeights) {
    let n_layers = params.weights.len();
    let mut grad = params.zeros_like();
    let mut mse = 0.0;
    let inv_n = 1.0 / rows.len() as f64;

    // Per-layer activation and pre-activation buffers, reused across rows.
    let mut acts: Vec<Vec<f64>> = Vec::with_capacity(n_layers + 1);
    acts.push(Vec::new());
    for w in &params.weights {
        acts.push(vec![0.0; w.n_rows()]);
    }
    let mut preacts: Vec<Vec<f64>> = params.weights.iter().map(|w| vec![0.0; w.n_rows()]).collect();

    for &r in rows {
        acts[0].clear();
        acts[0].extend_from_slice(x.row(r));
        for l in 0..n_layers {
            let w = &params.weights[l];
            for u in 0..w.n_rows() {
                let z = dot(w.row(u), &acts[l]) + params.biases[l][u];
                preacts[l][u] = z;
                acts[l + 1][u] = z.max(0.0);
            }
        }
        let pred = dot(&params.output, &acts[n_layers]) + params.output_bias;
        let err = pred - y[r];
        mse += err * err * inv_n;

        // Backward pass.
        let d_pred = 2.0 * err * inv_n;
        for (g, a) in grad.output.iter_mut().zip(&acts[n_layers]) {
            *g += d_pred * a;
        }
        grad.output_bias += d_pred;
        let mut d_act: Vec<f64> = params.output.iter().map(|w| d_pred * w).collect();
        for l in (0..n_layers).rev() {
            let w = &params.weights[l];
            let mut d_prev = vec![0.0; w.n_cols()];
            for u in 0..w.n_rows() {
                if preacts[l][u] <= 0.0 {
                    continue;
                }
                let dz = d_act[u];
                grad.biases[l][u] += dz;
                let w_row = w.row(u);
                let g_row = grad.weights[l].row_mut(u);
                for c in 0..w_row.len() {
                    g_row[c] += dz * acts[l][c];
                    d_prev[c] += dz * w_row[c];
                }
            }
            d_act = d_prev;
        }
    }

    let mut loss = mse;
    if l1_lambda > 0.0 {
        loss += l1_lambda * params.l1_norm();
        for (gw, pw) in grad.weights.iter_mut().zip(&params.weights) {
            for u in 0..pw.n_rows() {
                for (g, p) in gw.row_mut(u).iter_mut().zip(pw.row(u)) {
                    *g += l1_lambda * sign(*p);
                }
            }
        }
        for (g, p) in grad.output.iter_mut().zip(&params.output) {
            *g += l1_lambda * sign(*p);
        }
    }
    (loss, grad)
}

/// Subgradient of `|v|`, taking 0 at the kink. Distinct from `f64::signum`,
/// which maps 0.0 to 1.0.
fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Trains the network on standardized inputs and a standardized target; the
/// target scale is folded back into the output layer before returning, so
/// `forward` yields raw target units.
pub fn train_mlp(train: &Dataset, cfg: &MlpConfig) -> Result<MlpWeights, NidError> {
    cfg.validate()?;
    let n = train.n_rows();
    if n == 0 {
        return Err(NidError::EmptyDataset);
    }
    let stats = train.stats();
    let mut x = Matrix::zeros(n, train.n_features());
    for (i, row) in train.values().rows().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            x.set(i, j, (v - stats.mean[j]) / stats.std[j]);
        }
    }
    let y_raw = train.target();
    let y_mean = y_raw.iter().sum::<f64>() / n as f64;
    let y_var = y_raw.iter().map(|v| (v - y_mean) * (v - y_mean)).sum::<f64>() / n as f64;
    let y_std = if y_var.sqrt() > 1e-12 * y_mean.abs().max(1.0) { y_var.sqrt() } else { 1.0 };
    let y: Vec<f64> = y_raw.iter().map(|v| (v - y_mean) / y_std).collect();

    let mut params = initialize(train.n_features(), cfg);
    let mut order: Vec<usize> = (0..n).collect();

    for epoch in 0..cfg.epochs {
        let mut rng = seeding::rng_for(cfg.seed, SHUFFLE_TAG + epoch as u64);
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            let (loss, grad) = loss_and_gradient(&params, &x, &y, batch, cfg.l1_lambda);
            if !loss.is_finite() {
                return Err(NidError::Divergence { epoch });
            }
            apply_step(&mut params, &grad, cfg.learning_rate);
        }
    }

    // Fold the target scale back so forward() returns raw-unit predictions.
    for v in &mut params.output {
        *v *= y_std;
    }
    params.output_bias = params.output_bias * y_std + y_mean;
    Ok(params)
}

fn apply_step(params: &mut MlpWeights, grad: &MlpWeights, lr: f64) {
    for (pw, gw) in params.weights.iter_mut().zip(&grad.weights) {
        for u in 0..gw.n_rows() {
            for (p, g) in pw.row_mut(u).iter_mut().zip(gw.row(u)) {
                *p -= lr * g;
            }
        }
    }
    for (pb, gb) in params.biases.iter_mut().zip(&grad.biases) {
        for (p, g) in pb.iter_mut().zip(gb) {
            *p -= lr * g;
        }
    }
    for (p, g) in params.output.iter_mut().zip(&grad.output) {
        *p -= lr * g;
    }
    params.output_bias -= lr * grad.output_bias;
}
