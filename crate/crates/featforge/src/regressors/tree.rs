//! CART regression tree with variance-reduction splits.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;

/// One tree node; children are arena indices into [`DecisionTree::nodes`].
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Node {
    Leaf { value: f64 },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

/// Fitted regression tree. Rows route left when
/// `row[feature] <= threshold`, right otherwise.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecisionTree {
    nodes: Vec<Node>,
    n_features: usize,
}

impl DecisionTree {
    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { value } => return *value,
                Node::Split { feature, threshold, left, right } => {
                    at = if row[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }
}

/// Tree growth limits plus the per-split feature subsample size.
pub(crate) struct TreeFitter {
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Features considered per split; `mtry == n_features` consumes no RNG.
    pub mtry: usize,
}

struct FitContext<'a> {
    x: &'a Matrix,
    y: &'a [f64],
    w: &'a [f64],
    fitter: &'a TreeFitter,
}

impl TreeFitter {
    /// Fits on the given rows with per-row weights. Weights only shift leaf
    /// values and split scores; the min_samples_leaf limit counts rows.
    pub fn fit(
        &self,
        x: &Matrix,
        y: &[f64],
        w: &[f64],
        rows: &[usize],
        rng: &mut ChaCha8Rng,
    ) -> DecisionTree {
        debug_assert_eq!(x.n_rows(), y.len());
        debug_assert_eq!(y.len(), w.len());
        debug_assert!(!rows.is_empty());
        let ctx = FitContext { x, y, w, fitter: self };
        let mut nodes = Vec::new();
        grow(&ctx, rows.to_vec(), 0, &mut nodes, rng);
        DecisionTree { nodes, n_features: x.n_cols() }
    }
}

/// Appends the subtree for `rows` and returns its root index.
fn grow(
    ctx: &FitContext,
    mut rows: Vec<usize>,
    depth: usize,
    nodes: &mut Vec<Node>,
    rng: &mut ChaCha8Rng,
) -> usize {
    let (w_sum, wy_sum) = rows
        .iter()
        .fold((0.0, 0.0), |(ws, wys), &i| (ws + ctx.w[i], wys + ctx.w[i] * ctx.y[i]));
    let mean = if w_sum > 0.0 {
        wy_sum / w_sum
    } else {
        rows.iter().map(|&i| ctx.y[i]).sum::<f64>() / rows.len() as f64
    };

    let stop = ctx.fitter.max_depth.is_some_and(|d| depth >= d)
        || rows.len() < 2 * ctx.fitter.min_samples_leaf
        || rows.iter().all(|&i| ctx.y[i] == ctx.y[rows[0]]);
    if stop {
        let at = nodes.len();
        nodes.push(Node::Leaf { value: mean });
        return at;
    }

    let best = find_best_split(ctx, &rows, rng);
    let Some((feature, threshold)) = best else {
        let at = nodes.len();
        nodes.push(Node::Leaf { value: mean });
        return at;
    };

    // Partition preserving relative row order on both sides.
    let right: Vec<usize> = rows.iter().copied().filter(|&i| ctx.x.get(i, feature) > threshold).collect();
    rows.retain(|&i| ctx.x.get(i, feature) <= threshold);

    let at = nodes.len();
    nodes.push(Node::Leaf { value: mean });
    let left_idx = grow(ctx, rows, depth + 1, nodes, rng);
    let right_idx = grow(ctx, right, depth + 1, nodes, rng);
    nodes[at] = Node::Split { feature, threshold, left: left_idx, right: right_idx };
    at
}

/// Scans candidate features in ascending index order and boundaries in
/// ascending threshold order, keeping the first strictly-best weighted SSE
/// reduction. Equal-gain ties therefore resolve to the lowest feature index,
/// then the lowest threshold.
fn find_best_split(ctx: &FitContext, rows: &[usize], rng: &mut ChaCha8Rng) -> Option<(usize, f64)> {
    let d = ctx.x.n_cols();
    let candidates: Vec<usize> = if ctx.fitter.mtry >= d {
        (0..d).collect()
    } else {
        let mut picked = rand::seq::index::sample(rng, d, ctx.fitter.mtry).into_vec();
        picked.sort_unstable();
        picked
    };

    let (mut w_tot, mut wy_tot, mut wyy_tot) = (0.0, 0.0, 0.0);
    for &i in rows {
        w_tot += ctx.w[i];
        wy_tot += ctx.w[i] * ctx.y[i];
        wyy_tot += ctx.w[i] * ctx.y[i] * ctx.y[i];
    }
    if w_tot <= 0.0 {
        return None;
    }
    let parent_sse = wyy_tot - wy_tot * wy_tot / w_tot;

    let min_leaf = ctx.fitter.min_samples_leaf;
    let mut best: Option<(f64, usize, f64)> = None;
    let mut order: Vec<usize> = Vec::with_capacity(rows.len());
    for &feature in &candidates {
        order.clear();
        order.extend_from_slice(rows);
        order.sort_by(|&a, &b| {
            ctx.x.get(a, feature).partial_cmp(&ctx.x.get(b, feature)).unwrap()
        });

        let (mut w_l, mut wy_l, mut wyy_l) = (0.0, 0.0, 0.0);
        for p in 1..order.len() {
            let i = order[p - 1];
            w_l += ctx.w[i];
            wy_l += ctx.w[i] * ctx.y[i];
            wyy_l += ctx.w[i] * ctx.y[i] * ctx.y[i];

            let lo = ctx.x.get(order[p - 1], feature);
            let hi = ctx.x.get(order[p], feature);
            if !(lo < hi) || p < min_leaf || order.len() - p < min_leaf {
                continue;
            }
            let w_r = w_tot - w_l;
            if w_l <= 0.0 || w_r <= 0.0 {
                continue;
            }
            let sse_l = wyy_l - wy_l * wy_l / w_l;
            let sse_r = (wyy_tot - wyy_l) - (wy_tot - wy_l) * (wy_tot - wy_l) / w_r;
            let gain = parent_sse - sse_l - sse_r;
            if gain > best.map_or(0.0, |(g, _, _)| g) {
                let mut threshold = lo + (hi - lo) / 2.0;
                // Midpoint can round up to hi for adjacent floats; the split
                // predicate is `<=`, so fall back to the lower value.
                if !(threshold < hi) {
                    threshold = lo;
                }
                best = Some((gain, feature, threshold));
            }
        }
    }
    best.map(|(_, feature, threshold)| (feature, threshold))
}
