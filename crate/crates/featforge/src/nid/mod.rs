//! Feature-interaction detection from the weights of a trained ReLU
//! network.
//!
//! A hidden unit that assigns large first-layer weight to several features
//! models a joint effect between them. The strength of a candidate feature
//! set is the minimum first-layer magnitude over its members, scaled by the
//! unit's aggregated downstream influence and summed over first-layer
//! units. Candidate sets come from a greedy per-unit construction: each
//! unit nominates its top-2, top-3, ... features by weight magnitude.

mod mlp;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use mlp::{loss_and_gradient, train_mlp, MlpConfig, MlpWeights};

use crate::dataset::Dataset;

#[derive(Debug, Error)]
pub enum NidError {
    #[error("cannot train on an empty dataset")]
    EmptyDataset,
    #[error("invalid network config: {0}")]
    BadConfig(String),
    #[error("training diverged (non-finite loss) at epoch {epoch}")]
    Divergence { epoch: usize },
    #[error("interaction detection needs at least 2 features, got {0}")]
    TooFewFeatures(usize),
    #[error("an interaction set needs at least 2 distinct valid feature indices")]
    BadFeatureSet,
    #[error("fixed_k cutoff requires k")]
    MissingK,
    #[error("max_candidates must be positive")]
    BadMaxCandidates,
}

/// A candidate feature subset with its interaction strength. Feature
/// indices are 0-based positions into the training dataset's columns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InteractionCandidate {
    /// Strictly increasing indices; at least two entries.
    pub features: Vec<usize>,
    pub strength: f64,
}

impl InteractionCandidate {
    /// Resolves the member indices to names from the training column order.
    pub fn named(&self, names: &[&str]) -> Vec<String> {
        self.features.iter().map(|&f| names[f].to_string()).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutoffMode {
    LargestGap,
    FixedK,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CutoffConfig {
    pub mode: CutoffMode,
    pub k: Option<usize>,
    /// Upper bound on the kept list under either mode's inspection window.
    pub max_candidates: usize,
}

impl Default for CutoffConfig {
    fn default() -> Self {
        Self { mode: CutoffMode::LargestGap, k: None, max_candidates: 20 }
    }
}

/// Aggregated downstream influence of each first-layer unit: the absolute
/// output coefficients propagated down through absolute weight matrices.
pub fn aggregate_influence(weights: &MlpWeights) -> Vec<f64> {
    let mut z: Vec<f64> = weights.output.iter().map(|v| v.abs()).collect();
    for w in weights.weights.iter().skip(1).rev() {
        let mut prev = vec![0.0; w.n_cols()];
        for (u, &zu) in z.iter().enumerate() {
            for (p, wv) in prev.iter_mut().zip(w.row(u)) {
                *p += zu * wv.abs();
            }
        }
        z = prev;
    }
    z
}

fn validate_feature_set(weights: &MlpWeights, features: &[usize]) -> Result<(), NidError> {
    let d = weights.n_features();
    let distinct: BTreeSet<usize> = features.iter().copied().collect();
    if features.len() < 2 || distinct.len() != features.len() {
        return Err(NidError::BadFeatureSet);
    }
    if features.iter().any(|&f| f >= d) {
        return Err(NidError::BadFeatureSet);
    }
    Ok(())
}

/// Interaction strength of a feature set: per first-layer unit, the unit's
/// aggregated influence times the smallest absolute first-layer weight over
/// the set's members, summed over units. Adding a feature to a set can only
/// lower the per-unit minimum, so strength is anti-monotone under set
/// inclusion.
pub fn interaction_strength(weights: &MlpWeights, features: &[usize]) -> Result<f64, NidError> {
    validate_feature_set(weights, features)?;
    Ok(strength_unchecked(weights, &aggregate_influence(weights), features))
}

fn strength_unchecked(weights: &MlpWeights, influence: &[f64], features: &[usize]) -> f64 {
    let first = &weights.weights[0];
    let mut total = 0.0;
    for (i, &z) in influence.iter().enumerate() {
        let row = first.row(i);
        let min_abs =
            features.iter().map(|&f| row[f].abs()).fold(f64::INFINITY, f64::min);
        total += z * min_abs;
    }
    total
}

/// Builds and scores the greedy candidate list.
///
/// Every first-layer unit nominates its `r` largest-magnitude features
/// (ties to the lower index) for each order `r = 2..=d`; nominated sets are
/// deduplicated and scored once. The result is sorted by strength
/// descending, with ties broken by smaller set, then lexicographic order.
pub fn rank_candidates(weights: &MlpWeights) -> Result<Vec<InteractionCandidate>, NidError> {
    let d = weights.n_features();
    if d < 2 {
        return Err(NidError::TooFewFeatures(d));
    }
    let first = &weights.weights[0];
    let influence = aggregate_influence(weights);

    let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
    for i in 0..first.n_rows() {
        let row = first.row(i);
        let mut by_magnitude: Vec<usize> = (0..d).collect();
        by_magnitude.sort_by(|&a, &b| {
            row[b].abs().partial_cmp(&row[a].abs()).unwrap().then(a.cmp(&b))
        });
        for r in 2..=d {
            let mut set: Vec<usize> = by_magnitude[..r].to_vec();
            set.sort_unstable();
            seen.insert(set);
        }
    }

    let mut candidates: Vec<InteractionCandidate> = seen
        .into_iter()
        .map(|features| {
            let strength = strength_unchecked(weights, &influence, &features);
            InteractionCandidate { features, strength }
        })
        .collect();
    candidates.sort_by(|a, b| {
        b.strength
            .partial_cmp(&a.strength)
            .unwrap()
            .then(a.features.len().cmp(&b.features.len()))
            .then(a.features.cmp(&b.features))
    });
    Ok(candidates)
}

/// Truncates a descending-sorted candidate list to the significant head.
///
/// `fixed_k` keeps the first `min(k, len)` entries. `largest_gap` inspects
/// the first `max_candidates` entries, drops the zero-strength tail, and
/// cuts after the position with the largest ratio between consecutive
/// strengths; if no ratio exceeds 1 (all strengths equal) the whole
/// inspected window is kept.
pub fn cutoff_topk(
    ranked: &[InteractionCandidate],
    cfg: &CutoffConfig,
) -> Result<Vec<InteractionCandidate>, NidError> {
    if cfg.max_candidates == 0 {
        return Err(NidError::BadMaxCandidates);
    }
    match cfg.mode {
        CutoffMode::FixedK => {
            let k = cfg.k.ok_or(NidError::MissingK)?;
            Ok(ranked.iter().take(k).cloned().collect())
        }
        CutoffMode::LargestGap => {
            let mut head: Vec<InteractionCandidate> =
                ranked.iter().take(cfg.max_candidates).cloned().collect();
            while head.last().is_some_and(|c| c.strength == 0.0) {
                head.pop();
            }
            if head.len() <= 1 {
                return Ok(head);
            }
            let mut best_ratio = 1.0;
            let mut cut = head.len();
            for p in 0..head.len() - 1 {
                let ratio = head[p].strength / head[p + 1].strength;
                if ratio > best_ratio {
                    best_ratio = ratio;
                    cut = p + 1;
                }
            }
            head.truncate(cut);
            Ok(head)
        }
    }
}

/// End-to-end detection: train the network, build the greedy candidate
/// ranking from its weights, and truncate to the significant head.
pub fn detect_interactions(
    train: &Dataset,
    mlp_cfg: &MlpConfig,
    cut_cfg: &CutoffConfig,
) -> Result<Vec<InteractionCandidate>, NidError> {
    if train.n_features() < 2 {
        return Err(NidError::TooFewFeatures(train.n_features()));
    }
    let weights = train_mlp(train, mlp_cfg)?;
    let ranked = rank_candidates(&weights)?;
    cutoff_topk(&ranked, cut_cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;

    /// Hand-built network: no biases, explicit weights.
    fn net(layers: Vec<Matrix>, output: Vec<f64>) -> MlpWeights {
        let biases = layers.iter().map(|w| vec![0.0; w.n_rows()]).collect();
        MlpWeights { weights: layers, biases, output, output_bias: 0.0 }
    }

    #[test]
    fn influence_single_layer_is_absolute_output() {
        let w = net(vec![Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 0.0]])], vec![0.5, -1.0]);
        assert_eq!(aggregate_influence(&w), vec![0.5, 1.0]);
    }

    #[test]
    fn influence_two_layer_hand_product() {
        let w = net(
            vec![
                Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]),
                Matrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]),
            ],
            vec![1.0, -1.0],
        );
        assert_eq!(aggregate_influence(&w), vec![1.0, 3.0]);
    }

    #[test]
    fn influence_of_zero_weights_is_zero() {
        let w = net(vec![Matrix::zeros(3, 2), Matrix::zeros(2, 3)], vec![0.0, 0.0]);
        assert_eq!(aggregate_influence(&w), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn strength_hand_example() {
        let w = net(vec![Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 0.0]])], vec![0.5, 1.0]);
        let s = interaction_strength(&w, &[0, 1]).unwrap();
        assert_eq!(s, 0.5);
    }

    #[test]
    fn zero_column_kills_strength() {
        let w = net(
            vec![Matrix::from_rows(&[vec![4.0, 0.0, 2.0], vec![1.0, 0.0, 5.0]])],
            vec![1.0, 1.0],
        );
        assert_eq!(interaction_strength(&w, &[0, 1]).unwrap(), 0.0);
        assert_eq!(interaction_strength(&w, &[0, 1, 2]).unwrap(), 0.0);
        assert!(interaction_strength(&w, &[0, 2]).unwrap() > 0.0);
    }

    #[test]
    fn invalid_sets_rejected() {
        let w = net(vec![Matrix::from_rows(&[vec![1.0, 2.0]])], vec![1.0]);
        assert!(matches!(interaction_strength(&w, &[0]), Err(NidError::BadFeatureSet)));
        assert!(matches!(interaction_strength(&w, &[]), Err(NidError::BadFeatureSet)));
        assert!(matches!(interaction_strength(&w, &[0, 0]), Err(NidError::BadFeatureSet)));
        assert!(matches!(interaction_strength(&w, &[0, 2]), Err(NidError::BadFeatureSet)));
    }

    #[test]
    fn strength_is_anti_monotone_on_random_weights() {
        use rand::Rng;
        let mut rng = crate::seeding::rng_for(3, 0);
        for _ in 0..50 {
            let d = rng.random_range(3..7usize);
            let units = rng.random_range(1..6usize);
            let rows: Vec<Vec<f64>> = (0..units)
                .map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect())
                .collect();
            let output: Vec<f64> = (0..units).map(|_| rng.random_range(-2.0..2.0)).collect();
            let w = net(vec![Matrix::from_rows(&rows)], output);
            let a = rng.random_range(0..d);
            let b = (a + rng.random_range(1..d)) % d;
            let c = (b + rng.random_range(1..d)) % d;
            let mut small = vec![a, b];
            small.sort_unstable();
            small.dedup();
            if small.len() < 2 {
                continue;
            }
            let mut big = vec![a, b, c];
            big.sort_unstable();
            big.dedup();
            if big.len() <= small.len() {
                continue;
            }
            let s_small = interaction_strength(&w, &small).unwrap();
            let s_big = interaction_strength(&w, &big).unwrap();
            assert!(s_big <= s_small + 1e-12, "{s_big} > {s_small}");
        }
    }

    #[test]
    fn greedy_candidates_nest_per_unit() {
        let w = net(vec![Matrix::from_rows(&[vec![5.0, -4.0, 1.0]])], vec![1.0]);
        let ranked = rank_candidates(&w).unwrap();
        let sets: Vec<&[usize]> = ranked.iter().map(|c| c.features.as_slice()).collect();
        assert_eq!(sets.len(), 2);
        assert!(sets.contains(&[0usize, 1].as_slice()));
        assert!(sets.contains(&[0usize, 1, 2].as_slice()));
        // Pair strength min(5,4)=4 beats triple strength min(5,4,1)=1.
        assert_eq!(ranked[0].features, vec![0, 1]);
        assert!((ranked[0].strength - 4.0).abs() < 1e-15);
        assert!((ranked[1].strength - 1.0).abs() < 1e-15);
    }

    #[test]
    fn duplicate_sets_from_different_units_merge() {
        let w = net(
            vec![Matrix::from_rows(&[vec![2.0, 1.0], vec![3.0, 2.0]])],
            vec![1.0, 1.0],
        );
        let ranked = rank_candidates(&w).unwrap();
        assert_eq!(ranked.len(), 1);
        assert_eq!(ranked[0].features, vec![0, 1]);
        // Strength sums over units: 1*min(2,1) + 1*min(3,2) = 3.
        assert_eq!(ranked[0].strength, 3.0);
    }

    #[test]
    fn magnitude_ties_nominate_lower_index() {
        let w = net(vec![Matrix::from_rows(&[vec![1.0, -1.0, 1.0]])], vec![1.0]);
        let ranked = rank_candidates(&w).unwrap();
        assert!(ranked.iter().any(|c| c.features == vec![0, 1]));
        assert!(!ranked.iter().any(|c| c.features == vec![0, 2]));
    }

    #[test]
    fn cutoff_largest_gap_hand_case() {
        let ranked: Vec<InteractionCandidate> = [100.0, 90.0, 3.0, 2.0]
            .iter()
            .enumerate()
            .map(|(i, &s)| InteractionCandidate { features: vec![0, i + 1], strength: s })
            .collect();
        let kept = cutoff_topk(&ranked, &CutoffConfig::default()).unwrap();
        assert_eq!(kept.len(), 2);
        assert_eq!(kept[0].strength, 100.0);
        assert_eq!(kept[1].strength, 90.0);
    }

    #[test]
    fn cutoff_equal_strengths_keep_window() {
        let ranked: Vec<InteractionCandidate> = (0..30)
            .map(|i| InteractionCandidate { features: vec![0, i + 1], strength: 7.0 })
            .collect();
        let kept = cutoff_topk(&ranked, &CutoffConfig::default()).unwrap();
        assert_eq!(kept.len(), 20, "window capped at max_candidates");
    }

    #[test]
    fn cutoff_drops_zero_tail_and_fixed_k_truncates() {
        let ranked: Vec<InteractionCandidate> = [5.0, 5.0, 0.0, 0.0]
            .iter()
            .enumerate()
            .map(|(i, &s)| InteractionCandidate { features: vec![0, i + 1], strength: s })
            .collect();
        let kept = cutoff_topk(&ranked, &CutoffConfig::default()).unwrap();
        assert_eq!(kept.len(), 2);

        let cfg = CutoffConfig { mode: CutoffMode::FixedK, k: Some(3), max_candidates: 20 };
        assert_eq!(cutoff_topk(&ranked, &cfg).unwrap().len(), 3);
        let cfg = CutoffConfig { mode: CutoffMode::FixedK, k: Some(9), max_candidates: 20 };
        assert_eq!(cutoff_topk(&ranked, &cfg).unwrap().len(), 4, "k capped at len");
        let cfg = CutoffConfig { mode: CutoffMode::FixedK, k: None, max_candidates: 20 };
        assert!(matches!(cutoff_topk(&ranked, &cfg), Err(NidError::MissingK)));
    }

    #[test]
    fn cutoff_empty_input_is_empty() {
        assert!(cutoff_topk(&[], &CutoffConfig::default()).unwrap().is_empty());
    }

    #[test]
    fn output_scaling_preserves_candidate_order() {
        use rand::Rng;
        let mut rng = crate::seeding::rng_for(8, 0);
        let rows: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let output: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
        let w = net(vec![Matrix::from_rows(&rows)], output.clone());
        let scaled = net(
            vec![Matrix::from_rows(&rows)],
            output.iter().map(|v| v * 3.5).collect(),
        );
        let a = rank_candidates(&w).unwrap();
        let b = rank_candidates(&scaled).unwrap();
        assert_eq!(a.len(), b.len());
        for (ca, cb) in a.iter().zip(&b) {
            assert_eq!(ca.features, cb.features);
            assert!((cb.strength - 3.5 * ca.strength).abs() < 1e-12 * (1.0 + cb.strength));
        }
    }
}
