//! Greedy instance selection for global explanations.
//!
//! Coverage of a picked set V is `c(V) = sum_j I_j * [exists v in V with
//! coef_vj != 0]` where the feature importance `I_j = sqrt(sum_v |coef_vj|)`
//! runs over all candidate explanations. Coverage is monotone submodular, so
//! the greedy pick is within a (1 - 1/e) factor of the optimal budget-B set.

use super::{LimeError, LocalExplanation};

/// Per-feature importance over a candidate set: `sqrt(sum_v |coef_vj|)`.
pub fn feature_importances(explanations: &[LocalExplanation]) -> Vec<f64> {
    let d = explanations.first().map_or(0, |e| e.coefficients.len());
    let mut sums = vec![0.0; d];
    for e in explanations {
        for (s, c) in sums.iter_mut().zip(&e.coefficients) {
            *s += c.abs();
        }
    }
    sums.into_iter().map(f64::sqrt).collect()
}

/// Coverage of the explanation subset `picked` under importances `imp`.
pub fn coverage(explanations: &[LocalExplanation], picked: &[usize], imp: &[f64]) -> f64 {
    let mut covered = vec![false; imp.len()];
    for &v in picked {
        for (j, c) in explanations[v].coefficients.iter().enumerate() {
            if *c != 0.0 {
                covered[j] = true;
            }
        }
    }
    covered.iter().zip(imp).filter(|(c, _)| **c).map(|(_, i)| i).sum()
}

/// Greedily picks `budget` explanation indices maximizing coverage.
///
/// Ties (including zero marginal gain once everything is covered) resolve to
/// the lowest unpicked index, so the result is deterministic and always has
/// exactly `budget` entries.
pub fn submodular_pick(
    explanations: &[LocalExplanation],
    budget: usize,
) -> Result<Vec<usize>, LimeError> {
    if explanations.is_empty() {
        return Err(LimeError::NoExplanations);
    }
    if budget == 0 || budget > explanations.len() {
        return Err(LimeError::BadBudget { budget, available: explanations.len() });
    }
    let imp = feature_importances(explanations);
    let mut covered = vec![false; imp.len()];
    let mut picked = Vec::with_capacity(budget);
    let mut in_pick = vec![false; explanations.len()];

    for _ in 0..budget {
        let mut best: Option<(f64, usize)> = None;
        for (v, e) in explanations.iter().enumerate() {
            if in_pick[v] {
                continue;
            }
            let gain: f64 = e
                .coefficients
                .iter()
                .enumerate()
                .filter(|(j, c)| **c != 0.0 && !covered[*j])
                .map(|(j, _)| imp[j])
                .sum();
            if best.is_none_or(|(g, _)| gain > g) {
                best = Some((gain, v));
            }
        }
        let (_, v) = best.expect("budget <= unpicked candidates");
        in_pick[v] = true;
        picked.push(v);
        for (j, c) in explanations[v].coefficients.iter().enumerate() {
            if *c != 0.0 {
                covered[j] = true;
            }
        }
    }
    Ok(picked)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn expl(coefficients: Vec<f64>) -> LocalExplanation {
        LocalExplanation { instance: 0, coefficients, intercept: 0.0, local_fit_r2: 1.0 }
    }

    #[test]
    fn disjoint_coverage_beats_duplicates() {
        // Candidates 0 and 2 cover disjoint features; candidate 1 repeats
        // candidate 0's coverage with the same magnitude.
        let explanations = vec![
            expl(vec![1.0, 1.0, 0.0, 0.0]),
            expl(vec![1.0, 1.0, 0.0, 0.0]),
            expl(vec![0.0, 0.0, 1.0, 1.0]),
        ];
        let picked = submodular_pick(&explanations, 2).unwrap();
        assert_eq!(picked, vec![0, 2]);
    }

    #[test]
    fn full_budget_returns_greedy_order() {
        let explanations = vec![
            expl(vec![0.1, 0.0]),
            expl(vec![3.0, 2.0]),
            expl(vec![0.0, 0.5]),
        ];
        let picked = submodular_pick(&explanations, 3).unwrap();
        assert_eq!(picked.len(), 3);
        assert_eq!(picked[0], 1, "widest coverage first");
        let mut sorted = picked.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, vec![0, 1, 2]);
    }

    #[test]
    fn zero_and_oversized_budgets_error() {
        let explanations = vec![expl(vec![1.0])];
        assert!(matches!(
            submodular_pick(&explanations, 0),
            Err(LimeError::BadBudget { .. })
        ));
        assert!(matches!(
            submodular_pick(&explanations, 2),
            Err(LimeError::BadBudget { .. })
        ));
        assert!(matches!(submodular_pick(&[], 1), Err(LimeError::NoExplanations)));
    }

    #[test]
    fn greedy_matches_exhaustive_on_small_instances() {
        // Deterministic small instances; exhaustive optimum over all pairs.
        let explanations = vec![
            expl(vec![2.0, 0.0, 0.0, 1.0, 0.0]),
            expl(vec![0.0, 3.0, 0.0, 0.0, 0.0]),
            expl(vec![2.0, 3.0, 0.0, 0.0, 0.0]),
            expl(vec![0.0, 0.0, 4.0, 0.0, 0.5]),
            expl(vec![0.0, 0.0, 0.0, 1.0, 0.5]),
        ];
        let imp = feature_importances(&explanations);
        let picked = submodular_pick(&explanations, 2).unwrap();
        let greedy_cov = coverage(&explanations, &picked, &imp);
        let mut best = 0.0f64;
        for a in 0..explanations.len() {
            for b in (a + 1)..explanations.len() {
                best = best.max(coverage(&explanations, &[a, b], &imp));
            }
        }
        assert!(greedy_cov >= (1.0 - 1.0 / std::f64::consts::E) * best);
    }
}
