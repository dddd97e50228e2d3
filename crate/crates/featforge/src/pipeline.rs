//! Two-stage dataset optimization.
//!
//! Stage 1 rebuilds the feature table: a regressor trained on the train
//! split is explained to produce a global importance ranking, a ReLU
//! network is probed for interacting feature sets, the weakest features
//! are dropped, and each surviving interaction becomes a product column.
//! Stage 2 sweeps progressively deeper removals over the rebuilt table,
//! retraining at each depth, and keeps the depth that scores best.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{DataError, Dataset, SplitSpec};
use crate::lime::{global_ranking, GlobalRanking, LimeConfig, LimeError, PickConfig};
use crate::nid::{detect_interactions, CutoffConfig, InteractionCandidate, MlpConfig, NidError};
use crate::regressors::{evaluate, train, ModelError, PredictionMetrics, RegressorSpec};
use crate::seeding;

/// Stream tag base for per-depth sweep retraining seeds.
const SWEEP_TAG: u64 = 0x57_EE00;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("reconstruction needs at least 3 features, got {0}")]
    TooFewFeatures(usize),
    #[error("removing {removed} of {n_features} features would leave fewer than 2")]
    RemovalFloor { n_features: usize, removed: usize },
    #[error("removal fraction must lie in [0, 0.5), got {0}")]
    BadRemovalFraction(f64),
    #[error("selection depth {k_prime} must be smaller than the {n_features} available features")]
    BadKPrime { k_prime: usize, n_features: usize },
    #[error("cannot choose an optimum from an empty sweep")]
    EmptySweep,
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Lime(#[from] LimeError),
    #[error(transparent)]
    Nid(#[from] NidError),
}

/// Stage-1 rebuild policy: how many of the least important features to
/// drop and whether detected interactions become columns.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReconstructionConfig {
    /// Fraction of features to remove, rounded to the nearest count.
    pub removal_fraction: f64,
    /// Lower bound on the removal count regardless of the fraction.
    pub min_removed: usize,
    /// When false, stage 1 still reports detected interactions but appends
    /// no product columns.
    pub embed_all_interactions: bool,
}

impl Default for ReconstructionConfig {
    fn default() -> Self {
        Self { removal_fraction: 0.10, min_removed: 1, embed_all_interactions: true }
    }
}

impl ReconstructionConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if !self.removal_fraction.is_finite()
            || self.removal_fraction < 0.0
            || self.removal_fraction >= 0.5
        {
            return Err(PipelineError::BadRemovalFraction(self.removal_fraction));
        }
        Ok(())
    }

    /// Number of features stage 1 removes from a table of `n_features`.
    pub fn removal_count(&self, n_features: usize) -> usize {
        let by_fraction = (self.removal_fraction * n_features as f64).round() as usize;
        by_fraction.max(self.min_removed)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    R2,
    Rmse,
    Combined,
}

/// Stage-2 sweep policy: maximum removal depth and the score that picks
/// the winning depth.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectionConfig {
    /// Deepest removal tried; `None` resolves to half the rebuilt table's
    /// feature count (rounded down).
    pub k_prime: Option<usize>,
    pub objective: Objective,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self { k_prime: None, objective: Objective::Combined }
    }
}

/// Everything one optimization run needs besides the dataset itself.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub split: SplitSpec,
    pub regressor: RegressorSpec,
    #[serde(default)]
    pub lime: LimeConfig,
    #[serde(default)]
    pub pick: PickConfig,
    #[serde(default)]
    pub mlp: MlpConfig,
    #[serde(default)]
    pub cutoff: CutoffConfig,
    #[serde(default)]
    pub reconstruction: ReconstructionConfig,
    #[serde(default)]
    pub selection: SelectionConfig,
}

/// One evaluated removal depth in the stage-2 sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub t: usize,
    /// The `t` lowest-weight entries of the stage-2 ranking, in ranking
    /// order; depth `t` removes exactly this prefix.
    pub removed_features: Vec<String>,
    pub r2: f64,
    pub rmse: f64,
}

/// Recipe that rebuilds the stage-1 output from the original table:
/// append the interaction columns, then drop the removed names.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetIiSpec {
    pub removed_features: Vec<String>,
    /// Constituent name lists, one per appended product column.
    pub interactions: Vec<Vec<String>>,
}

/// Recipe that reduces the rebuilt table to the chosen sweep depth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetIiiSpec {
    pub removed_features: Vec<String>,
}

/// Stage-1 outputs: the importance ranking, the detected interactions,
/// and the rebuild recipe they produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageOne {
    pub ranking: GlobalRanking,
    pub interactions: Vec<InteractionCandidate>,
    pub dataset_spec: DatasetIiSpec,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImprovementPct {
    /// Relative gain over the baseline fit quality, in percent, signed.
    pub r2_pct: f64,
    /// Relative error reduction from the baseline, in percent, signed.
    pub rmse_pct: f64,
}

/// Full record of one optimization run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub stage1_ranking: GlobalRanking,
    pub interactions: Vec<InteractionCandidate>,
    pub dataset_ii_spec: DatasetIiSpec,
    pub stage2_ranking: GlobalRanking,
    pub sweep: Vec<SweepPoint>,
    pub chosen_t: usize,
    pub dataset_iii_spec: DatasetIiiSpec,
    pub baseline_metrics: PredictionMetrics,
    pub optimized_metrics: PredictionMetrics,
    pub improvement_pct: ImprovementPct,
}

/// Replays a stage-1 recipe on the original table. Interaction columns
/// multiply original raw columns, so a constituent may appear in a product
/// even when the raw feature itself is removed.
pub fn apply_dataset_ii_spec(
    dataset_i: &Dataset,
    spec: &DatasetIiSpec,
) -> Result<Dataset, DataError> {
    let mut data = dataset_i.clone();
    for names in &spec.interactions {
        data = data.encode_interaction(names)?;
    }
    data.remove_features(&spec.removed_features)
}

/// Replays a stage-2 recipe on the rebuilt table.
pub fn apply_dataset_iii_spec(
    dataset_ii: &Dataset,
    spec: &DatasetIiiSpec,
) -> Result<Dataset, DataError> {
    dataset_ii.remove_features(&spec.removed_features)
}

/// Explanation budgets cap at the number of available rows so small
/// tables explain every instance instead of failing.
fn clamp_budget(pick: &PickConfig, rows: usize) -> PickConfig {
    PickConfig { budget: pick.budget.min(rows), ..*pick }
}

/// Stage 1: train on the train split, rank features and detect
/// interactions over the full table, then rebuild it by dropping the
/// weakest features and appending detected interaction products.
pub fn reconstruct(
    dataset_i: &Dataset,
    cfg: &PipelineConfig,
) -> Result<(Dataset, StageOne), PipelineError> {
    cfg.reconstruction.validate()?;
    let d = dataset_i.n_features();
    if d < 3 {
        return Err(PipelineError::TooFewFeatures(d));
    }
    let removed_count = cfg.reconstruction.removal_count(d);
    if removed_count + 2 > d {
        return Err(PipelineError::RemovalFloor { n_features: d, removed: removed_count });
    }

    let (train_half, _) = dataset_i.split(&cfg.split)?;
    let model = train(&cfg.regressor, &train_half)?;
    let pick = clamp_budget(&cfg.pick, dataset_i.n_rows());
    let ranking = global_ranking(&model, dataset_i, &cfg.lime, &pick)?;
    let interactions = detect_interactions(dataset_i, &cfg.mlp, &cfg.cutoff)?;

    let removed_features: Vec<String> =
        ranking.least_important(removed_count).iter().map(|s| s.to_string()).collect();
    let embedded: Vec<Vec<String>> = if cfg.reconstruction.embed_all_interactions {
        let names = dataset_i.feature_names();
        interactions.iter().map(|c| c.named(&names)).collect()
    } else {
        Vec::new()
    };
    let dataset_spec = DatasetIiSpec { removed_features, interactions: embedded };
    let dataset_ii = apply_dataset_ii_spec(dataset_i, &dataset_spec)?;
    Ok((dataset_ii, StageOne { ranking, interactions, dataset_spec }))
}

/// Stage 2: rank the rebuilt table, then for each depth `t` in `0..=k'`
/// remove the `t` weakest features, retrain on the train split, and score
/// on the test split. Depths are independent, so they run in parallel
/// with per-depth derived seeds; results match a sequential run.
pub fn selection_sweep(
    dataset_ii: &Dataset,
    cfg: &PipelineConfig,
) -> Result<(GlobalRanking, Vec<SweepPoint>), PipelineError> {
    let d = dataset_ii.n_features();
    let k_prime = cfg.selection.k_prime.unwrap_or(d / 2);
    if k_prime >= d {
        return Err(PipelineError::BadKPrime { k_prime, n_features: d });
    }

    let (train_half, _) = dataset_ii.split(&cfg.split)?;
    let model = train(&cfg.regressor, &train_half)?;
    let pick = clamp_budget(&cfg.pick, dataset_ii.n_rows());
    let ranking = global_ranking(&model, dataset_ii, &cfg.lime, &pick)?;

    let sweep = (0..=k_prime)
        .into_par_iter()
        .map(|t| -> Result<SweepPoint, PipelineError> {
            let removed_features: Vec<String> =
                ranking.least_important(t).iter().map(|s| s.to_string()).collect();
            let reduced = dataset_ii.remove_features(&removed_features)?;
            let (train_t, test_t) = reduced.split(&cfg.split)?;
            let spec_t = RegressorSpec {
                seed: seeding::derive_seed(cfg.regressor.seed, SWEEP_TAG + t as u64),
                ..cfg.regressor.clone()
            };
            let metrics = evaluate(&train(&spec_t, &train_t)?, &test_t)?;
            Ok(SweepPoint { t, removed_features, r2: metrics.r2, rmse: metrics.rmse })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((ranking, sweep))
}

fn z_scores(values: &[f64]) -> Vec<f64> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    if std == 0.0 {
        return vec![0.0; values.len()];
    }
    values.iter().map(|v| (v - mean) / std).collect()
}

/// Picks the winning sweep depth. `R2` maximizes fit quality, `Rmse`
/// minimizes error, and `Combined` maximizes the difference of the two
/// standardized scores across the sweep. Ties resolve toward the larger
/// depth (fewer features).
pub fn choose_optimum(
    sweep: &[SweepPoint],
    objective: Objective,
) -> Result<&SweepPoint, PipelineError> {
    if sweep.is_empty() {
        return Err(PipelineError::EmptySweep);
    }
    let scores: Vec<f64> = match objective {
        Objective::R2 => sweep.iter().map(|p| p.r2).collect(),
        Objective::Rmse => sweep.iter().map(|p| -p.rmse).collect(),
        Objective::Combined => {
            let z_r2 = z_scores(&sweep.iter().map(|p| p.r2).collect::<Vec<_>>());
            let z_rmse = z_scores(&sweep.iter().map(|p| p.rmse).collect::<Vec<_>>());
            z_r2.iter().zip(&z_rmse).map(|(a, b)| a - b).collect()
        }
    };
    let mut best = 0;
    for i in 1..sweep.len() {
        let better = scores[i] > scores[best]
            || (scores[i] == scores[best] && sweep[i].t > sweep[best].t);
        if better {
            best = i;
        }
    }
    Ok(&sweep[best])
}

fn improvement_pct(base: &PredictionMetrics, opt: &PredictionMetrics) -> ImprovementPct {
    ImprovementPct {
        r2_pct: (opt.r2 - base.r2) / base.r2.abs() * 100.0,
        rmse_pct: (base.rmse - opt.rmse) / base.rmse * 100.0,
    }
}

/// Full run: baseline metrics on the original table, stage-1 rebuild,
/// stage-2 sweep, optimum choice, and the percent improvements. All stages
/// share one fixed train/test split, and fixed seeds make the whole report
/// reproducible byte for byte.
pub fn run(dataset_i: &Dataset, cfg: &PipelineConfig) -> Result<PipelineReport, PipelineError> {
    let (train_i, test_i) = dataset_i.split(&cfg.split)?;
    let baseline_metrics = evaluate(&train(&cfg.regressor, &train_i)?, &test_i)?;

    let (dataset_ii, stage_one) = reconstruct(dataset_i, cfg)?;
    let (stage2_ranking, sweep) = selection_sweep(&dataset_ii, cfg)?;
    let chosen = choose_optimum(&sweep, cfg.selection.objective)?.clone();
    let optimized_metrics = PredictionMetrics { r2: chosen.r2, rmse: chosen.rmse };

    Ok(PipelineReport {
        stage1_ranking: stage_one.ranking,
        interactions: stage_one.interactions,
        dataset_ii_spec: stage_one.dataset_spec,
        stage2_ranking,
        sweep,
        chosen_t: chosen.t,
        dataset_iii_spec: DatasetIiiSpec { removed_features: chosen.removed_features },
        baseline_metrics,
        optimized_metrics,
        improvement_pct: improvement_pct(&baseline_metrics, &optimized_metrics),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nid::CutoffMode;
    use crate::synth::{generate, FeatureDistribution, SyntheticSpec, SyntheticTerm};

    fn point(t: usize, r2: f64, rmse: f64) -> SweepPoint {
        SweepPoint { t, removed_features: vec![String::new(); t], r2, rmse }
    }

    fn synthetic(n_rows: usize, n_features: usize, seed: u64) -> Dataset {
        let terms = vec![
            SyntheticTerm { coefficient: 1.0, features: vec![0, 1] },
            SyntheticTerm { coefficient: 0.8, features: vec![2] },
        ];
        let spec = SyntheticSpec {
            n_rows,
            n_features,
            terms,
            noise_sigma: 0.05,
            distribution: FeatureDistribution::StandardNormal,
            seed,
        };
        generate(&spec).unwrap().0
    }

    fn fast_config(n_rows: usize) -> PipelineConfig {
        PipelineConfig {
            split: SplitSpec { train_count: n_rows * 2 / 3, seed: 7 },
            regressor: RegressorSpec::decision_tree(3),
            lime: LimeConfig { n_perturbations: 200, seed: 11, ..LimeConfig::default() },
            pick: PickConfig::default(),
            mlp: MlpConfig {
                hidden_sizes: vec![8],
                epochs: 30,
                batch_size: 32,
                seed: 5,
                ..MlpConfig::default()
            },
            cutoff: CutoffConfig::default(),
            reconstruction: ReconstructionConfig::default(),
            selection: SelectionConfig::default(),
        }
    }

    #[test]
    fn removal_count_rounds_and_respects_floor_count() {
        let rc = ReconstructionConfig::default();
        assert_eq!(rc.removal_count(18), 2);
        assert_eq!(rc.removal_count(4), 1);
        let none = ReconstructionConfig { min_removed: 0, ..rc };
        assert_eq!(none.removal_count(4), 0);
    }

    #[test]
    fn bad_removal_fractions_rejected() {
        for bad in [-0.1, 0.5, 0.9, f64::NAN] {
            let rc = ReconstructionConfig { removal_fraction: bad, ..Default::default() };
            assert!(matches!(rc.validate(), Err(PipelineError::BadRemovalFraction(_))));
        }
    }

    #[test]
    fn choose_single_point() {
        let sweep = [point(0, 0.9, 1.0)];
        for obj in [Objective::R2, Objective::Rmse, Objective::Combined] {
            assert_eq!(choose_optimum(&sweep, obj).unwrap().t, 0);
        }
    }

    #[test]
    fn choose_agrees_when_optimum_is_consistent() {
        let sweep = [point(0, 0.5, 3.0), point(1, 0.8, 1.0), point(2, 0.6, 2.0)];
        for obj in [Objective::R2, Objective::Rmse, Objective::Combined] {
            assert_eq!(choose_optimum(&sweep, obj).unwrap().t, 1);
        }
    }

    #[test]
    fn combined_standardizes_both_axes() {
        let sweep = [point(0, 0.5, 10.0), point(1, 0.6, 8.0), point(2, 0.55, 9.0)];
        assert_eq!(choose_optimum(&sweep, Objective::Combined).unwrap().t, 1);
    }

    #[test]
    fn ties_resolve_to_larger_depth() {
        let sweep = [point(0, 0.7, 2.0), point(1, 0.7, 2.0)];
        assert_eq!(choose_optimum(&sweep, Objective::R2).unwrap().t, 1);
        assert_eq!(choose_optimum(&sweep, Objective::Rmse).unwrap().t, 1);
        assert_eq!(choose_optimum(&sweep, Objective::Combined).unwrap().t, 1);
    }

    #[test]
    fn constant_axis_contributes_nothing_to_combined() {
        // RMSE is flat, so the choice falls to the fit-quality axis alone.
        let sweep = [point(0, 0.5, 2.0), point(1, 0.9, 2.0), point(2, 0.6, 2.0)];
        assert_eq!(choose_optimum(&sweep, Objective::Combined).unwrap().t, 1);
    }

    #[test]
    fn empty_sweep_is_an_error() {
        assert!(matches!(choose_optimum(&[], Objective::R2), Err(PipelineError::EmptySweep)));
    }

    #[test]
    fn improvement_percentages_are_signed_relative_changes() {
        let base = PredictionMetrics { r2: 0.5, rmse: 10.0 };
        let opt = PredictionMetrics { r2: 0.55, rmse: 8.0 };
        let imp = improvement_pct(&base, &opt);
        assert!((imp.r2_pct - 10.0).abs() < 1e-12);
        assert!((imp.rmse_pct - 20.0).abs() < 1e-12);
        let worse = improvement_pct(&base, &PredictionMetrics { r2: 0.45, rmse: 11.0 });
        assert!(worse.r2_pct < 0.0 && worse.rmse_pct < 0.0);
    }

    #[test]
    fn reconstruct_counts_match_removal_and_embedding_arithmetic() {
        let data = synthetic(60, 18, 42);
        let mut cfg = fast_config(60);
        cfg.cutoff = CutoffConfig { mode: CutoffMode::FixedK, k: Some(8), max_candidates: 20 };
        let (dataset_ii, stage) = reconstruct(&data, &cfg).unwrap();
        assert_eq!(stage.dataset_spec.removed_features.len(), 2);
        assert_eq!(stage.interactions.len(), 8);
        assert_eq!(dataset_ii.n_features(), 18 - 2 + 8);
        assert_eq!(
            stage.dataset_spec.removed_features,
            stage.ranking.least_important(2).iter().map(|s| s.to_string()).collect::<Vec<_>>()
        );
        // Product columns are built from original raw values, even when a
        // constituent raw feature was removed from the table.
        for names in &stage.dataset_spec.interactions {
            let joined = names.join("*");
            let col = dataset_ii.feature_index(&joined).unwrap();
            for i in 0..data.n_rows() {
                let expect: f64 = names
                    .iter()
                    .map(|n| data.values().get(i, data.feature_index(n).unwrap()))
                    .product();
                assert_eq!(dataset_ii.values().get(i, col), expect);
            }
        }
    }

    #[test]
    fn reconstruct_without_embedding_only_removes() {
        let data = synthetic(60, 6, 9);
        let mut cfg = fast_config(60);
        cfg.reconstruction.embed_all_interactions = false;
        let (dataset_ii, stage) = reconstruct(&data, &cfg).unwrap();
        assert!(stage.dataset_spec.interactions.is_empty());
        assert!(!stage.interactions.is_empty(), "detection still reported");
        let expected = data.remove_features(&stage.dataset_spec.removed_features).unwrap();
        assert_eq!(dataset_ii, expected);
    }

    #[test]
    fn reconstruct_guards_feature_floor() {
        let data = synthetic(40, 3, 1);
        let cfg = fast_config(40);
        let mut narrow = cfg.clone();
        narrow.reconstruction.min_removed = 2;
        assert!(matches!(
            reconstruct(&data, &narrow),
            Err(PipelineError::RemovalFloor { n_features: 3, removed: 2 })
        ));
        let spec = SyntheticSpec {
            n_rows: 40,
            n_features: 2,
            terms: vec![SyntheticTerm { coefficient: 1.0, features: vec![0, 1] }],
            noise_sigma: 0.0,
            distribution: FeatureDistribution::StandardNormal,
            seed: 1,
        };
        let two = generate(&spec).unwrap().0;
        assert!(matches!(reconstruct(&two, &cfg), Err(PipelineError::TooFewFeatures(2))));
    }

    #[test]
    fn sweep_points_are_nested_ranking_prefixes() {
        let data = synthetic(60, 8, 23);
        let mut cfg = fast_config(60);
        cfg.selection.k_prime = Some(3);
        let (ranking, sweep) = selection_sweep(&data, &cfg).unwrap();
        assert_eq!(sweep.len(), 4);
        for (t, p) in sweep.iter().enumerate() {
            assert_eq!(p.t, t);
            assert_eq!(p.removed_features.len(), t);
            assert_eq!(
                p.removed_features,
                ranking.least_important(t).iter().map(|s| s.to_string()).collect::<Vec<_>>()
            );
            if t > 0 {
                assert_eq!(sweep[t - 1].removed_features, p.removed_features[..t - 1]);
            }
            assert!(p.rmse >= 0.0);
        }
    }

    #[test]
    fn auto_depth_is_half_the_features() {
        let data = synthetic(45, 7, 2);
        let cfg = fast_config(45);
        let (_, sweep) = selection_sweep(&data, &cfg).unwrap();
        assert_eq!(sweep.len(), 4, "floor(7/2) = 3 gives depths 0..=3");
    }

    #[test]
    fn explicit_depth_must_leave_a_feature() {
        let data = synthetic(45, 4, 2);
        let mut cfg = fast_config(45);
        cfg.selection.k_prime = Some(4);
        assert!(matches!(
            selection_sweep(&data, &cfg),
            Err(PipelineError::BadKPrime { k_prime: 4, n_features: 4 })
        ));
    }

    #[test]
    fn run_report_is_consistent_and_reproducible() {
        let data = synthetic(90, 6, 77);
        let mut cfg = fast_config(90);
        cfg.mlp.epochs = 60;
        cfg.cutoff = CutoffConfig { mode: CutoffMode::FixedK, k: Some(2), max_candidates: 20 };
        let report = run(&data, &cfg).unwrap();

        let k_prime = cfg.selection.k_prime.unwrap_or(report.stage2_ranking.entries.len() / 2);
        assert!(report.chosen_t <= k_prime);
        let chosen = &report.sweep[report.chosen_t];
        assert_eq!(chosen.t, report.chosen_t);
        assert_eq!(report.optimized_metrics.r2, chosen.r2);
        assert_eq!(report.optimized_metrics.rmse, chosen.rmse);
        assert_eq!(report.dataset_iii_spec.removed_features, chosen.removed_features);

        // The recorded recipes rebuild the sweep's winning table exactly.
        let dataset_ii = apply_dataset_ii_spec(&data, &report.dataset_ii_spec).unwrap();
        assert_eq!(dataset_ii.n_features(), 6 - 1 + 2);
        let dataset_iii = apply_dataset_iii_spec(&dataset_ii, &report.dataset_iii_spec).unwrap();
        assert_eq!(dataset_iii.n_features(), dataset_ii.n_features() - report.chosen_t);
        for name in dataset_iii.feature_names() {
            assert!(!report.dataset_iii_spec.removed_features.iter().any(|r| r == name));
        }

        let again = run(&data, &cfg).unwrap();
        assert_eq!(
            serde_json::to_string(&report).unwrap(),
            serde_json::to_string(&again).unwrap()
        );
    }

    #[test]
    fn r2_objective_never_loses_to_the_baseline_depth() {
        let data = synthetic(90, 6, 31);
        let mut cfg = fast_config(90);
        cfg.selection.objective = Objective::R2;
        cfg.cutoff = CutoffConfig { mode: CutoffMode::FixedK, k: Some(2), max_candidates: 20 };
        let report = run(&data, &cfg).unwrap();
        assert!(report.optimized_metrics.r2 >= report.sweep[0].r2);
        let max_r2 = report.sweep.iter().map(|p| p.r2).fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(report.optimized_metrics.r2, max_r2);
    }
}
