//! Configuration loading, command implementations, and report writers
//! behind the `featforge` binary.
//!
//! Every command reads one JSON configuration file; a handful of flags
//! override individual fields. All randomness flows from seeds in the
//! config, so a command rerun with the same file reproduces its output
//! files byte for byte.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use featforge::dataset::{Dataset, SplitSpec};
use featforge::lime::{global_ranking, GlobalRanking, LimeConfig, PickConfig};
use featforge::nid::{detect_interactions, CutoffConfig, InteractionCandidate, MlpConfig};
use featforge::pipeline::{
    self, PipelineConfig, PipelineReport, ReconstructionConfig, SelectionConfig,
};
use featforge::regressors::{train, LossShape, RegressorKind, RegressorSpec};
use featforge::synth::{generate, SyntheticSpec};

/// Failures split into the two documented exit classes: bad configuration
/// (exit 2) and failures during execution (exit 1).
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

fn config<E: std::fmt::Display>(err: E) -> CliError {
    CliError::Config(err.to_string())
}

fn runtime<E: std::fmt::Display>(err: E) -> CliError {
    CliError::Runtime(err.to_string())
}

/// Train split given as an absolute row count or a fraction of the data;
/// exactly one of the two must be set.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    #[serde(default)]
    pub train_count: Option<usize>,
    #[serde(default)]
    pub train_fraction: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

impl SplitConfig {
    fn resolve(&self, n_rows: usize, seed_shift: u64) -> Result<SplitSpec, CliError> {
        let train_count = match (self.train_count, self.train_fraction) {
            (Some(count), None) => count,
            (None, Some(fraction)) => {
                if !(fraction > 0.0 && fraction < 1.0) {
                    return Err(CliError::Config(format!(
                        "train_fraction must lie strictly between 0 and 1, got {fraction}"
                    )));
                }
                ((fraction * n_rows as f64).round() as usize).clamp(1, n_rows.saturating_sub(1))
            }
            _ => {
                return Err(CliError::Config(
                    "split needs exactly one of train_count or train_fraction".into(),
                ))
            }
        };
        if train_count == 0 || train_count >= n_rows {
            return Err(CliError::Config(format!(
                "train_count {train_count} must leave both splits nonempty ({n_rows} rows)"
            )));
        }
        Ok(SplitSpec { train_count, seed: self.seed.wrapping_add(seed_shift) })
    }
}

/// Regressor selection; omitted fields fall back to the kind's defaults.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegressorConfig {
    pub kind: RegressorKind,
    #[serde(default)]
    pub n_estimators: Option<usize>,
    #[serde(default)]
    pub max_depth: Option<usize>,
    #[serde(default)]
    pub min_samples_leaf: Option<usize>,
    #[serde(default)]
    pub feature_subsample: Option<f64>,
    #[serde(default)]
    pub bootstrap: Option<bool>,
    #[serde(default)]
    pub loss_shape: Option<LossShape>,
    #[serde(default)]
    pub seed: u64,
}

impl RegressorConfig {
    fn resolve(&self, seed_shift: u64) -> Result<RegressorSpec, CliError> {
        let mut spec = match self.kind {
            RegressorKind::DecisionTree => RegressorSpec::decision_tree(0),
            RegressorKind::RandomForest => RegressorSpec::random_forest(0),
            RegressorKind::AdaBoost => RegressorSpec::adaboost(0),
        };
        if let Some(v) = self.n_estimators {
            spec.n_estimators = v;
        }
        if let Some(v) = self.max_depth {
            spec.max_depth = Some(v);
        }
        if let Some(v) = self.min_samples_leaf {
            spec.min_samples_leaf = v;
        }
        if let Some(v) = self.feature_subsample {
            spec.feature_subsample = v;
        }
        if let Some(v) = self.bootstrap {
            spec.bootstrap = v;
        }
        if let Some(v) = self.loss_shape {
            spec.loss_shape = v;
        }
        spec.seed = self.seed.wrapping_add(seed_shift);
        spec.validate().map_err(config)?;
        Ok(spec)
    }
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_repetitions() -> usize {
    5
}

/// One run configuration file. `seed` shifts every nested seed, and each
/// optimization repetition `r` shifts them again by `r`, so repetitions
/// are independent but fully reproducible.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub data: Option<PathBuf>,
    #[serde(default)]
    pub target: Option<String>,
    pub split: SplitConfig,
    pub regressor: RegressorConfig,
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
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub synthetic: Option<SyntheticSpec>,
}

/// Flag-level overrides applied on top of the loaded file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub data: Option<PathBuf>,
    pub target: Option<String>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

pub fn load_config(path: &Path, overrides: &Overrides) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut cfg: RunConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))?;
    if let Some(data) = &overrides.data {
        cfg.data = Some(data.clone());
    }
    if let Some(target) = &overrides.target {
        cfg.target = Some(target.clone());
    }
    if let Some(out) = &overrides.out {
        cfg.out_dir = out.clone();
    }
    if let Some(seed) = overrides.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.repetitions == 0 {
            return Err(CliError::Config("repetitions must be at least 1".into()));
        }
        self.mlp.validate().map_err(config)?;
        self.reconstruction.validate().map_err(config)?;
        Ok(())
    }

    fn load_dataset(&self) -> Result<Dataset, CliError> {
        let path = self
            .data
            .as_ref()
            .ok_or_else(|| CliError::Config("a data path is required for this command".into()))?;
        let target = self
            .target
            .as_ref()
            .ok_or_else(|| CliError::Config("a target column name is required".into()))?;
        if !path.exists() {
            return Err(CliError::Config(format!("data file {} does not exist", path.display())));
        }
        Dataset::load_csv(path, target).map_err(runtime)
    }

    /// Materializes the pipeline configuration for repetition `rep`.
    fn pipeline_config(&self, n_rows: usize, rep: u64) -> Result<PipelineConfig, CliError> {
        let shift = self.seed.wrapping_add(rep);
        Ok(PipelineConfig {
            split: self.split.resolve(n_rows, shift)?,
            regressor: self.regressor.resolve(shift)?,
            lime: LimeConfig { seed: self.lime.seed.wrapping_add(shift), ..self.lime.clone() },
            pick: self.pick,
            mlp: MlpConfig { seed: self.mlp.seed.wrapping_add(shift), ..self.mlp.clone() },
            cutoff: self.cutoff,
            reconstruction: self.reconstruction,
            selection: self.selection,
        })
    }

    fn ensure_out_dir(&self) -> Result<(), CliError> {
        fs::create_dir_all(&self.out_dir)
            .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", self.out_dir.display())))
    }
}

/// Writes a global importance table: rank 1 is the least important
/// feature, mirroring the ranking's ascending order.
fn write_ranking_csv(path: &Path, ranking: &GlobalRanking) -> Result<(), CliError> {
    let mut writer = csv::Writer::from_path(path).map_err(runtime)?;
    writer.write_record(["rank", "feature", "weight"]).map_err(runtime)?;
    for (i, entry) in ranking.entries.iter().enumerate() {
        writer
            .write_record([
                (i + 1).to_string(),
                entry.feature.clone(),
                format!("{:.16e}", entry.weight),
            ])
            .map_err(runtime)?;
    }
    writer.flush().map_err(runtime)
}

/// Writes an interaction table: rank 1 is the strongest set; members are
/// semicolon-joined feature names.
fn write_interactions_csv(
    path: &Path,
    candidates: &[InteractionCandidate],
    names: &[&str],
) -> Result<(), CliError> {
    let mut writer = csv::Writer::from_path(path).map_err(runtime)?;
    writer.write_record(["rank", "feature_set", "strength"]).map_err(runtime)?;
    for (i, cand) in candidates.iter().enumerate() {
        writer
            .write_record([
                (i + 1).to_string(),
                cand.named(names).join(";"),
                format!("{:.16e}", cand.strength),
            ])
            .map_err(runtime)?;
    }
    writer.flush().map_err(runtime)
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(runtime)?;
    text.push('\n');
    fs::write(path, text).map_err(runtime)
}

/// Trains the configured regressor and writes `importance.csv` with the
/// global ranking over the full dataset.
pub fn cmd_importance(cfg: &RunConfig) -> Result<GlobalRanking, CliError> {
    let data = cfg.load_dataset()?;
    let pc = cfg.pipeline_config(data.n_rows(), 0)?;
    let (train_half, _) = data.split(&pc.split).map_err(runtime)?;
    let model = train(&pc.regressor, &train_half).map_err(runtime)?;
    let pick = PickConfig { budget: pc.pick.budget.min(data.n_rows()), ..pc.pick };
    let ranking = global_ranking(&model, &data, &pc.lime, &pick).map_err(runtime)?;
    cfg.ensure_out_dir()?;
    write_ranking_csv(&cfg.out_dir.join("importance.csv"), &ranking)?;
    Ok(ranking)
}

/// Runs interaction detection and writes `interactions.csv`; an empty
/// post-cutoff result still writes the header.
pub fn cmd_interactions(cfg: &RunConfig) -> Result<Vec<InteractionCandidate>, CliError> {
    let data = cfg.load_dataset()?;
    let pc = cfg.pipeline_config(data.n_rows(), 0)?;
    let found = detect_interactions(&data, &pc.mlp, &pc.cutoff).map_err(runtime)?;
    cfg.ensure_out_dir()?;
    write_interactions_csv(&cfg.out_dir.join("interactions.csv"), &found, &data.feature_names())?;
    Ok(found)
}

/// One repetition's full pipeline output plus the headline deletion count
/// (stage-1 removals plus the chosen sweep depth).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub repetition: usize,
    pub features_deleted: usize,
    pub report: PipelineReport,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryStat {
    pub mean: f64,
    /// Sample standard deviation across repetitions; null for a single run.
    pub std: Option<f64>,
}

fn summarize(values: &[f64]) -> SummaryStat {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let std = if n < 2 {
        None
    } else {
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
        Some(var.sqrt())
    };
    SummaryStat { mean, std }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub repetitions: usize,
    pub r2_improvement_pct: SummaryStat,
    pub rmse_improvement_pct: SummaryStat,
    pub features_deleted: SummaryStat,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizeReport {
    pub runs: Vec<RunRecord>,
    pub summary: Summary,
}

/// Runs the full pipeline once per repetition (repetition `r` shifts every
/// seed by `r`) and writes `report.json`, `sweep.csv`, both stage
/// importance tables, and `interactions.csv`. The CSV tables other than
/// the sweep come from repetition 0.
pub fn cmd_optimize(cfg: &RunConfig) -> Result<OptimizeReport, CliError> {
    let data = cfg.load_dataset()?;
    let configs: Vec<PipelineConfig> = (0..cfg.repetitions)
        .map(|r| cfg.pipeline_config(data.n_rows(), r as u64))
        .collect::<Result<_, _>>()?;
    let reports: Vec<PipelineReport> = configs
        .par_iter()
        .map(|pc| pipeline::run(&data, pc).map_err(runtime))
        .collect::<Result<_, _>>()?;

    let runs: Vec<RunRecord> = reports
        .into_iter()
        .enumerate()
        .map(|(repetition, report)| RunRecord {
            repetition,
            features_deleted: report.dataset_ii_spec.removed_features.len() + report.chosen_t,
            report,
        })
        .collect();
    let summary = Summary {
        repetitions: cfg.repetitions,
        r2_improvement_pct: summarize(
            &runs.iter().map(|r| r.report.improvement_pct.r2_pct).collect::<Vec<_>>(),
        ),
        rmse_improvement_pct: summarize(
            &runs.iter().map(|r| r.report.improvement_pct.rmse_pct).collect::<Vec<_>>(),
        ),
        features_deleted: summarize(
            &runs.iter().map(|r| r.features_deleted as f64).collect::<Vec<_>>(),
        ),
    };
    let out = OptimizeReport { runs, summary };

    cfg.ensure_out_dir()?;
    write_json(&cfg.out_dir.join("report.json"), &out)?;

    let mut sweep = csv::Writer::from_path(cfg.out_dir.join("sweep.csv")).map_err(runtime)?;
    sweep.write_record(["repetition", "t", "r2", "rmse"]).map_err(runtime)?;
    for run in &out.runs {
        for point in &run.report.sweep {
            sweep
                .write_record([
                    run.repetition.to_string(),
                    point.t.to_string(),
                    format!("{:.16e}", point.r2),
                    format!("{:.16e}", point.rmse),
                ])
                .map_err(runtime)?;
        }
    }
    sweep.flush().map_err(runtime)?;

    let first = &out.runs[0].report;
    write_ranking_csv(&cfg.out_dir.join("importance_stage1.csv"), &first.stage1_ranking)?;
    write_ranking_csv(&cfg.out_dir.join("importance_stage2.csv"), &first.stage2_ranking)?;
    write_interactions_csv(
        &cfg.out_dir.join("interactions.csv"),
        &first.interactions,
        &data.feature_names(),
    )?;
    Ok(out)
}

/// Generates the configured synthetic dataset (seed shifted by the run
/// seed) and writes `synthetic.csv` plus the ground-truth terms.
pub fn cmd_generate(cfg: &RunConfig) -> Result<Dataset, CliError> {
    let spec = cfg
        .synthetic
        .as_ref()
        .ok_or_else(|| CliError::Config("generate needs a `synthetic` section".into()))?;
    let shifted = SyntheticSpec { seed: spec.seed.wrapping_add(cfg.seed), ..spec.clone() };
    let (dataset, truth) = generate(&shifted).map_err(config)?;
    cfg.ensure_out_dir()?;
    dataset.write_csv(cfg.out_dir.join("synthetic.csv")).map_err(runtime)?;

    #[derive(Serialize)]
    struct GroundTruth<'a> {
        spec: &'a SyntheticSpec,
        terms: &'a [featforge::synth::SyntheticTerm],
    }
    write_json(
        &cfg.out_dir.join("ground_truth.json"),
        &GroundTruth { spec: &shifted, terms: &truth },
    )?;
    Ok(dataset)
}
