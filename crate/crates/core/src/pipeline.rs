//! End-to-end analysis: ingest, features, correlation and distribution
//! shape, prediction with importance, matching with treatment effects.
//!
//! Ingest and feature failures abort the run; failures of later stages are
//! recorded in the report and the run continues.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cem::{coarsen, satt_all_features, BinOverride, SattConfig};
use crate::features::{
    build_feature_matrix, normalize_minmax, summarize, ColumnGroup, CrowdFeature, FeatureConfig, Include,
};
use crate::ingest::{filter_completed, load_dataset, FilterOutcome, LoadOptions, MissingPolicy, Timestamp};
use crate::predict::{cross_validate_with_importance, ColumnGroupSpec, ErrorMetric, ForestConfig, ImportanceConfig};
use crate::report::{
    outcome_table, AnalysisReport, DatasetInfo, DistributionRow, MatchingInfo, StageSeeds, StageState, StageStatus,
};
use crate::rng;
use crate::stats::{correlate_with_outcome, dip_test_against, histogram, UniformDipNull};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    /// Paths are resolved against the directory of the config file.
    pub projects: String,
    pub contributions: String,
    pub schema: String,
    #[serde(default)]
    pub missing: MissingPolicy,
    #[serde(default)]
    pub exclude_ids: Vec<String>,
    /// Only campaigns whose deadline passed by this instant count as resolved.
    #[serde(default)]
    pub as_of: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistShapeConfig {
    pub enabled: bool,
    pub bootstrap_reps: usize,
    /// Histogram bins; Sturges when absent.
    pub bins: Option<usize>,
}

impl Default for DistShapeConfig {
    fn default() -> Self {
        DistShapeConfig { enabled: true, bootstrap_reps: 2000, bins: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifyConfig {
    pub enabled: bool,
    pub include: Include,
    pub trees: usize,
    pub folds: usize,
    pub iterations: usize,
    pub max_depth: Option<usize>,
    pub max_features: Option<usize>,
    pub min_samples_split: usize,
    pub importance_repeats: usize,
    pub importance_metric: ErrorMetric,
    /// Leading undersampling iterations whose hold-out folds score importance.
    pub importance_iterations: usize,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        let forest = ForestConfig::default();
        ClassifyConfig {
            enabled: true,
            include: Include::Both,
            trees: forest.n_trees,
            folds: forest.folds,
            iterations: forest.undersample_iterations,
            max_depth: forest.max_depth,
            max_features: forest.max_features,
            min_samples_split: forest.min_samples_split,
            importance_repeats: ImportanceConfig::default().repeats,
            importance_metric: ErrorMetric::Accuracy,
            importance_iterations: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatchingConfig {
    pub enabled: bool,
    /// Matching covariates; every schema covariate when empty.
    pub covariates: Vec<String>,
    pub bins: BTreeMap<String, BinOverride>,
    pub treatment_quantile: f64,
    pub bootstrap: usize,
    pub confidence: f64,
    pub one_to_one: bool,
    pub ridge_penalty: f64,
}

impl Default for MatchingConfig {
    fn default() -> Self {
        let s = SattConfig::default();
        MatchingConfig {
            enabled: true,
            covariates: Vec::new(),
            bins: BTreeMap::new(),
            treatment_quantile: s.treatment_quantile,
            bootstrap: s.bootstrap_reps,
            confidence: s.confidence,
            one_to_one: s.one_to_one,
            ridge_penalty: s.ridge_penalty,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub features: FeatureConfig,
    #[serde(default)]
    pub distshape: DistShapeConfig,
    #[serde(default)]
    pub classify: ClassifyConfig,
    #[serde(default)]
    pub matching: MatchingConfig,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path).map_err(|e| PipelineError::new("config", format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| PipelineError::new("config", format!("{}: {e}", path.display())))
    }

    pub fn stage_seeds(&self) -> StageSeeds {
        StageSeeds {
            dip: rng::derive_seed(self.seed, 1),
            forest: rng::derive_seed(self.seed, 2),
            importance: rng::derive_seed(self.seed, 3),
            satt: rng::derive_seed(self.seed, 4),
        }
    }
}

/// A failure that aborts the run, labelled with its stage.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineError {
    pub stage: String,
    pub message: String,
}

impl PipelineError {
    pub fn new(stage: &str, message: impl Into<String>) -> Self {
        PipelineError { stage: stage.into(), message: message.into() }
    }
}

impl fmt::Display for PipelineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.stage, self.message)
    }
}

impl std::error::Error for PipelineError {}

/// Loads the config at `path` and runs it with paths relative to its directory.
pub fn run_pipeline_file(path: &Path) -> Result<AnalysisReport, PipelineError> {
    let cfg = PipelineConfig::load(path)?;
    run_pipeline(&cfg, path.parent().unwrap_or(Path::new(".")))
}

/// Loads the configured dataset and keeps resolved campaigns. Returns the
/// number of projects loaded, the generator seed if the data is synthetic,
/// and the filtered dataset.
pub fn load_configured_dataset(
    cfg: &PipelineConfig,
    base_dir: &Path,
) -> Result<(usize, Option<u64>, FilterOutcome), PipelineError> {
    let resolve = |p: &str| -> PathBuf { base_dir.join(p) };
    let options = LoadOptions { missing: cfg.dataset.missing, exclude_ids: cfg.dataset.exclude_ids.iter().cloned().collect() };
    let loaded = load_dataset(
        &resolve(&cfg.dataset.projects),
        &resolve(&cfg.dataset.contributions),
        &resolve(&cfg.dataset.schema),
        &options,
    )
    .map_err(|e| PipelineError::new("ingest", e.to_string()))?;
    let as_of = match &cfg.dataset.as_of {
        Some(s) => Some(Timestamp::parse(s).ok_or_else(|| PipelineError::new("ingest", format!("bad as_of `{s}`")))?),
        None => None,
    };
    let filtered = filter_completed(&loaded, as_of);
    if filtered.kept == 0 {
        return Err(PipelineError::new("ingest", "no resolved projects"));
    }
    Ok((loaded.n_projects(), loaded.provenance().seed, filtered))
}

/// Ok without failures, failed when every item failed, partial otherwise.
fn partial_state(failures: usize, items: usize) -> StageState {
    match failures {
        0 => StageState::Ok,
        f if f == items => StageState::Failed,
        _ => StageState::Partial,
    }
}

fn status(stage: &str, state: StageState, errors: Vec<String>) -> StageStatus {
    StageStatus { stage: stage.into(), state, errors }
}

pub fn run_pipeline(cfg: &PipelineConfig, base_dir: &Path) -> Result<AnalysisReport, PipelineError> {
    let seeds = cfg.stage_seeds();
    let mut stages = Vec::new();
    let mut warnings = Vec::new();

    // ingest
    let (loaded_n, seed_of_data, filtered) = load_configured_dataset(cfg, base_dir)?;
    warnings.extend(filtered.warning.clone());
    let d = filtered.dataset;
    stages.push(status("ingest", StageState::Ok, vec![]));

    // features
    let build = build_feature_matrix(&d, Include::Both, &cfg.features).map_err(|e| PipelineError::new("features", e.to_string()))?;
    if build.matrix.n_rows() == 0 {
        return Err(PipelineError::new("features", "no project has contributions"));
    }
    warnings.extend(build.warnings.iter().cloned());
    let labels = build.labels();
    let summary = summarize(&build.crowd, &build.outcomes);
    stages.push(status("features", StageState::Ok, vec![]));

    // correlation
    let outcome_rows = match correlate_with_outcome(&build.matrix, &labels) {
        Ok(rows) => {
            stages.push(status("correlate", StageState::Ok, vec![]));
            Some(outcome_table(&summary, &rows))
        }
        Err(e) => {
            stages.push(status("correlate", StageState::Failed, vec![e.to_string()]));
            None
        }
    };

    // distribution shape
    let distributions = if cfg.distshape.enabled {
        let n = build.crowd.len();
        let null = (n >= 4).then(|| UniformDipNull::new(n, cfg.distshape.bootstrap_reps.max(1), seeds.dip));
        let mut errors = Vec::new();
        let rows: Vec<DistributionRow> = CrowdFeature::ALL
            .iter()
            .map(|&f| {
                let x: Vec<f64> = build.crowd.iter().map(|c| c.get(f)).collect();
                let dip = match &null {
                    Some(null) => dip_test_against(&x, null).map(|r| r.with_feature(f.name())).map_err(|e| e.to_string()),
                    None => Err(format!("need at least 4 projects, got {n}")),
                };
                if let Err(e) = &dip {
                    errors.push(format!("{}: {e}", f.name()));
                }
                DistributionRow {
                    feature: f.name().into(),
                    histogram: histogram(&x, cfg.distshape.bins),
                    error: dip.as_ref().err().cloned(),
                    dip: dip.ok(),
                }
            })
            .collect();
        stages.push(status("distshape", partial_state(errors.len(), CrowdFeature::ALL.len()), errors));
        Some(rows)
    } else {
        stages.push(status("distshape", StageState::Skipped, vec![]));
        None
    };

    // prediction
    let (evaluation, importance) = if cfg.classify.enabled {
        let c = &cfg.classify;
        let forest = ForestConfig {
            n_trees: c.trees,
            max_depth: c.max_depth,
            min_samples_split: c.min_samples_split,
            max_features: c.max_features,
            seed: seeds.forest,
            undersample_iterations: c.iterations,
            folds: c.folds,
        };
        let cols: Vec<usize> = (0..build.matrix.n_cols())
            .filter(|&j| match build.matrix.columns()[j].group {
                ColumnGroup::Crowd => c.include.crowd(),
                ColumnGroup::Project => c.include.project(),
            })
            .collect();
        let m = normalize_minmax(&build.matrix.select_columns(&cols));
        let groups: Vec<ColumnGroupSpec> = [ColumnGroup::Crowd, ColumnGroup::Project]
            .into_iter()
            .map(|g| ColumnGroupSpec { name: g.name().into(), columns: m.group_indices(g) })
            .filter(|g| !g.columns.is_empty())
            .collect();
        let imp = ImportanceConfig { repeats: c.importance_repeats, metric: c.importance_metric, seed: seeds.importance };
        match cross_validate_with_importance(&m, &labels, &forest, &groups, &imp, c.importance_iterations) {
            Ok((e, i)) => {
                stages.push(status("classify", StageState::Ok, vec![]));
                (Some(e), Some(i))
            }
            Err(e) => {
                stages.push(status("classify", StageState::Failed, vec![e.to_string()]));
                (None, None)
            }
        }
    } else {
        stages.push(status("classify", StageState::Skipped, vec![]));
        (None, None)
    };

    // matching and treatment effects
    let (matching, satt) = if cfg.matching.enabled {
        let mc = &cfg.matching;
        let covariates: Vec<String> =
            if mc.covariates.is_empty() { d.schema().names().map(String::from).collect() } else { mc.covariates.clone() };
        let satt_cfg = SattConfig {
            treatment_quantile: mc.treatment_quantile,
            bootstrap_reps: mc.bootstrap,
            confidence: mc.confidence,
            one_to_one: mc.one_to_one,
            ridge_penalty: mc.ridge_penalty,
            seed: seeds.satt,
        };
        let result = coarsen(&d, &covariates, &mc.bins)
            .and_then(|plan| satt_all_features(&d, &build, &plan, &satt_cfg).map(|rows| (plan, rows)));
        match result {
            Ok((plan, rows)) => {
                let errors: Vec<String> =
                    rows.iter().filter_map(|r| r.error.as_ref().map(|e| format!("{}: {e}", r.feature))).collect();
                stages.push(status("match", partial_state(errors.len(), rows.len()), errors));
                (Some(MatchingInfo { plan, n_units: labels.len() }), Some(rows))
            }
            Err(e) => {
                stages.push(status("match", StageState::Failed, vec![e.to_string()]));
                (None, None)
            }
        }
    } else {
        stages.push(status("match", StageState::Skipped, vec![]));
        (None, None)
    };

    let mut notes = vec![
        format!(
            "Treatment effects treat each crowd feature as a treatment (value above quantile {}), funding as the outcome, \
             and match on project covariates. Reading funded and failed projects as the treatment groups would make \
             treatment and outcome coincide, so that reading is not implemented.",
            cfg.matching.treatment_quantile
        ),
        "Untreated outcomes of treated projects are imputed at the fitted logit probability; \
         uncertainty comes from the stratum bootstrap rather than simulation draws."
            .into(),
        "Dip p-values come from a bootstrap against uniform samples of the same size.".into(),
    ];
    if cfg.matching.one_to_one {
        notes.push("One-to-one pruning pairs units greedily by ascending distance, not by optimal assignment.".into());
    }
    if summary.latency_raw_days {
        notes.push("Latency is in raw days for projects without a deadline.".into());
    }

    Ok(AnalysisReport {
        tool: "crowdlens".into(),
        version: crate::VERSION.into(),
        seed: cfg.seed,
        seeds,
        config: cfg.clone(),
        dataset: DatasetInfo {
            source: cfg.dataset.projects.clone(),
            seed: seed_of_data,
            schema: d.schema().clone(),
            n_projects_loaded: loaded_n,
            n_unresolved_dropped: filtered.dropped,
            n_without_contributions: build.dropped.len(),
            n_projects: build.matrix.n_rows(),
            n_contributions: d.n_contributions(),
        },
        stages,
        notes,
        warnings,
        feature_summary: Some(summary),
        outcome_table: outcome_rows,
        distributions,
        evaluation,
        importance,
        matching,
        satt,
    })
}
