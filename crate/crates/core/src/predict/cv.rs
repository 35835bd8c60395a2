use serde::{Deserialize, Serialize};

use super::importance::{importance_samples, ImportanceSamples};
use super::{
    binary_metrics, kfold_partition, train_forest, undersample, BinaryMetrics, ColumnGroupSpec, ForestConfig,
    ImportanceConfig, ImportanceReport, PredictError,
};
use crate::features::FeatureMatrix;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub std: f64,
}

impl MetricSummary {
    fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return MetricSummary { mean: f64::NAN, std: f64::NAN };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        MetricSummary { mean, std }
    }
}

/// Cross-validated metrics, averaged over folds and undersampling iterations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: MetricSummary,
    pub precision: MetricSummary,
    pub recall: MetricSummary,
    pub f1: MetricSummary,
    pub auc: MetricSummary,
    /// Folds x iterations that produced metrics.
    pub evaluations: usize,
    pub iterations: usize,
    pub folds: usize,
    /// Rows per balanced sample.
    pub balanced_rows: usize,
    pub config: ForestConfig,
}

impl EvalReport {
    /// Mean accuracy, precision, recall, F1 and AUC, three decimals each.
    pub fn table_row(&self) -> String {
        [self.accuracy, self.precision, self.recall, self.f1, self.auc]
            .iter()
            .map(|m| format!("{:.3}", m.mean))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Balanced k-fold cross-validation of a random forest over all rows of `m`.
pub fn cross_validate(m: &FeatureMatrix, labels: &[bool], cfg: &ForestConfig) -> Result<EvalReport, PredictError> {
    run(m, labels, cfg, None).map(|(r, _)| r)
}

/// Settings for importance computed inside cross-validation.
#[derive(Debug, Clone)]
pub struct CvImportance<'a> {
    pub groups: &'a [ColumnGroupSpec],
    pub config: &'a ImportanceConfig,
    /// Leading undersampling iterations whose hold-out folds are scored.
    pub iterations: usize,
}

/// Like [`cross_validate`], additionally scoring permutation importance on the
/// hold-out folds of the first `importance_iterations` iterations.
pub fn cross_validate_with_importance(
    m: &FeatureMatrix,
    labels: &[bool],
    cfg: &ForestConfig,
    groups: &[ColumnGroupSpec],
    importance: &ImportanceConfig,
    importance_iterations: usize,
) -> Result<(EvalReport, ImportanceReport), PredictError> {
    let spec = CvImportance { groups, config: importance, iterations: importance_iterations.max(1) };
    let (report, samples) = run(m, labels, cfg, Some(&spec))?;
    let samples = samples.expect("importance requested");
    Ok((report, samples.report(m, groups, importance)))
}

fn run(
    m: &FeatureMatrix,
    labels: &[bool],
    cfg: &ForestConfig,
    importance: Option<&CvImportance<'_>>,
) -> Result<(EvalReport, Option<ImportanceSamples>), PredictError> {
    cfg.validate()?;
    if labels.len() != m.n_rows() {
        return Err(PredictError::InvalidConfig(format!("{} labels for {} rows", labels.len(), m.n_rows())));
    }
    if m.n_rows() == 0 || m.n_cols() == 0 {
        return Err(PredictError::EmptyMatrix);
    }
    if m.n_rows() < cfg.folds {
        return Err(PredictError::TooFewRows { n: m.n_rows(), k: cfg.folds });
    }
    let all: Vec<usize> = (0..m.n_rows()).collect();
    let mut per_fold: Vec<BinaryMetrics> = Vec::new();
    let mut samples = importance.map(|_| ImportanceSamples::default());
    let mut balanced_rows = 0;

    for it in 0..cfg.undersample_iterations {
        let balanced = undersample(&all, labels, rng::derive_path(cfg.seed, &[1, it as u64]))?;
        balanced_rows = balanced.len();
        let folds = kfold_partition(&balanced, cfg.folds, rng::derive_path(cfg.seed, &[2, it as u64]))?;
        for (f, test) in folds.iter().enumerate() {
            let train: Vec<usize> =
                folds.iter().enumerate().filter(|&(g, _)| g != f).flat_map(|(_, fold)| fold.iter().copied()).collect();
            let fold_cfg = ForestConfig { seed: rng::derive_path(cfg.seed, &[3, it as u64, f as u64]), ..cfg.clone() };
            let model = train_forest(m, &train, labels, &fold_cfg)?;
            let probs = model.predict_proba(m, test)?;
            let y: Vec<bool> = test.iter().map(|&r| labels[r]).collect();
            per_fold.push(binary_metrics(&probs, &y));

            if let (Some(spec), Some(acc)) = (importance, samples.as_mut()) {
                if it < spec.iterations {
                    let imp_cfg = ImportanceConfig {
                        seed: rng::derive_path(spec.config.seed, &[it as u64, f as u64]),
                        ..spec.config.clone()
                    };
                    acc.merge(importance_samples(&model, m, test, labels, spec.groups, &imp_cfg)?);
                }
            }
        }
    }

    let pick = |f: fn(&BinaryMetrics) -> Option<f64>| -> MetricSummary {
        MetricSummary::of(&per_fold.iter().filter_map(f).collect::<Vec<_>>())
    };
    let report = EvalReport {
        accuracy: pick(|b| Some(b.accuracy)),
        precision: pick(|b| Some(b.precision)),
        recall: pick(|b| Some(b.recall)),
        f1: pick(|b| Some(b.f1)),
        auc: pick(|b| b.auc),
        evaluations: per_fold.len(),
        iterations: cfg.undersample_iterations,
        folds: cfg.folds,
        balanced_rows,
        config: cfg.clone(),
    };
    Ok((report, samples))
}
