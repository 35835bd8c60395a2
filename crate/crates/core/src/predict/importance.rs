//! Individual and grouped permutation importance.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{binary_metrics, ForestModel, PredictError};
use crate::features::FeatureMatrix;
use crate::rng;

/// Hold-out error used to score permutations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorMetric {
    /// 1 - accuracy.
    #[default]
    Accuracy,
    /// 1 - AUC.
    Auc,
}

impl ErrorMetric {
    fn error(self, probs: &[f64], labels: &[bool]) -> f64 {
        let m = binary_metrics(probs, labels);
        match self {
            ErrorMetric::Accuracy => 1.0 - m.accuracy,
            ErrorMetric::Auc => 1.0 - m.auc.unwrap_or(0.5),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ImportanceConfig {
    pub repeats: usize,
    pub metric: ErrorMetric,
    pub seed: u64,
}

impl Default for ImportanceConfig {
    fn default() -> Self {
        ImportanceConfig { repeats: 10, metric: ErrorMetric::Accuracy, seed: 0 }
    }
}

/// A named set of columns permuted jointly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnGroupSpec {
    pub name: String,
    pub columns: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    pub name: String,
    pub group: Option<String>,
    /// Mean error increase over repeats (and folds, when aggregated).
    pub raw: f64,
    pub raw_std: f64,
    /// `max(raw, 0)` normalized over all features.
    pub share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupImportance {
    pub name: String,
    pub raw: f64,
    pub raw_std: f64,
    /// `max(raw, 0)` normalized over all groups.
    pub share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub metric: ErrorMetric,
    pub repeats: usize,
    /// Number of hold-out sets averaged.
    pub evaluations: usize,
    pub baseline_error: f64,
    pub features: Vec<FeatureImportance>,
    pub groups: Vec<GroupImportance>,
}

impl ImportanceReport {
    /// Features sorted by descending share, ties by name.
    pub fn ranking(&self) -> Vec<&FeatureImportance> {
        let mut v: Vec<&FeatureImportance> = self.features.iter().collect();
        v.sort_by(|a, b| b.share.total_cmp(&a.share).then_with(|| a.name.cmp(&b.name)));
        v
    }

    pub fn feature(&self, name: &str) -> Option<&FeatureImportance> {
        self.features.iter().find(|f| f.name == name)
    }

    pub fn group(&self, name: &str) -> Option<&GroupImportance> {
        self.groups.iter().find(|g| g.name == name)
    }
}

fn floored_shares(raw: &[f64]) -> Vec<f64> {
    let floored: Vec<f64> = raw.iter().map(|r| r.max(0.0)).collect();
    let total: f64 = floored.iter().sum();
    if total > 0.0 {
        floored.iter().map(|r| r / total).collect()
    } else {
        vec![1.0 / raw.len().max(1) as f64; raw.len()]
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let s = if xs.len() > 1 { (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() } else { 0.0 };
    (m, s)
}

/// Raw error increases of one hold-out evaluation, kept per repeat so that
/// several folds can be pooled.
#[derive(Debug, Clone, Default)]
pub(crate) struct ImportanceSamples {
    pub baseline: Vec<f64>,
    pub features: Vec<Vec<f64>>,
    pub groups: Vec<Vec<f64>>,
}

impl ImportanceSamples {
    pub fn merge(&mut self, other: ImportanceSamples) {
        if self.features.is_empty() {
            *self = other;
            return;
        }
        self.baseline.extend(other.baseline);
        for (a, b) in self.features.iter_mut().zip(other.features) {
            a.extend(b);
        }
        for (a, b) in self.groups.iter_mut().zip(other.groups) {
            a.extend(b);
        }
    }

    pub fn report(&self, m: &FeatureMatrix, groups: &[ColumnGroupSpec], cfg: &ImportanceConfig) -> ImportanceReport {
        let feature_stats: Vec<(f64, f64)> = self.features.iter().map(|v| mean_std(v)).collect();
        let group_stats: Vec<(f64, f64)> = self.groups.iter().map(|v| mean_std(v)).collect();
        let fshare = floored_shares(&feature_stats.iter().map(|s| s.0).collect::<Vec<_>>());
        let gshare = floored_shares(&group_stats.iter().map(|s| s.0).collect::<Vec<_>>());
        let group_of = |j: usize| groups.iter().find(|g| g.columns.contains(&j)).map(|g| g.name.clone());
        ImportanceReport {
            metric: cfg.metric,
            repeats: cfg.repeats,
            evaluations: self.baseline.len(),
            baseline_error: mean_std(&self.baseline).0,
            features: feature_stats
                .iter()
                .enumerate()
                .map(|(j, &(raw, raw_std))| FeatureImportance {
                    name: m.columns()[j].name.clone(),
                    group: group_of(j),
                    raw,
                    raw_std,
                    share: fshare[j],
                })
                .collect(),
            groups: group_stats
                .iter()
                .zip(groups)
                .enumerate()
                .map(|(k, (&(raw, raw_std), g))| GroupImportance { name: g.name.clone(), raw, raw_std, share: gshare[k] })
                .collect(),
        }
    }
}

pub(crate) fn importance_samples(
    model: &ForestModel,
    m: &FeatureMatrix,
    hold_out: &[usize],
    labels: &[bool],
    groups: &[ColumnGroupSpec],
    cfg: &ImportanceConfig,
) -> Result<ImportanceSamples, PredictError> {
    model.check_signature(m)?;
    let d = m.n_cols();
    for g in groups {
        if let Some(&bad) = g.columns.iter().find(|&&j| j >= d) {
            return Err(PredictError::UnknownColumn(bad));
        }
    }
    if cfg.repeats == 0 {
        return Err(PredictError::InvalidConfig("importance repeats must be >= 1".into()));
    }
    let y: Vec<bool> = hold_out.iter().map(|&r| labels[r]).collect();
    let baseline = cfg.metric.error(&model.predict_proba(m, hold_out)?, &y);

    let permuted_error = |cols: &[usize], stream: u64, repeat: usize| -> f64 {
        let mut perm: Vec<usize> = hold_out.to_vec();
        perm.shuffle(&mut rng::rng_from(rng::derive_path(cfg.seed, &[stream, repeat as u64])));
        let mut buf = vec![0.0; d];
        let probs: Vec<f64> = hold_out
            .iter()
            .zip(&perm)
            .map(|(&r, &donor)| {
                buf.copy_from_slice(m.row(r));
                for &j in cols {
                    buf[j] = m.get(donor, j);
                }
                model.predict_proba_row(&buf)
            })
            .collect();
        cfg.metric.error(&probs, &y) - baseline
    };

    // Stream ids: features use their column index, groups follow after.
    let units: Vec<(Vec<usize>, u64)> = (0..d)
        .map(|j| (vec![j], j as u64))
        .chain(groups.iter().enumerate().map(|(k, g)| (g.columns.clone(), (d + k) as u64)))
        .collect();
    let increases: Vec<Vec<f64>> = rng::map_indexed(units.len(), |u| {
        let (cols, stream) = &units[u];
        (0..cfg.repeats).map(|r| permuted_error(cols, *stream, r)).collect()
    });
    let (features, groups) = increases.split_at(d);
    Ok(ImportanceSamples { baseline: vec![baseline], features: features.to_vec(), groups: groups.to_vec() })
}

/// Permutation importance of every column and every column group on a
/// hold-out set. Group members share one row permutation per repeat.
pub fn permutation_importance(
    model: &ForestModel,
    m: &FeatureMatrix,
    hold_out: &[usize],
    labels: &[bool],
    groups: &[ColumnGroupSpec],
    cfg: &ImportanceConfig,
) -> Result<ImportanceReport, PredictError> {
    Ok(importance_samples(model, m, hold_out, labels, groups, cfg)?.report(m, groups, cfg))
}
