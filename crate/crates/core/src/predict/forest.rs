use rand::Rng;

use super::tree::{DecisionTree, TreeParams};
use super::{ForestConfig, PredictError};
use crate::features::FeatureMatrix;
use crate::rng;

/// A bagged ensemble of CART trees.
#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    trees: Vec<DecisionTree>,
    columns: Vec<String>,
}

/// Trains a random forest on the matrix rows in `rows`. `labels` is indexed
/// by matrix row. Each tree sees a bootstrap resample of `rows` and considers
/// `cfg.features_per_split` random candidate features per node.
pub fn train_forest(
    m: &FeatureMatrix,
    rows: &[usize],
    labels: &[bool],
    cfg: &ForestConfig,
) -> Result<ForestModel, PredictError> {
    if rows.is_empty() || m.n_cols() == 0 {
        return Err(PredictError::EmptyMatrix);
    }
    if cfg.n_trees == 0 {
        return Err(PredictError::InvalidConfig("n_trees must be >= 1".into()));
    }
    if rows.iter().all(|&r| labels[r]) || rows.iter().all(|&r| !labels[r]) {
        return Err(PredictError::SingleClass);
    }
    let d = m.n_cols();
    let params = TreeParams {
        max_features: cfg.features_per_split(d),
        max_depth: cfg.max_depth,
        min_samples_split: cfg.min_samples_split,
    };
    let trees = rng::map_indexed(cfg.n_trees, |t| {
        let mut r = rng::substream(cfg.seed, t as u64);
        let mut counts = vec![0u32; rows.len()];
        for _ in 0..rows.len() {
            counts[r.random_range(0..rows.len())] += 1;
        }
        let picked: Vec<usize> = (0..rows.len()).filter(|&k| counts[k] > 0).collect();
        let columns: Vec<Vec<f64>> =
            (0..d).map(|j| picked.iter().map(|&k| m.get(rows[k], j)).collect()).collect();
        let y: Vec<bool> = picked.iter().map(|&k| labels[rows[k]]).collect();
        let w: Vec<f64> = picked.iter().map(|&k| f64::from(counts[k])).collect();
        DecisionTree::grow(&columns, &y, &w, &params, &mut r)
    });
    Ok(ForestModel { trees, columns: m.column_names() })
}

impl ForestModel {
    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    /// Share of trees voting positive.
    pub fn predict_proba_row(&self, row: &[f64]) -> f64 {
        let votes = self.trees.iter().filter(|t| t.vote(row)).count();
        votes as f64 / self.trees.len() as f64
    }

    /// Vote shares for the given matrix rows.
    pub fn predict_proba(&self, m: &FeatureMatrix, rows: &[usize]) -> Result<Vec<f64>, PredictError> {
        self.check_signature(m)?;
        Ok(rows.iter().map(|&r| self.predict_proba_row(m.row(r))).collect())
    }

    /// Class predictions; a tied vote is positive.
    pub fn predict(&self, m: &FeatureMatrix, rows: &[usize]) -> Result<Vec<bool>, PredictError> {
        Ok(self.predict_proba(m, rows)?.into_iter().map(|p| p >= 0.5).collect())
    }

    pub fn check_signature(&self, m: &FeatureMatrix) -> Result<(), PredictError> {
        if m.n_cols() != self.columns.len() || m.columns().iter().zip(&self.columns).any(|(c, n)| c.name != *n) {
            return Err(PredictError::ColumnMismatch);
        }
        Ok(())
    }

    /// Whether any tree splits on column `j`.
    pub fn uses_feature(&self, j: usize) -> bool {
        self.trees.iter().any(|t| t.uses_feature(j))
    }
}
