//! Random forest prediction of funding outcomes: balanced undersampling,
//! k-fold cross-validation, evaluation metrics and permutation importance.

mod cv;
mod forest;
mod importance;
mod metrics;
mod sampling;
mod tree;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cv::{cross_validate, cross_validate_with_importance, EvalReport, MetricSummary};
pub use forest::{train_forest, ForestModel};
pub use importance::{
    permutation_importance, ColumnGroupSpec, ErrorMetric, FeatureImportance, GroupImportance, ImportanceConfig,
    ImportanceReport,
};
pub use metrics::{binary_metrics, roc_auc, BinaryMetrics};
pub use sampling::{kfold_partition, undersample};
pub use tree::DecisionTree;

#[derive(Debug, Error, PartialEq)]
pub enum PredictError {
    #[error("only one class present")]
    SingleClass,
    #[error("no rows to train on")]
    EmptyMatrix,
    #[error("need at least {k} rows for {k}-fold cross-validation, got {n}")]
    TooFewRows { n: usize, k: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("column signature does not match the trained model")]
    ColumnMismatch,
    #[error("unknown column index {0}")]
    UnknownColumn(usize),
}

/// Forest and cross-validation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// `None` grows trees until leaves are pure.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    /// Candidate features per split; `None` means floor(sqrt(d)).
    pub max_features: Option<usize>,
    pub seed: u64,
    pub undersample_iterations: usize,
    pub folds: usize,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 100,
            max_depth: None,
            min_samples_split: 2,
            max_features: None,
            seed: 0,
            undersample_iterations: 100,
            folds: 5,
        }
    }
}

impl ForestConfig {
    pub fn features_per_split(&self, d: usize) -> usize {
        self.max_features.unwrap_or_else(|| (d as f64).sqrt().floor() as usize).clamp(1, d.max(1))
    }

    fn validate(&self) -> Result<(), PredictError> {
        if self.n_trees == 0 {
            return Err(PredictError::InvalidConfig("n_trees must be >= 1".into()));
        }
        if self.folds < 2 {
            return Err(PredictError::InvalidConfig("folds must be >= 2".into()));
        }
        if self.undersample_iterations == 0 {
            return Err(PredictError::InvalidConfig("undersample_iterations must be >= 1".into()));
        }
        Ok(())
    }
}
