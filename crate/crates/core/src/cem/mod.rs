//! Coarsened exact matching on project covariates and the sample average
//! treatment effect on the treated (SATT) of each crowd feature.
//!
//! Treatment is a crowd feature binarized at a quantile (the median by
//! default); the outcome is funding; matching uses the project covariates
//! funders could observe.

mod coarsen;
mod logit;
mod matching;
mod satt;

use thiserror::Error;

pub use coarsen::{coarsen, BinOverride, CoarseningPlan, CoarseningRule, CovariateCoarsening, Signature};
pub use logit::{fit_logit, LogitError, LogitFit};
pub use matching::{l1_imbalance, l1_imbalance_weighted, match_strata, prune_one_to_one, MatchPair, MatchedSample, Stratum};
pub use satt::{
    binarize_treatment, covariate_design, estimate_satt, satt_all_features, satt_for_feature, FeatureSatt,
    MatchingUnits, SattConfig, SattEstimate,
};

#[derive(Debug, Error, PartialEq)]
pub enum CemError {
    #[error("unknown covariate `{0}`")]
    UnknownCovariate(String),
    #[error("no data to coarsen")]
    EmptyData,
    #[error("treated and control groups share no stratum")]
    NoCommonSupport,
    #[error("the {0} group is empty")]
    EmptyGroup(&'static str),
    #[error("treatment does not vary")]
    NoTreatmentVariation,
    #[error("logistic fit failed: {0}")]
    FitFailed(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}
