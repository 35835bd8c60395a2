//! Outcome correlations and distribution-shape diagnostics.

mod correlation;
mod dip;
mod quantile;

use thiserror::Error;

pub use correlation::{correlate_with_outcome, pearson, significance_stars, CorrelationResult, CorrelationRow};
pub use dip::{dip_statistic, dip_test, dip_test_against, histogram, sturges_bins, DipResult, DipVerdict, Histogram, UniformDipNull};
pub use quantile::{quantile, quantile_sorted};

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("sequences differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least {min} observations, got {n}")]
    TooFewPoints { n: usize, min: usize },
    #[error("input is constant")]
    ConstantInput,
    #[error("all values are identical; the dip is undefined")]
    DegenerateConstant,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
