//! Crowd-dynamics analysis for crowdfunding contribution logs.
//!
//! The crate is organised as a pipeline:
//!
//! * [`ingest`] loads and validates project and contribution files.
//! * [`features`] derives the five per-project crowd features (appeal,
//!   momentum, variation, latency, engagement) and assembles feature matrices.
//! * [`stats`] holds the outcome correlations and the dip test of unimodality.
//! * [`predict`] trains random forests under balanced cross-validation and
//!   scores individual and grouped permutation importance.
//! * [`cem`] performs coarsened exact matching and estimates the average
//!   effect of each crowd feature on the treated.
//! * [`synth`] generates synthetic markets with planted effects.
//! * [`pipeline`] runs everything end to end and assembles an
//!   [`report::AnalysisReport`].

pub mod cem;
pub mod features;
pub mod ingest;
pub mod pipeline;
pub mod predict;
pub mod report;
pub mod rng;
pub mod stats;
pub mod synth;

pub use features::{CrowdFeature, CrowdFeatureVector, FeatureConfig, FeatureMatrix};
pub use ingest::{Dataset, LoadOptions};

/// Crate version embedded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
