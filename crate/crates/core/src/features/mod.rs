//! Per-project crowd features, feature matrices and summary statistics.

mod matrix;
mod summary;

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{ContributionEvent, ProjectRecord, SECONDS_PER_DAY};

pub use matrix::{build_feature_matrix, normalize_minmax, Column, ColumnGroup, FeatureMatrix, Include, MatrixBuild};
pub use summary::{format_mean_std, summarize, FeatureStats, FeatureSummary, GroupStats};

#[derive(Debug, Error, PartialEq)]
pub enum FeatureError {
    #[error("project `{0}` has no contributions")]
    EmptyEventStream(String),
    #[error("project `{0}` has a deadline at or before its posting time")]
    NonPositiveWindow(String),
}

/// The five crowd features, in their canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CrowdFeature {
    Appeal,
    Momentum,
    Variation,
    Latency,
    Engagement,
}

impl CrowdFeature {
    pub const ALL: [CrowdFeature; 5] = [
        CrowdFeature::Appeal,
        CrowdFeature::Momentum,
        CrowdFeature::Variation,
        CrowdFeature::Latency,
        CrowdFeature::Engagement,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CrowdFeature::Appeal => "appeal",
            CrowdFeature::Momentum => "momentum",
            CrowdFeature::Variation => "variation",
            CrowdFeature::Latency => "latency",
            CrowdFeature::Engagement => "engagement",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name().eq_ignore_ascii_case(name))
    }
}

impl fmt::Display for CrowdFeature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Orientation of the inter-arrival coefficient of variation used for momentum.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CvOrientation {
    /// Mean gap divided by the standard deviation of gaps.
    #[default]
    MeanOverStd,
    /// Standard deviation of gaps divided by the mean gap.
    StdOverMean,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default)]
pub struct FeatureConfig {
    pub momentum_orientation: CvOrientation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrowdFeatureVector {
    /// Number of unique funders.
    pub appeal: u64,
    /// Dispersion ratio of the gaps between consecutive contributions.
    pub momentum: f64,
    /// Coefficient of variation of contribution amounts.
    pub variation: f64,
    /// Delay of the first contribution: a fraction of the campaign window
    /// when `latency_scaled`, otherwise raw days.
    pub latency: f64,
    /// Days between first and last contribution.
    pub engagement: f64,
    pub latency_scaled: bool,
    /// Gaps were perfectly regular, so momentum was set to 0.
    pub momentum_saturated: bool,
}

impl CrowdFeatureVector {
    pub fn get(&self, feature: CrowdFeature) -> f64 {
        match feature {
            CrowdFeature::Appeal => self.appeal as f64,
            CrowdFeature::Momentum => self.momentum,
            CrowdFeature::Variation => self.variation,
            CrowdFeature::Latency => self.latency,
            CrowdFeature::Engagement => self.engagement,
        }
    }

    pub fn values(&self) -> [f64; 5] {
        CrowdFeature::ALL.map(|f| self.get(f))
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Two-pass sample (n - 1) standard deviation; 0 for fewer than two values.
fn sample_std(xs: &[f64], mean: f64) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

/// Computes the five crowd features of one project.
///
/// The result does not depend on the order of `events`.
pub fn extract_crowd_features(
    project: &ProjectRecord,
    events: &[ContributionEvent],
    cfg: &FeatureConfig,
) -> Result<CrowdFeatureVector, FeatureError> {
    if events.is_empty() {
        return Err(FeatureError::EmptyEventStream(project.project_id.clone()));
    }
    let window = match project.deadline_at {
        Some(deadline) if deadline <= project.posted_at => {
            return Err(FeatureError::NonPositiveWindow(project.project_id.clone()))
        }
        Some(deadline) => Some((deadline.unix() - project.posted_at.unix()) as f64),
        None => None,
    };

    let appeal = events.iter().map(|e| e.funder_id.as_str()).collect::<HashSet<_>>().len() as u64;

    let mut times: Vec<i64> = events.iter().map(|e| e.timestamp.unix()).collect();
    times.sort_unstable();
    let first = times[0];
    let last = times[times.len() - 1];

    let gaps: Vec<f64> = times.windows(2).map(|w| (w[1] - w[0]) as f64 / SECONDS_PER_DAY).collect();
    let mut momentum_saturated = false;
    let momentum = if gaps.len() < 2 {
        0.0
    } else {
        let m = mean(&gaps);
        let s = sample_std(&gaps, m);
        match cfg.momentum_orientation {
            CvOrientation::MeanOverStd if s == 0.0 => {
                momentum_saturated = true;
                log::debug!("project `{}`: perfectly regular gaps, momentum set to 0", project.project_id);
                0.0
            }
            CvOrientation::MeanOverStd => m / s,
            CvOrientation::StdOverMean if m == 0.0 => 0.0,
            CvOrientation::StdOverMean => s / m,
        }
    };

    let mut amounts: Vec<f64> = events.iter().map(|e| e.amount).collect();
    amounts.sort_by(f64::total_cmp);
    let variation = if amounts.len() < 2 {
        0.0
    } else {
        let m = mean(&amounts);
        if m == 0.0 {
            0.0
        } else {
            sample_std(&amounts, m) / m
        }
    };

    let delay = (first - project.posted_at.unix()) as f64;
    let (latency, latency_scaled) = match window {
        Some(w) => ((delay / w).clamp(0.0, 1.0), true),
        None => (delay / SECONDS_PER_DAY, false),
    };
    let engagement = (last - first) as f64 / SECONDS_PER_DAY;

    Ok(CrowdFeatureVector { appeal, momentum, variation, latency, engagement, latency_scaled, momentum_saturated })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::Timestamp;

    const DAY: i64 = 86_400;

    fn project(deadline_days: Option<i64>) -> ProjectRecord {
        ProjectRecord {
            project_id: "p".into(),
            posted_at: Timestamp::from_unix(1_000_000),
            deadline_at: deadline_days.map(|d| Timestamp::from_unix(1_000_000 + d * DAY)),
            goal_amount: 1.0,
            funded: Some(true),
            covariates: vec![],
        }
    }

    fn events(spec: &[(&str, f64, f64)]) -> Vec<ContributionEvent> {
        spec.iter()
            .map(|&(f, day, amount)| ContributionEvent {
                project_id: "p".into(),
                funder_id: f.into(),
                timestamp: Timestamp::from_unix(1_000_000 + (day * DAY as f64) as i64),
                amount,
            })
            .collect()
    }

    fn extract(p: &ProjectRecord, e: &[ContributionEvent]) -> CrowdFeatureVector {
        extract_crowd_features(p, e, &FeatureConfig::default()).unwrap()
    }

    #[test]
    fn duplicate_funder_and_zero_latency() {
        let f = extract(&project(Some(10)), &events(&[("A", 0.0, 1.0), ("B", 1.0, 1.0), ("A", 2.0, 1.0)]));
        assert_eq!(f.appeal, 2);
        assert_eq!(f.latency, 0.0);
        assert!(f.latency_scaled);
    }

    #[test]
    fn momentum_mean_over_sample_std() {
        let e = events(&[("a", 0.0, 1.0), ("b", 1.0, 1.0), ("c", 3.0, 1.0), ("d", 6.0, 1.0)]);
        let f = extract(&project(Some(10)), &e);
        assert!((f.momentum - 2.0).abs() < 1e-12);
        let cfg = FeatureConfig { momentum_orientation: CvOrientation::StdOverMean };
        let g = extract_crowd_features(&project(Some(10)), &e, &cfg).unwrap();
        assert!((g.momentum - 0.5).abs() < 1e-12);
    }

    #[test]
    fn variation_of_amounts() {
        let f = extract(&project(Some(10)), &events(&[("a", 0.0, 10.0), ("b", 1.0, 20.0), ("c", 2.0, 30.0)]));
        assert!((f.variation - 0.5).abs() < 1e-12);
    }

    #[test]
    fn single_contribution_degenerates() {
        let f = extract(&project(Some(10)), &events(&[("a", 4.0, 5.0)]));
        assert_eq!(f.appeal, 1);
        assert_eq!(f.momentum, 0.0);
        assert_eq!(f.variation, 0.0);
        assert!((f.latency - 0.4).abs() < 1e-12);
        assert_eq!(f.engagement, 0.0);
    }

    #[test]
    fn engagement_in_days() {
        let f = extract(&project(Some(10)), &events(&[("a", 1.0, 1.0), ("b", 3.0, 1.0), ("c", 5.0, 1.0)]));
        assert_eq!(f.engagement, 4.0);
    }

    #[test]
    fn regular_gaps_saturate_momentum() {
        let f = extract(&project(Some(10)), &events(&[("a", 0.0, 1.0), ("b", 1.0, 1.0), ("c", 2.0, 1.0)]));
        assert_eq!(f.momentum, 0.0);
        assert!(f.momentum_saturated);
    }

    #[test]
    fn latency_clips_and_falls_back_to_days() {
        let late = events(&[("a", 12.0, 1.0)]);
        assert_eq!(extract(&project(Some(10)), &late).latency, 1.0);
        let f = extract(&project(None), &late);
        assert_eq!(f.latency, 12.0);
        assert!(!f.latency_scaled);
    }

    #[test]
    fn errors() {
        let cfg = FeatureConfig::default();
        assert_eq!(
            extract_crowd_features(&project(Some(10)), &[], &cfg),
            Err(FeatureError::EmptyEventStream("p".into()))
        );
        let mut p = project(Some(10));
        p.deadline_at = Some(p.posted_at);
        assert_eq!(
            extract_crowd_features(&p, &events(&[("a", 0.0, 1.0)]), &cfg),
            Err(FeatureError::NonPositiveWindow("p".into()))
        );
    }
}
