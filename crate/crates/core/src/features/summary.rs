use serde::{Deserialize, Serialize};

use super::{mean, sample_std, CrowdFeature, CrowdFeatureVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (0 when n < 2).
    pub std: f64,
}

impl GroupStats {
    fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let m = mean(values);
        Some(GroupStats { n: values.len(), mean: m, std: sample_std(values, m) })
    }

    /// `mean (std)` with three decimals.
    pub fn cell(&self) -> String {
        format_mean_std(self.mean, self.std)
    }
}

pub fn format_mean_std(mean: f64, std: f64) -> String {
    format!("{mean:.3} ({std:.3})")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    pub feature: CrowdFeature,
    pub overall: GroupStats,
    pub funded: Option<GroupStats>,
    pub failed: Option<GroupStats>,
}

/// Mean and standard deviation of each crowd feature, overall and by outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSummary {
    pub n_total: usize,
    pub n_funded: usize,
    pub n_failed: usize,
    /// Projects whose outcome is unresolved; they count only towards `overall`.
    pub n_unresolved: usize,
    /// Percentage of resolved projects that were funded.
    pub funded_pct: f64,
    pub failed_pct: f64,
    /// True when latency is expressed in raw days for at least one project.
    pub latency_raw_days: bool,
    pub features: Vec<FeatureStats>,
}

/// Summarizes crowd feature vectors; `outcomes` is aligned with `features`.
pub fn summarize(features: &[CrowdFeatureVector], outcomes: &[Option<bool>]) -> FeatureSummary {
    assert_eq!(features.len(), outcomes.len(), "one outcome per project");
    let n_funded = outcomes.iter().filter(|o| **o == Some(true)).count();
    let n_failed = outcomes.iter().filter(|o| **o == Some(false)).count();
    let resolved = n_funded + n_failed;
    let pct = |k: usize| if resolved == 0 { 0.0 } else { 100.0 * k as f64 / resolved as f64 };

    let stats = CrowdFeature::ALL
        .iter()
        .filter(|_| !features.is_empty())
        .map(|&f| {
            let pick = |want: Option<Option<bool>>| -> Vec<f64> {
                features
                    .iter()
                    .zip(outcomes)
                    .filter(|(_, o)| want.is_none_or(|w| **o == w))
                    .map(|(v, _)| v.get(f))
                    .collect()
            };
            FeatureStats {
                feature: f,
                overall: GroupStats::of(&pick(None)).expect("non-empty"),
                funded: GroupStats::of(&pick(Some(Some(true)))),
                failed: GroupStats::of(&pick(Some(Some(false)))),
            }
        })
        .collect();

    FeatureSummary {
        n_total: features.len(),
        n_funded,
        n_failed,
        n_unresolved: features.len() - resolved,
        funded_pct: pct(n_funded),
        failed_pct: pct(n_failed),
        latency_raw_days: features.iter().any(|v| !v.latency_scaled),
        features: stats,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vector(appeal: u64) -> CrowdFeatureVector {
        CrowdFeatureVector {
            appeal,
            momentum: 0.0,
            variation: 0.0,
            latency: 0.0,
            engagement: 0.0,
            latency_scaled: true,
            momentum_saturated: false,
        }
    }

    #[test]
    fn appeal_mean_and_sample_std() {
        let s = summarize(&[vector(1), vector(3)], &[Some(true), Some(false)]);
        let appeal = &s.features[0];
        assert_eq!(appeal.overall.mean, 2.0);
        assert!((appeal.overall.std - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(appeal.funded.unwrap().mean, 1.0);
        assert_eq!(appeal.failed.unwrap().mean, 3.0);
        assert_eq!(s.n_funded + s.n_failed + s.n_unresolved, s.n_total);
    }

    #[test]
    fn all_funded_has_no_failed_group() {
        let s = summarize(&[vector(1), vector(2)], &[Some(true), Some(true)]);
        assert!(s.features.iter().all(|f| f.failed.is_none()));
        assert_eq!((s.funded_pct, s.failed_pct), (100.0, 0.0));
    }

    #[test]
    fn cell_layout() {
        assert_eq!(format_mean_std(19.041, 40.318), "19.041 (40.318)");
        let g = GroupStats { n: 3, mean: 0.4581, std: 0.41949 };
        assert_eq!(g.cell(), "0.458 (0.419)");
    }
}
