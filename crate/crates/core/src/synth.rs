//! Synthetic crowdfunding markets with planted effects.
//!
//! Every crowd feature has its own latent driver, mixing a shared project
//! quality, private noise and (for confounding) the project covariates.
//! Funding is drawn from
//! `p = clamp(sigmoid(intercept + sum coef * z) + sum effect_k * T_k, 0, 1)`
//! where `z` are centred covariates and `T_k` flags projects whose realized
//! crowd feature `k` exceeds the treatment quantile.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use rand::Rng as _;
use rand_distr::{Distribution, Gamma, LogNormal, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{extract_crowd_features, CrowdFeature, FeatureConfig};
use crate::ingest::{
    write_dataset, ContributionEvent, CovariateDef, CovariateSchema, CovariateValue, Dataset, IngestError,
    ProjectRecord, Provenance, Timestamp, SECONDS_PER_DAY,
};
use crate::rng;
use crate::stats::quantile;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid market spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// One value per crowd feature.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureValues {
    pub appeal: f64,
    pub momentum: f64,
    pub variation: f64,
    pub latency: f64,
    pub engagement: f64,
}

impl FeatureValues {
    pub fn splat(v: f64) -> Self {
        FeatureValues { appeal: v, momentum: v, variation: v, latency: v, engagement: v }
    }

    pub fn get(&self, f: CrowdFeature) -> f64 {
        self.as_array()[f as usize]
    }

    pub fn as_array(&self) -> [f64; 5] {
        [self.appeal, self.momentum, self.variation, self.latency, self.engagement]
    }

    fn from_array(a: [f64; 5]) -> Self {
        FeatureValues { appeal: a[0], momentum: a[1], variation: a[2], latency: a[3], engagement: a[4] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CovariateDomain {
    /// Uniform on `[min, max]`, rounded to integers when `integer`.
    Numeric {
        min: f64,
        max: f64,
        #[serde(default)]
        integer: bool,
    },
    /// Uniform over the levels.
    Categorical { levels: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthCovariate {
    pub name: String,
    #[serde(flatten)]
    pub domain: CovariateDomain,
    /// Log-odds effect on funding per unit of the centred covariate.
    #[serde(default)]
    pub outcome_coef: f64,
    /// Shift of every crowd driver per unit of the centred covariate.
    #[serde(default)]
    pub crowd_coef: f64,
}

impl SynthCovariate {
    pub fn numeric(name: &str, min: f64, max: f64) -> Self {
        SynthCovariate {
            name: name.into(),
            domain: CovariateDomain::Numeric { min, max, integer: false },
            outcome_coef: 0.0,
            crowd_coef: 0.0,
        }
    }

    pub fn categorical(name: &str, levels: &[&str]) -> Self {
        SynthCovariate {
            name: name.into(),
            domain: CovariateDomain::Categorical { levels: levels.iter().map(|s| s.to_string()).collect() },
            outcome_coef: 0.0,
            crowd_coef: 0.0,
        }
    }

    pub fn with_coefs(mut self, outcome_coef: f64, crowd_coef: f64) -> Self {
        self.outcome_coef = outcome_coef;
        self.crowd_coef = crowd_coef;
        self
    }
}

/// Contribution arrival process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArrivalSpec {
    /// Mean number of contributions beyond the first.
    pub base_rate: f64,
    /// Log-scale spread of the contribution rate per unit of the appeal driver.
    pub rate_spread: f64,
    /// Chance a contribution comes from a funder who already backed the project.
    pub repeat_prob: f64,
    /// Baseline chance of an immediate burst of funding after posting.
    pub burst_prob: f64,
    /// Burst onsets are uniform on `[0, burst_max]` of the window.
    pub burst_max: f64,
    /// Delayed onsets are uniform on this share of the window.
    pub delayed_onset: (f64, f64),
    /// Typical share of the remaining window spanned by contributions.
    pub span_mean: f64,
    /// Gamma shape of inter-arrival gaps at a zero momentum driver.
    pub gap_shape: f64,
    /// Log-scale spread of the gap shape per unit of the momentum driver.
    pub shape_spread: f64,
}

impl Default for ArrivalSpec {
    fn default() -> Self {
        ArrivalSpec {
            base_rate: 12.0,
            rate_spread: 0.8,
            repeat_prob: 0.1,
            burst_prob: 0.5,
            burst_max: 0.05,
            delayed_onset: (0.35, 0.9),
            span_mean: 0.5,
            gap_shape: 1.5,
            shape_spread: 0.8,
        }
    }
}

/// Log-normal contribution amounts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AmountSpec {
    pub log_mean: f64,
    /// Log-scale sd ranges over `[log_sd_min, log_sd_max]` with the
    /// variation driver.
    pub log_sd_min: f64,
    pub log_sd_max: f64,
}

impl Default for AmountSpec {
    fn default() -> Self {
        AmountSpec { log_mean: 3.5, log_sd_min: 0.2, log_sd_max: 1.4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MarketSpec {
    pub n_projects: usize,
    /// First posting date (UNIX seconds).
    pub start: i64,
    /// Projects are posted uniformly over this many days.
    pub posting_days: f64,
    /// Campaign windows are uniform on this range of days.
    pub window_days: (f64, f64),
    pub goal_log_mean: f64,
    pub goal_log_sd: f64,
    pub covariates: Vec<SynthCovariate>,
    pub arrivals: ArrivalSpec,
    pub amounts: AmountSpec,
    /// Loading of every crowd driver on the shared project quality, in [0, 1].
    pub quality_loading: f64,
    /// Probability-scale funding effect of each binarized crowd feature.
    pub effects: FeatureValues,
    pub treatment_quantile: f64,
    pub outcome_intercept: f64,
    /// Chance the outcome is replaced by a fair coin flip.
    pub outcome_noise: f64,
    pub seed: u64,
}

impl Default for MarketSpec {
    fn default() -> Self {
        MarketSpec {
            n_projects: 2000,
            start: 1_577_836_800, // 2020-01-01
            posting_days: 365.0,
            window_days: (30.0, 60.0),
            goal_log_mean: 8.0,
            goal_log_sd: 0.7,
            covariates: vec![
                SynthCovariate::numeric("amount", 1000.0, 35000.0).with_coefs(-0.6, 0.3),
                SynthCovariate::numeric("interest_rate", 0.05, 0.35).with_coefs(-0.4, -0.2),
                SynthCovariate::numeric("debt_to_income", 0.0, 1.0).with_coefs(-0.5, 0.0),
                SynthCovariate {
                    name: "prosper_score".into(),
                    domain: CovariateDomain::Numeric { min: 1.0, max: 11.0, integer: true },
                    outcome_coef: 0.8,
                    crowd_coef: 0.4,
                },
                SynthCovariate::categorical("credit_grade", &["A", "B", "C", "D", "E"]).with_coefs(-0.3, -0.2),
            ],
            arrivals: ArrivalSpec::default(),
            amounts: AmountSpec::default(),
            quality_loading: 0.5,
            effects: FeatureValues { appeal: 0.15, momentum: 0.05, variation: -0.05, latency: -0.1, engagement: 0.0 },
            treatment_quantile: 0.5,
            outcome_intercept: -0.2,
            outcome_noise: 0.02,
            seed: 0,
        }
    }
}

impl MarketSpec {
    /// No crowd effects and no confounding: outcomes are independent of
    /// every crowd feature.
    pub fn null(n_projects: usize, seed: u64) -> Self {
        let mut s = MarketSpec { n_projects, seed, effects: FeatureValues::default(), ..Default::default() };
        for c in &mut s.covariates {
            c.crowd_coef = 0.0;
        }
        s
    }

    /// Large, aligned crowd effects: funding is nearly determined by the
    /// crowd features, which share most of their variation.
    pub fn strong(n_projects: usize, seed: u64) -> Self {
        MarketSpec {
            n_projects,
            seed,
            quality_loading: 0.98,
            arrivals: ArrivalSpec { base_rate: 30.0, ..Default::default() },
            effects: FeatureValues::splat(0.35),
            outcome_intercept: -12.0,
            outcome_noise: 0.0,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidSpec(m));
        let prob = |x: f64| (0.0..=1.0).contains(&x);
        if self.n_projects == 0 {
            return bad("n_projects must be >= 1".into());
        }
        if !(self.window_days.0 > 0.0 && self.window_days.1 >= self.window_days.0) {
            return bad("window_days must be a positive, ordered range".into());
        }
        if !(self.posting_days >= 0.0 && self.goal_log_sd >= 0.0) {
            return bad("posting_days and goal_log_sd must be non-negative".into());
        }
        let a = &self.arrivals;
        for (name, v) in [("repeat_prob", a.repeat_prob), ("burst_prob", a.burst_prob), ("outcome_noise", self.outcome_noise)]
        {
            if !prob(v) {
                return bad(format!("{name} must lie in [0, 1]"));
            }
        }
        if !(a.burst_max > 0.0 && a.burst_max <= 1.0) {
            return bad("burst_max must lie in (0, 1]".into());
        }
        let (lo, hi) = a.delayed_onset;
        if !(prob(lo) && prob(hi) && lo <= hi && hi < 1.0) {
            return bad("delayed_onset must be an ordered range within [0, 1)".into());
        }
        if !(a.span_mean > 0.0 && a.span_mean < 1.0) {
            return bad("span_mean must lie in (0, 1)".into());
        }
        if !(a.base_rate >= 0.0 && a.rate_spread >= 0.0 && a.gap_shape > 0.0 && a.shape_spread >= 0.0) {
            return bad("arrival rates, spreads and shapes must be non-negative (gap_shape positive)".into());
        }
        if !(self.amounts.log_sd_min >= 0.0 && self.amounts.log_sd_max >= self.amounts.log_sd_min) {
            return bad("amount log sd range must be non-negative and ordered".into());
        }
        if !prob(self.quality_loading) {
            return bad("quality_loading must lie in [0, 1]".into());
        }
        if self.effects.as_array().iter().any(|e| !(-1.0..=1.0).contains(e)) {
            return bad("effects must lie in [-1, 1]".into());
        }
        if !(self.treatment_quantile > 0.0 && self.treatment_quantile < 1.0) {
            return bad("treatment_quantile must lie in (0, 1)".into());
        }
        let mut names = HashSet::new();
        for c in &self.covariates {
            if !names.insert(c.name.as_str()) {
                return bad(format!("covariate `{}` declared twice", c.name));
            }
            match &c.domain {
                CovariateDomain::Numeric { min, max, .. } if !(min.is_finite() && max.is_finite() && min <= max) => {
                    return bad(format!("covariate `{}` needs a finite, ordered range", c.name))
                }
                CovariateDomain::Categorical { levels }
                    if levels.is_empty() || levels.iter().collect::<HashSet<_>>().len() != levels.len() =>
                {
                    return bad(format!("covariate `{}` needs distinct levels", c.name))
                }
                _ => {}
            }
        }
        Ok(())
    }

    fn schema(&self) -> Result<CovariateSchema, SynthError> {
        let defs = self
            .covariates
            .iter()
            .map(|c| match c.domain {
                CovariateDomain::Numeric { .. } => CovariateDef::numeric(c.name.clone()),
                CovariateDomain::Categorical { .. } => CovariateDef::categorical(c.name.clone()),
            })
            .collect();
        CovariateSchema::new(defs).map_err(|e| SynthError::InvalidSpec(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateTruth {
    pub name: String,
    pub outcome_coef: f64,
    pub crowd_coef: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectTruth {
    pub project_id: String,
    pub quality: f64,
    pub funding_probability: f64,
}

/// What the generator planted. Kept apart from the dataset files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub seed: u64,
    pub effects: FeatureValues,
    pub covariates: Vec<CovariateTruth>,
    pub outcome_intercept: f64,
    pub outcome_noise: f64,
    pub treatment_quantile: f64,
    /// Realized feature value above which a project counts as treated.
    pub thresholds: FeatureValues,
    /// Mean over treated projects of the funding-probability change caused
    /// by each feature's treatment.
    pub sample_satt: FeatureValues,
    pub projects: Vec<ProjectTruth>,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Covariate values of one project and their centred scores.
fn draw_covariates(spec: &MarketSpec, g: &mut rng::Rng) -> (Vec<CovariateValue>, Vec<f64>) {
    let mut values = Vec::with_capacity(spec.covariates.len());
    let mut z = Vec::with_capacity(spec.covariates.len());
    for c in &spec.covariates {
        match &c.domain {
            CovariateDomain::Numeric { min, max, integer } => {
                let raw = min + (max - min) * g.random::<f64>();
                let x = if *integer { raw.round() } else { (raw * 1e4).round() / 1e4 };
                z.push(if max > min { (x - min) / (max - min) - 0.5 } else { 0.0 });
                values.push(CovariateValue::Numeric(x));
            }
            CovariateDomain::Categorical { levels } => {
                let k = g.random_range(0..levels.len());
                z.push(if levels.len() > 1 { k as f64 / (levels.len() - 1) as f64 - 0.5 } else { 0.0 });
                values.push(CovariateValue::Categorical(levels[k].clone()));
            }
        }
    }
    (values, z)
}

struct Campaign {
    project: ProjectRecord,
    events: Vec<ContributionEvent>,
    quality: f64,
    linear: f64,
}

fn day_seconds(days: f64) -> i64 {
    (days * SECONDS_PER_DAY).floor() as i64
}

fn draw_campaign(spec: &MarketSpec, i: usize, id: String, next_funder: &mut u64) -> Campaign {
    let a = &spec.arrivals;
    let mut g = rng::rng_from(rng::derive_path(spec.seed, &[1, i as u64]));
    let (covariates, z) = draw_covariates(spec, &mut g);
    let confound: f64 = spec.covariates.iter().zip(&z).map(|(c, z)| c.crowd_coef * z).sum();
    let linear = spec.outcome_intercept + spec.covariates.iter().zip(&z).map(|(c, z)| c.outcome_coef * z).sum::<f64>();

    let quality: f64 = g.sample(StandardNormal);
    let private = (1.0 - spec.quality_loading * spec.quality_loading).sqrt();
    let mut driver = [0.0f64; 5];
    for d in driver.iter_mut() {
        let e: f64 = g.sample(StandardNormal);
        *d = spec.quality_loading * quality + private * e + confound;
    }
    let [d_appeal, d_momentum, d_variation, d_latency, d_engagement] = driver;

    let window = spec.window_days.0 + (spec.window_days.1 - spec.window_days.0) * g.random::<f64>();
    let posted = Timestamp::from_unix(spec.start + day_seconds(spec.posting_days * g.random::<f64>()));
    let deadline = posted.plus_seconds(day_seconds(window));
    let goal = LogNormal::new(spec.goal_log_mean, spec.goal_log_sd).expect("validated").sample(&mut g);

    // a higher latency driver makes a late start more likely
    let burst_p = match a.burst_prob {
        p if p <= 0.0 => 0.0,
        p if p >= 1.0 => 1.0,
        p => sigmoid(logit(p) - 1.5 * d_latency),
    };
    let onset = if g.random::<f64>() < burst_p {
        a.burst_max * g.random::<f64>()
    } else {
        a.delayed_onset.0 + (a.delayed_onset.1 - a.delayed_onset.0) * g.random::<f64>()
    };
    let remaining = (1.0 - onset) * window;
    let span = sigmoid(logit(a.span_mean) + d_engagement) * remaining;

    let rate = a.base_rate * (a.rate_spread * d_appeal - 0.5 * a.rate_spread * a.rate_spread).exp();
    let extra = if rate > 0.0 { Poisson::new(rate).expect("positive rate").sample(&mut g) as usize } else { 0 };
    let shape = a.gap_shape * (a.shape_spread * d_momentum).exp();
    let gamma = Gamma::new(shape, 1.0).expect("positive shape");
    let gaps: Vec<f64> = (0..extra).map(|_| gamma.sample(&mut g)).collect();
    let total: f64 = gaps.iter().sum();

    let sd = spec.amounts.log_sd_min + (spec.amounts.log_sd_max - spec.amounts.log_sd_min) * sigmoid(1.5 * d_variation);
    let amounts = LogNormal::new(spec.amounts.log_mean, sd).expect("validated");

    let first = onset * window;
    let mut offset = 0.0;
    let mut funders: Vec<u64> = Vec::new();
    let mut events = Vec::with_capacity(extra + 1);
    for k in 0..=extra {
        if k > 0 && total > 0.0 {
            offset += gaps[k - 1] / total * span;
        }
        let funder = if !funders.is_empty() && g.random::<f64>() < a.repeat_prob {
            funders[g.random_range(0..funders.len())]
        } else {
            *next_funder += 1;
            funders.push(*next_funder);
            *next_funder
        };
        let amount = ((amounts.sample(&mut g) * 100.0).round() / 100.0).max(1.0);
        events.push(ContributionEvent {
            project_id: id.clone(),
            funder_id: format!("f{funder:07}"),
            timestamp: posted.plus_seconds(day_seconds(first + offset)).min(deadline),
            amount,
        });
    }

    let project = ProjectRecord {
        project_id: id,
        posted_at: posted,
        deadline_at: Some(deadline),
        goal_amount: (goal * 100.0).round() / 100.0,
        funded: None,
        covariates,
    };
    Campaign { project, events, quality, linear }
}

/// Generates a market and the effects planted in it. Identical specs give
/// identical output.
pub fn generate_market(spec: &MarketSpec) -> Result<(Dataset, GroundTruth), SynthError> {
    spec.validate()?;
    let schema = spec.schema()?;
    let width = spec.n_projects.to_string().len().max(5);
    let mut next_funder = 0u64;
    let mut campaigns: Vec<Campaign> = (0..spec.n_projects)
        .map(|i| draw_campaign(spec, i, format!("p{i:0width$}"), &mut next_funder))
        .collect();

    let cfg = FeatureConfig::default();
    let features: Vec<[f64; 5]> = campaigns
        .iter()
        .map(|c| extract_crowd_features(&c.project, &c.events, &cfg).map(|v| v.values()))
        .collect::<Result<_, _>>()
        .map_err(|e| SynthError::InvalidSpec(e.to_string()))?;
    let mut thresholds = [0.0; 5];
    for (k, t) in thresholds.iter_mut().enumerate() {
        *t = quantile(&features.iter().map(|f| f[k]).collect::<Vec<_>>(), spec.treatment_quantile);
    }
    let effects = spec.effects.as_array();
    let prob = |linear: f64, treated: &[bool; 5]| -> f64 {
        let shift: f64 = (0..5).filter(|&k| treated[k]).map(|k| effects[k]).sum();
        let p = (sigmoid(linear) + shift).clamp(0.0, 1.0);
        (1.0 - spec.outcome_noise) * p + spec.outcome_noise * 0.5
    };

    let mut satt_sum = [0.0; 5];
    let mut satt_n = [0usize; 5];
    let mut truths = Vec::with_capacity(campaigns.len());
    for (i, (c, f)) in campaigns.iter_mut().zip(&features).enumerate() {
        let treated: [bool; 5] = std::array::from_fn(|k| f[k] > thresholds[k]);
        let p = prob(c.linear, &treated);
        for k in (0..5).filter(|&k| treated[k]) {
            let mut untreated = treated;
            untreated[k] = false;
            satt_sum[k] += p - prob(c.linear, &untreated);
            satt_n[k] += 1;
        }
        let u: f64 = rng::rng_from(rng::derive_path(spec.seed, &[2, i as u64])).random();
        c.project.funded = Some(u < p);
        truths.push(ProjectTruth { project_id: c.project.project_id.clone(), quality: c.quality, funding_probability: p });
    }

    let truth = GroundTruth {
        seed: spec.seed,
        effects: spec.effects,
        covariates: spec
            .covariates
            .iter()
            .map(|c| CovariateTruth { name: c.name.clone(), outcome_coef: c.outcome_coef, crowd_coef: c.crowd_coef })
            .collect(),
        outcome_intercept: spec.outcome_intercept,
        outcome_noise: spec.outcome_noise,
        treatment_quantile: spec.treatment_quantile,
        thresholds: FeatureValues::from_array(thresholds),
        sample_satt: FeatureValues::from_array(std::array::from_fn(|k| {
            if satt_n[k] > 0 {
                satt_sum[k] / satt_n[k] as f64
            } else {
                0.0
            }
        })),
        projects: truths,
    };
    let (projects, events): (Vec<_>, Vec<_>) = campaigns.into_iter().map(|c| (c.project, c.events)).unzip();
    let provenance = Provenance { source: "synthetic".into(), loaded_at: None, seed: Some(spec.seed) };
    let dataset = Dataset::new(schema, projects, events.into_iter().flatten().collect(), provenance)?;
    Ok((dataset, truth))
}

/// Writes the dataset files plus `ground_truth.json` into `dir`.
pub fn write_market(dataset: &Dataset, truth: &GroundTruth, dir: &Path) -> Result<(), SynthError> {
    write_dataset(dataset, dir)?;
    let mut json = serde_json::to_string_pretty(truth)?;
    json.push('\n');
    fs::write(dir.join("ground_truth.json"), json)?;
    Ok(())
}

/// Reads a JSON market spec.
pub fn load_spec(path: &Path) -> Result<MarketSpec, SynthError> {
    let spec: MarketSpec = serde_json::from_str(&fs::read_to_string(path)?)?;
    spec.validate()?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_project_count_and_valid_streams() {
        let spec = MarketSpec { n_projects: 500, ..Default::default() };
        let (d, truth) = generate_market(&spec).unwrap();
        assert_eq!(d.n_projects(), 500);
        assert_eq!(truth.projects.len(), 500);
        for (p, ev) in d.iter() {
            assert!(!ev.is_empty());
            assert!(ev.iter().all(|e| e.timestamp >= p.posted_at && Some(e.timestamp) <= p.deadline_at));
            assert!(p.funded.is_some());
        }
    }

    #[test]
    fn same_seed_same_market() {
        let spec = MarketSpec { n_projects: 50, seed: 3, ..Default::default() };
        let (a, ta) = generate_market(&spec).unwrap();
        let (b, tb) = generate_market(&spec).unwrap();
        assert!(a.same_content(&b));
        assert_eq!(ta, tb);
        let (c, _) = generate_market(&MarketSpec { seed: 4, ..spec }).unwrap();
        assert!(!a.same_content(&c));
    }

    #[test]
    fn invalid_specs() {
        let bad = [
            MarketSpec { n_projects: 0, ..Default::default() },
            MarketSpec { outcome_noise: 1.5, ..Default::default() },
            MarketSpec { effects: FeatureValues::splat(1.2), ..Default::default() },
        ];
        for s in bad {
            assert!(matches!(generate_market(&s), Err(SynthError::InvalidSpec(_))));
        }
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = MarketSpec::default();
        let json = serde_json::to_string(&spec).unwrap();
        assert_eq!(serde_json::from_str::<MarketSpec>(&json).unwrap(), spec);
        let partial: MarketSpec = serde_json::from_str(r#"{"n_projects": 10, "effects": {"appeal": 0.2}}"#).unwrap();
        assert_eq!(partial.effects.appeal, 0.2);
        assert_eq!(partial.effects.latency, 0.0);
    }
}
