use std::collections::BTreeMap;

use crowdlens::cem::{
    coarsen, satt_all_features, satt_for_feature, BinOverride, CemError, MatchingUnits, SattConfig,
};
use crowdlens::features::{build_feature_matrix, FeatureConfig, Include};
use crowdlens::ingest::{CovariateKind, Dataset};
use crowdlens::synth::{generate_market, FeatureValues, MarketSpec};

fn numeric_bins(d: &Dataset, count: usize) -> BTreeMap<String, BinOverride> {
    d.schema()
        .names()
        .filter(|n| d.schema().get(n).is_some_and(|c| c.kind == CovariateKind::Numeric))
        .map(|n| (n.to_string(), BinOverride::Count(count)))
        .collect()
}

fn covariates(d: &Dataset) -> Vec<String> {
    d.schema().names().map(String::from).collect()
}

#[test]
fn null_effect_averages_to_zero() {
    let mut total = 0.0;
    let seeds = 20;
    for seed in 0..seeds {
        let spec = MarketSpec { n_projects: 20_000, seed, effects: FeatureValues::default(), ..Default::default() };
        let (d, _) = generate_market(&spec).unwrap();
        let b = build_feature_matrix(&d, Include::Crowd, &FeatureConfig::default()).unwrap();
        let plan = coarsen(&d, &covariates(&d), &numeric_bins(&d, 4)).unwrap();
        let units = MatchingUnits::new(&d, &plan, b.matrix.project_ids()).unwrap();
        let appeal: Vec<f64> = b.crowd.iter().map(|c| c.appeal as f64).collect();
        let cfg = SattConfig { bootstrap_reps: 2, seed, ..Default::default() };
        total += satt_for_feature(&units, "appeal", &appeal, &cfg).unwrap().0.estimate;
    }
    let mean = total / seeds as f64;
    assert!(mean.abs() <= 0.03, "mean estimate {mean}");
}

#[test]
fn all_features_report_planted_and_null_effects() {
    // independent crowd drivers, so engagement carries no effect of appeal
    let spec = MarketSpec {
        n_projects: 10_000,
        seed: 12,
        quality_loading: 0.0,
        effects: FeatureValues { appeal: 0.2, ..Default::default() },
        ..Default::default()
    };
    let (d, _) = generate_market(&spec).unwrap();
    let b = build_feature_matrix(&d, Include::Crowd, &FeatureConfig::default()).unwrap();
    let plan = coarsen(&d, &covariates(&d), &numeric_bins(&d, 4)).unwrap();
    let cfg = SattConfig { bootstrap_reps: 300, seed: 1, ..Default::default() };
    let rows = satt_all_features(&d, &b, &plan, &cfg).unwrap();
    assert_eq!(rows.len(), 5);
    let get = |f: &str| rows.iter().find(|r| r.feature == f).and_then(|r| r.estimate.clone()).unwrap();
    let appeal = get("appeal");
    assert!(appeal.significant && appeal.ci_lower > 0.0, "appeal {appeal:?}");
    let engagement = get("engagement");
    assert!(!engagement.significant, "engagement [{}, {}]", engagement.ci_lower, engagement.ci_upper);

    // identical inputs give identical strata, pairs and intervals
    let again = satt_all_features(&d, &b, &plan, &cfg).unwrap();
    assert_eq!(rows, again);
    let one = SattConfig { one_to_one: true, ..cfg.clone() };
    let (x, y) = (satt_all_features(&d, &b, &plan, &one).unwrap(), satt_all_features(&d, &b, &plan, &one).unwrap());
    assert_eq!(x, y);
    assert!(x.iter().all(|r| r.matched.as_ref().is_some_and(|m| m.pairs.is_some())));
}

#[test]
fn constant_treatment_is_rejected() {
    let (d, _) = generate_market(&MarketSpec { n_projects: 200, seed: 1, ..Default::default() }).unwrap();
    let b = build_feature_matrix(&d, Include::Crowd, &FeatureConfig::default()).unwrap();
    let plan = coarsen(&d, &covariates(&d), &numeric_bins(&d, 2)).unwrap();
    let units = MatchingUnits::new(&d, &plan, b.matrix.project_ids()).unwrap();
    let flat = vec![1.0; units.ids.len()];
    let err = satt_for_feature(&units, "flat", &flat, &SattConfig::default()).unwrap_err();
    assert_eq!(err, CemError::NoTreatmentVariation);
}

#[test]
fn unknown_covariate_is_named() {
    let (d, _) = generate_market(&MarketSpec { n_projects: 50, seed: 1, ..Default::default() }).unwrap();
    let err = coarsen(&d, &["nope".to_string()], &BTreeMap::new()).unwrap_err();
    assert_eq!(err, CemError::UnknownCovariate("nope".into()));
}
