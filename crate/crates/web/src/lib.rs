//! WebAssembly bindings for a small interactive tour of crowdlens: simulate a
//! market and inspect its feature table, run a dip test on pasted values, and
//! estimate the matched effect of appeal on funding.
//!
//! Each export returns a JSON string. The same operations are exposed as
//! plain Rust functions in [`ops`] so they can be tested natively.

use wasm_bindgen::prelude::*;

pub mod ops {
    use std::collections::BTreeMap;

    use crowdlens::cem::{coarsen, satt_for_feature, BinOverride, MatchingUnits, SattConfig};
    use crowdlens::features::{build_feature_matrix, summarize, FeatureConfig, Include};
    use crowdlens::ingest::{CovariateKind, Dataset};
    use crowdlens::report::outcome_table;
    use crowdlens::stats::{correlate_with_outcome, dip_test, histogram};
    use crowdlens::synth::{generate_market, GroundTruth, MarketSpec};
    use crowdlens::CrowdFeature;
    use serde_json::{json, Value};

    const MAX_PROJECTS: usize = 20_000;

    fn market(n_projects: usize, seed: u64, appeal_effect: f64) -> Result<(Dataset, GroundTruth), String> {
        if !(20..=MAX_PROJECTS).contains(&n_projects) {
            return Err(format!("projects must be between 20 and {MAX_PROJECTS}"));
        }
        let mut spec = MarketSpec { n_projects, seed, ..Default::default() };
        spec.effects.appeal = appeal_effect;
        generate_market(&spec).map_err(|e| e.to_string())
    }

    /// Generates a market and returns its funded versus failed table with
    /// correlations and per-feature histograms.
    pub fn simulate(n_projects: usize, seed: u64, appeal_effect: f64) -> Result<Value, String> {
        let (d, truth) = market(n_projects, seed, appeal_effect)?;
        let build = build_feature_matrix(&d, Include::Crowd, &FeatureConfig::default()).map_err(|e| e.to_string())?;
        let summary = summarize(&build.crowd, &build.outcomes);
        let correlations = correlate_with_outcome(&build.matrix, &build.labels()).map_err(|e| e.to_string())?;
        let histograms: BTreeMap<&str, _> = CrowdFeature::ALL
            .iter()
            .map(|&f| (f.name(), histogram(&build.crowd.iter().map(|c| c.get(f)).collect::<Vec<_>>(), None)))
            .collect();
        Ok(json!({
            "n_projects": build.matrix.n_rows(),
            "n_contributions": d.n_contributions(),
            "funded_pct": summary.funded_pct,
            "table": outcome_table(&summary, &correlations),
            "histograms": histograms,
            "planted_effects": truth.effects,
        }))
    }

    /// Parses numbers separated by whitespace, commas or semicolons.
    pub fn parse_values(text: &str) -> Result<Vec<f64>, String> {
        text.split(|c: char| c.is_whitespace() || c == ',' || c == ';')
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<f64>().map_err(|_| format!("not a number: `{t}`")))
            .collect()
    }

    /// Dip test of unimodality with a bootstrap p-value, plus a histogram.
    pub fn dip(text: &str, reps: usize, seed: u64) -> Result<Value, String> {
        let x = parse_values(text)?;
        let result = dip_test(&x, reps, seed).map_err(|e| e.to_string())?;
        Ok(json!({ "result": result, "histogram": histogram(&x, None) }))
    }

    /// Matched effect of high appeal on funding in a simulated market, next to
    /// the effect realized by the generator.
    pub fn appeal_effect(n_projects: usize, seed: u64, effect: f64, bins: usize, reps: usize) -> Result<Value, String> {
        let (d, truth) = market(n_projects, seed, effect)?;
        let build = build_feature_matrix(&d, Include::Crowd, &FeatureConfig::default()).map_err(|e| e.to_string())?;
        let names: Vec<String> = d.schema().names().map(String::from).collect();
        let overrides: BTreeMap<String, BinOverride> = names
            .iter()
            .filter(|n| d.schema().get(n).is_some_and(|c| c.kind == CovariateKind::Numeric))
            .map(|n| (n.clone(), BinOverride::Count(bins)))
            .collect();
        let plan = coarsen(&d, &names, &overrides).map_err(|e| e.to_string())?;
        let units = MatchingUnits::new(&d, &plan, build.matrix.project_ids()).map_err(|e| e.to_string())?;
        let appeal: Vec<f64> = build.crowd.iter().map(|c| c.appeal as f64).collect();
        let cfg = SattConfig { bootstrap_reps: reps, seed, ..Default::default() };
        let (estimate, matched) = satt_for_feature(&units, "appeal", &appeal, &cfg).map_err(|e| e.to_string())?;
        Ok(json!({
            "estimate": estimate,
            "summary": matched.summary_line("high-appeal"),
            "strata": matched.strata.len(),
            "realized_effect": truth.sample_satt.appeal,
        }))
    }
}

fn to_js(result: Result<serde_json::Value, String>) -> Result<String, JsValue> {
    result.map(|v| v.to_string()).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn simulate(n_projects: u32, seed: u32, appeal_effect: f64) -> Result<String, JsValue> {
    to_js(ops::simulate(n_projects as usize, seed.into(), appeal_effect))
}

#[wasm_bindgen]
pub fn dip(values: &str, reps: u32, seed: u32) -> Result<String, JsValue> {
    to_js(ops::dip(values, reps as usize, seed.into()))
}

#[wasm_bindgen]
pub fn appeal_effect(n_projects: u32, seed: u32, effect: f64, bins: u32, reps: u32) -> Result<String, JsValue> {
    to_js(ops::appeal_effect(n_projects as usize, seed.into(), effect, bins as usize, reps as usize))
}
