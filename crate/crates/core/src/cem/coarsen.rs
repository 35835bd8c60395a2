use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::CemError;
use crate::ingest::{CovariateKind, Dataset, ProjectRecord};
use crate::stats::sturges_bins;

/// Bin index of every matching covariate, in plan order.
pub type Signature = Vec<u32>;

/// User replacement for the default equal-width binning of a numeric
/// covariate. Serialized as a bare number (bin count) or an array
/// (interior cutpoints).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BinOverride {
    Count(usize),
    Cutpoints(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CoarseningRule {
    /// Bin `k` holds values in `[cutpoints[k-1], cutpoints[k])`; the outer
    /// bins are open-ended. `min`/`max` is the observed range.
    Numeric { cutpoints: Vec<f64>, min: f64, max: f64 },
    /// One bin per level, in sorted order.
    Categorical { levels: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateCoarsening {
    pub name: String,
    /// Position in the dataset schema.
    pub schema_index: usize,
    pub rule: CoarseningRule,
}

impl CovariateCoarsening {
    pub fn n_bins(&self) -> usize {
        match &self.rule {
            CoarseningRule::Numeric { cutpoints, .. } => cutpoints.len() + 1,
            CoarseningRule::Categorical { levels } => levels.len(),
        }
    }

    /// Bin edges `[min, cutpoints.., max]` of a numeric covariate.
    pub fn edges(&self) -> Option<Vec<f64>> {
        match &self.rule {
            CoarseningRule::Numeric { cutpoints, min, max } => {
                let mut e = Vec::with_capacity(cutpoints.len() + 2);
                e.push(min.min(cutpoints.first().copied().unwrap_or(*min)));
                e.extend(cutpoints);
                e.push(max.max(cutpoints.last().copied().unwrap_or(*max)));
                Some(e)
            }
            CoarseningRule::Categorical { .. } => None,
        }
    }

    fn bin(&self, p: &ProjectRecord) -> u32 {
        let v = &p.covariates[self.schema_index];
        match &self.rule {
            CoarseningRule::Numeric { cutpoints, .. } => {
                let x = v.as_numeric().unwrap_or(f64::NAN);
                cutpoints.partition_point(|&c| c <= x) as u32
            }
            // unseen levels share one extra bin
            CoarseningRule::Categorical { levels } => {
                let s = v.as_category().unwrap_or_default();
                levels.binary_search_by(|l| l.as_str().cmp(s)).unwrap_or(levels.len()) as u32
            }
        }
    }
}

/// How each matching covariate is cut into bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoarseningPlan {
    pub covariates: Vec<CovariateCoarsening>,
}

impl CoarseningPlan {
    pub fn signature(&self, p: &ProjectRecord) -> Signature {
        self.covariates.iter().map(|c| c.bin(p)).collect()
    }

    pub fn signatures(&self, d: &Dataset) -> Vec<Signature> {
        d.projects().iter().map(|p| self.signature(p)).collect()
    }

    pub fn names(&self) -> Vec<&str> {
        self.covariates.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn get(&self, name: &str) -> Option<&CovariateCoarsening> {
        self.covariates.iter().find(|c| c.name == name)
    }

    /// Number of cells of the full multivariate grid.
    pub fn n_cells(&self) -> f64 {
        self.covariates.iter().map(|c| c.n_bins() as f64).product()
    }
}

fn equal_width(min: f64, max: f64, bins: usize) -> Vec<f64> {
    if bins <= 1 || max <= min {
        return Vec::new();
    }
    let width = (max - min) / bins as f64;
    let mut cuts: Vec<f64> = (1..bins).map(|i| min + width * i as f64).collect();
    cuts.dedup();
    cuts.retain(|&c| c > min && c < max);
    cuts
}

/// Builds a coarsening plan: numeric covariates get Sturges equal-width bins
/// over their observed range unless overridden; categoricals map each level
/// to its own bin.
pub fn coarsen(
    d: &Dataset,
    covariates: &[String],
    overrides: &BTreeMap<String, BinOverride>,
) -> Result<CoarseningPlan, CemError> {
    if d.n_projects() == 0 {
        return Err(CemError::EmptyData);
    }
    if let Some(name) = overrides.keys().find(|k| !covariates.contains(k)) {
        return Err(CemError::UnknownCovariate(name.clone()));
    }
    let default_bins = sturges_bins(d.n_projects());
    let mut plan = Vec::with_capacity(covariates.len());
    for name in covariates {
        let idx = d.schema().position(name).ok_or_else(|| CemError::UnknownCovariate(name.clone()))?;
        let def = &d.schema().covariates[idx];
        let rule = match def.kind {
            CovariateKind::Numeric => {
                let values = d.projects().iter().filter_map(|p| p.covariates[idx].as_numeric());
                let (min, max) =
                    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
                let cutpoints = match overrides.get(name) {
                    None => equal_width(min, max, default_bins),
                    Some(BinOverride::Count(0)) => {
                        return Err(CemError::InvalidInput(format!("`{name}`: bin count must be >= 1")))
                    }
                    Some(BinOverride::Count(k)) => equal_width(min, max, *k),
                    Some(BinOverride::Cutpoints(c)) => {
                        if c.iter().any(|x| !x.is_finite()) || c.windows(2).any(|w| w[0] >= w[1]) {
                            return Err(CemError::InvalidInput(format!(
                                "`{name}`: cutpoints must be finite and strictly increasing"
                            )));
                        }
                        c.clone()
                    }
                };
                CoarseningRule::Numeric { cutpoints, min, max }
            }
            CovariateKind::Categorical => {
                if overrides.contains_key(name) {
                    return Err(CemError::InvalidInput(format!("`{name}` is categorical and cannot be re-binned")));
                }
                let levels: BTreeSet<&str> = d.projects().iter().filter_map(|p| p.covariates[idx].as_category()).collect();
                CoarseningRule::Categorical { levels: levels.into_iter().map(str::to_owned).collect() }
            }
        };
        plan.push(CovariateCoarsening { name: name.clone(), schema_index: idx, rule });
    }
    Ok(CoarseningPlan { covariates: plan })
}
