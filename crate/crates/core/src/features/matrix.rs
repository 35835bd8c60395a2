use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{extract_crowd_features, CrowdFeature, CrowdFeatureVector, FeatureConfig, FeatureError};
use crate::ingest::{CovariateKind, CovariateValue, Dataset};

/// Which side of the crowd / project partition a column belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnGroup {
    Crowd,
    Project,
}

impl ColumnGroup {
    pub fn name(self) -> &'static str {
        match self {
            ColumnGroup::Crowd => "crowd",
            ColumnGroup::Project => "project",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Include {
    Crowd,
    Project,
    Both,
}

impl Include {
    pub fn crowd(self) -> bool {
        matches!(self, Include::Crowd | Include::Both)
    }

    pub fn project(self) -> bool {
        matches!(self, Include::Project | Include::Both)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub group: ColumnGroup,
    /// Covariate a one-hot indicator was derived from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    /// Observed range of the current values.
    pub min: f64,
    pub max: f64,
    /// Original (min, max) used by min-max scaling, once normalized.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaling: Option<(f64, f64)>,
}

/// Row-major numeric design matrix, one row per project.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    project_ids: Vec<String>,
    columns: Vec<Column>,
    data: Vec<f64>,
}

impl FeatureMatrix {
    /// Builds a matrix from named row-major data. Observed ranges are computed.
    pub fn from_rows(project_ids: Vec<String>, columns: Vec<(String, ColumnGroup)>, rows: Vec<Vec<f64>>) -> Self {
        assert_eq!(project_ids.len(), rows.len(), "one id per row");
        let d = columns.len();
        let mut data = Vec::with_capacity(rows.len() * d);
        for r in &rows {
            assert_eq!(r.len(), d, "row width");
            data.extend_from_slice(r);
        }
        let columns = columns
            .into_iter()
            .map(|(name, group)| Column { name, group, source: None, min: 0.0, max: 0.0, scaling: None })
            .collect();
        let mut m = FeatureMatrix { project_ids, columns, data };
        m.refresh_ranges();
        m
    }

    fn refresh_ranges(&mut self) {
        for j in 0..self.n_cols() {
            let (lo, hi) = self
                .column_values(j)
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
            let col = &mut self.columns[j];
            if lo <= hi {
                col.min = lo;
                col.max = hi;
            } else {
                col.min = 0.0;
                col.max = 0.0;
            }
        }
    }

    pub fn n_rows(&self) -> usize {
        self.project_ids.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn project_ids(&self) -> &[String] {
        &self.project_ids
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column_names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    /// Indices of the columns in `group`.
    pub fn group_indices(&self, group: ColumnGroup) -> Vec<usize> {
        (0..self.n_cols()).filter(|&j| self.columns[j].group == group).collect()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.n_cols();
        &self.data[i * d..(i + 1) * d]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n_cols() + j]
    }

    pub fn column_values(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        let d = self.n_cols();
        self.data.iter().skip(j).step_by(d.max(1)).copied()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.column_values(j).collect()
    }

    /// Keeps the listed columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> FeatureMatrix {
        let mut data = Vec::with_capacity(self.n_rows() * cols.len());
        for i in 0..self.n_rows() {
            let row = self.row(i);
            data.extend(cols.iter().map(|&j| row[j]));
        }
        FeatureMatrix {
            project_ids: self.project_ids.clone(),
            columns: cols.iter().map(|&j| self.columns[j].clone()).collect(),
            data,
        }
    }

    /// Appends a column, e.g. a noise or label-copy probe.
    pub fn with_column(&self, name: &str, group: ColumnGroup, values: &[f64]) -> FeatureMatrix {
        assert_eq!(values.len(), self.n_rows());
        let d = self.n_cols();
        let mut data = Vec::with_capacity(self.n_rows() * (d + 1));
        for (i, v) in values.iter().enumerate() {
            data.extend_from_slice(self.row(i));
            data.push(*v);
        }
        let mut columns = self.columns.clone();
        columns.push(Column { name: name.into(), group, source: None, min: 0.0, max: 0.0, scaling: None });
        let mut m = FeatureMatrix { project_ids: self.project_ids.clone(), columns, data };
        m.refresh_ranges();
        m
    }

    /// Applies the stored scaling of `self` to another matrix with the same
    /// columns (e.g. held-out rows). Values are not clipped.
    pub fn apply_scaling_to(&self, other: &FeatureMatrix) -> FeatureMatrix {
        assert_eq!(self.column_names(), other.column_names(), "column signature");
        let mut out = other.clone();
        let d = out.n_cols();
        for (j, col) in self.columns.iter().enumerate() {
            let Some((lo, hi)) = col.scaling else { continue };
            for i in 0..out.n_rows() {
                out.data[i * d + j] = scale(out.data[i * d + j], lo, hi);
            }
            out.columns[j].scaling = col.scaling;
        }
        out.refresh_ranges();
        out
    }
}

fn scale(x: f64, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        (x - lo) / (hi - lo)
    } else {
        0.0
    }
}

/// Min-max scales every column to [0, 1]; constant columns become 0.
/// The first scaling applied to a column is remembered for reuse.
pub fn normalize_minmax(m: &FeatureMatrix) -> FeatureMatrix {
    let mut out = m.clone();
    let d = out.n_cols();
    for j in 0..d {
        let (lo, hi) = (m.columns[j].min, m.columns[j].max);
        for i in 0..out.n_rows() {
            out.data[i * d + j] = scale(out.data[i * d + j], lo, hi);
        }
        if out.columns[j].scaling.is_none() {
            out.columns[j].scaling = Some((lo, hi));
        }
    }
    out.refresh_ranges();
    out
}

/// Output of [`build_feature_matrix`].
#[derive(Debug, Clone)]
pub struct MatrixBuild {
    pub matrix: FeatureMatrix,
    /// Crowd features aligned with the matrix rows.
    pub crowd: Vec<CrowdFeatureVector>,
    /// Funding outcomes aligned with the matrix rows.
    pub outcomes: Vec<Option<bool>>,
    /// Projects without contributions.
    pub dropped: Vec<String>,
    pub warnings: Vec<String>,
}

impl MatrixBuild {
    /// Resolved outcomes; panics if any row is unresolved.
    pub fn labels(&self) -> Vec<bool> {
        self.outcomes.iter().map(|o| o.expect("resolved outcome")).collect()
    }
}

/// Assembles crowd features and (one-hot encoded) project covariates.
/// Projects without contributions are dropped with a warning.
pub fn build_feature_matrix(d: &Dataset, include: Include, cfg: &FeatureConfig) -> Result<MatrixBuild, FeatureError> {
    let mut ids = Vec::new();
    let mut crowd = Vec::new();
    let mut outcomes = Vec::new();
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for (i, (p, events)) in d.iter().enumerate() {
        if events.is_empty() {
            dropped.push(p.project_id.clone());
            continue;
        }
        crowd.push(extract_crowd_features(p, events, cfg)?);
        ids.push(p.project_id.clone());
        outcomes.push(p.funded);
        kept.push(i);
    }

    let mut warnings = Vec::new();
    if !dropped.is_empty() {
        let msg = format!("{} projects without contributions were dropped", dropped.len());
        log::warn!("{msg}");
        warnings.push(msg);
    }
    let raw_latency = crowd.iter().filter(|c| !c.latency_scaled).count();
    if raw_latency > 0 {
        warnings.push(format!("{raw_latency} projects lack a deadline; their latency is in raw days"));
    }
    let saturated = crowd.iter().filter(|c| c.momentum_saturated).count();
    if saturated > 0 {
        warnings.push(format!("{saturated} projects had perfectly regular gaps; momentum set to 0"));
    }

    let mut columns: Vec<Column> = Vec::new();
    // Each encoder produces one value per kept project.
    let mut encoders: Vec<Box<dyn Fn(usize, usize) -> f64 + '_>> = Vec::new();
    let blank = |name: String, group: ColumnGroup, source: Option<String>| Column {
        name,
        group,
        source,
        min: 0.0,
        max: 0.0,
        scaling: None,
    };

    if include.crowd() {
        for f in CrowdFeature::ALL {
            columns.push(blank(f.name().to_string(), ColumnGroup::Crowd, None));
            let crowd = &crowd;
            encoders.push(Box::new(move |row, _| crowd[row].get(f)));
        }
    }
    if include.project() {
        let projects = d.projects();
        for (k, def) in d.schema().covariates.iter().enumerate() {
            match def.kind {
                CovariateKind::Numeric => {
                    columns.push(blank(def.name.clone(), ColumnGroup::Project, None));
                    encoders.push(Box::new(move |_, p| projects[p].covariates[k].as_numeric().unwrap_or(0.0)));
                }
                CovariateKind::Categorical => {
                    let levels: BTreeSet<&str> =
                        kept.iter().filter_map(|&p| projects[p].covariates[k].as_category()).collect();
                    for level in levels {
                        columns.push(blank(format!("{}={}", def.name, level), ColumnGroup::Project, Some(def.name.clone())));
                        let level = level.to_string();
                        encoders.push(Box::new(move |_, p| match &projects[p].covariates[k] {
                            CovariateValue::Categorical(v) if *v == level => 1.0,
                            _ => 0.0,
                        }));
                    }
                }
            }
        }
    }

    let n_cols = columns.len();
    let mut data = Vec::with_capacity(kept.len() * n_cols);
    for (row, &p) in kept.iter().enumerate() {
        data.extend(encoders.iter().map(|enc| enc(row, p)));
    }
    drop(encoders);
    let mut matrix = FeatureMatrix { project_ids: ids, columns, data };
    matrix.refresh_ranges();
    Ok(MatrixBuild { matrix, crowd, outcomes, dropped, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(cols: &[&[f64]]) -> FeatureMatrix {
        let n = cols[0].len();
        let rows = (0..n).map(|i| cols.iter().map(|c| c[i]).collect()).collect();
        FeatureMatrix::from_rows(
            (0..n).map(|i| format!("p{i}")).collect(),
            (0..cols.len()).map(|j| (format!("c{j}"), ColumnGroup::Crowd)).collect(),
            rows,
        )
    }

    #[test]
    fn minmax_examples() {
        let m = normalize_minmax(&matrix(&[&[2.0, 4.0, 6.0]]));
        assert_eq!(m.column(0), vec![0.0, 0.5, 1.0]);
        assert_eq!(m.columns()[0].scaling, Some((2.0, 6.0)));

        let m = normalize_minmax(&matrix(&[&[7.0, 7.0]]));
        assert_eq!(m.column(0), vec![0.0, 0.0]);

        let m = normalize_minmax(&matrix(&[&[0.0, 1.0]]));
        assert_eq!(m.column(0), vec![0.0, 1.0]);
    }

    #[test]
    fn scaling_reused_on_held_out_rows() {
        let train = normalize_minmax(&matrix(&[&[2.0, 6.0]]));
        let test = train.apply_scaling_to(&matrix(&[&[4.0, 8.0]]));
        assert_eq!(test.column(0), vec![0.5, 1.5]);
    }

    #[test]
    fn select_and_append() {
        let m = matrix(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let s = m.select_columns(&[1]);
        assert_eq!(s.column(0), vec![3.0, 4.0]);
        let w = m.with_column("extra", ColumnGroup::Project, &[9.0, 8.0]);
        assert_eq!(w.row(1), &[2.0, 4.0, 8.0]);
        assert_eq!(w.group_indices(ColumnGroup::Project), vec![2]);
        assert_eq!((w.columns()[2].min, w.columns()[2].max), (8.0, 9.0));
    }
}
