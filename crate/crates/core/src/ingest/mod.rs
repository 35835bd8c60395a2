//! Loading, validation and indexing of project and contribution data.
//!
//! A [`Dataset`] is immutable once built. Every constructor path goes through
//! [`Dataset::new`], which enforces referential closure, temporal ordering and
//! per-project sorting of contributions.

mod csvio;
mod time;

use std::collections::{HashMap, HashSet};
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use csvio::{load_dataset, load_schema, write_dataset};
pub use time::{Timestamp, SECONDS_PER_DAY};

/// Columns of `projects.csv` that are not covariates.
pub const RESERVED_PROJECT_COLUMNS: [&str; 5] =
    ["project_id", "posted_at", "deadline_at", "goal_amount", "funded"];
pub const CONTRIBUTION_COLUMNS: [&str; 4] = ["project_id", "funder_id", "timestamp", "amount"];

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("invalid schema {path}: {message}")]
    InvalidSchema { path: PathBuf, message: String },
    #[error("{file}:{line}: malformed value in column `{column}`: {message}")]
    MalformedRow {
        file: String,
        line: u64,
        column: String,
        message: String,
    },
    #[error("contribution references unknown project `{project_id}`{}", line_suffix(*.line))]
    UnknownProject { project_id: String, line: Option<u64> },
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("temporal violation in project `{project_id}`: {message}")]
    TemporalViolation { project_id: String, message: String },
    #[error("duplicate project id `{0}`")]
    DuplicateProject(String),
    #[error("invalid project `{project_id}`: {message}")]
    InvalidProject { project_id: String, message: String },
}

fn line_suffix(line: Option<u64>) -> String {
    line.map(|l| format!(" (line {l})")).unwrap_or_default()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CovariateKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateDef {
    pub name: String,
    pub kind: CovariateKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
}

impl CovariateDef {
    pub fn numeric(name: impl Into<String>) -> Self {
        CovariateDef { name: name.into(), kind: CovariateKind::Numeric, unit: None }
    }

    pub fn categorical(name: impl Into<String>) -> Self {
        CovariateDef { name: name.into(), kind: CovariateKind::Categorical, unit: None }
    }
}

/// Ordered covariate declarations, serialized as a JSON array.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CovariateSchema {
    pub covariates: Vec<CovariateDef>,
}

impl CovariateSchema {
    pub fn new(covariates: Vec<CovariateDef>) -> Result<Self, IngestError> {
        let mut seen = HashSet::new();
        for def in &covariates {
            if RESERVED_PROJECT_COLUMNS.contains(&def.name.as_str()) {
                return Err(IngestError::SchemaMismatch(format!(
                    "covariate `{}` collides with a reserved column",
                    def.name
                )));
            }
            if !seen.insert(def.name.as_str()) {
                return Err(IngestError::SchemaMismatch(format!(
                    "covariate `{}` declared twice",
                    def.name
                )));
            }
        }
        Ok(CovariateSchema { covariates })
    }

    pub fn len(&self) -> usize {
        self.covariates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.covariates.is_empty()
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.covariates.iter().position(|c| c.name == name)
    }

    pub fn get(&self, name: &str) -> Option<&CovariateDef> {
        self.covariates.iter().find(|c| c.name == name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.covariates.iter().map(|c| c.name.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CovariateValue {
    Numeric(f64),
    Categorical(String),
}

impl CovariateValue {
    pub fn as_numeric(&self) -> Option<f64> {
        match self {
            CovariateValue::Numeric(v) => Some(*v),
            CovariateValue::Categorical(_) => None,
        }
    }

    pub fn as_category(&self) -> Option<&str> {
        match self {
            CovariateValue::Categorical(s) => Some(s),
            CovariateValue::Numeric(_) => None,
        }
    }

    fn kind(&self) -> CovariateKind {
        match self {
            CovariateValue::Numeric(_) => CovariateKind::Numeric,
            CovariateValue::Categorical(_) => CovariateKind::Categorical,
        }
    }
}

/// One timestamped funding act.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContributionEvent {
    pub project_id: String,
    pub funder_id: String,
    pub timestamp: Timestamp,
    pub amount: f64,
}

/// A fundraising campaign. `covariates` follows the dataset schema order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectRecord {
    pub project_id: String,
    pub posted_at: Timestamp,
    pub deadline_at: Option<Timestamp>,
    pub goal_amount: f64,
    /// `None` while the campaign outcome is unresolved.
    pub funded: Option<bool>,
    pub covariates: Vec<CovariateValue>,
}

impl ProjectRecord {
    pub fn covariate(&self, schema: &CovariateSchema, name: &str) -> Option<&CovariateValue> {
        schema.position(name).and_then(|i| self.covariates.get(i))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loaded_at: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MissingPolicy {
    /// Drop projects with any missing covariate, together with their contributions.
    #[default]
    Drop,
    /// Fill numeric gaps with the column median and categorical gaps with the mode.
    Impute,
}

#[derive(Debug, Clone, Default)]
pub struct LoadOptions {
    pub missing: MissingPolicy,
    /// Projects (and their contributions) to skip entirely.
    pub exclude_ids: HashSet<String>,
}

/// Validated, immutable collection of projects and their contribution streams.
#[derive(Debug, Clone)]
pub struct Dataset {
    schema: CovariateSchema,
    projects: Vec<ProjectRecord>,
    contributions: Vec<Vec<ContributionEvent>>,
    index: HashMap<String, usize>,
    provenance: Provenance,
}

impl Dataset {
    /// Validates and indexes projects and contributions. Contributions are
    /// sorted per project by timestamp; ties keep their input order.
    pub fn new(
        schema: CovariateSchema,
        projects: Vec<ProjectRecord>,
        contributions: Vec<ContributionEvent>,
        provenance: Provenance,
    ) -> Result<Self, IngestError> {
        let mut index = HashMap::with_capacity(projects.len());
        for (i, p) in projects.iter().enumerate() {
            validate_project(&schema, p)?;
            if index.insert(p.project_id.clone(), i).is_some() {
                return Err(IngestError::DuplicateProject(p.project_id.clone()));
            }
        }
        let mut streams: Vec<Vec<ContributionEvent>> = vec![Vec::new(); projects.len()];
        for c in contributions {
            let Some(&i) = index.get(&c.project_id) else {
                return Err(IngestError::UnknownProject { project_id: c.project_id, line: None });
            };
            check_contribution(&projects[i], &c)?;
            streams[i].push(c);
        }
        for s in &mut streams {
            s.sort_by_key(|c| c.timestamp);
        }
        Ok(Dataset { schema, projects, contributions: streams, index, provenance })
    }

    pub fn schema(&self) -> &CovariateSchema {
        &self.schema
    }

    pub fn projects(&self) -> &[ProjectRecord] {
        &self.projects
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn n_projects(&self) -> usize {
        self.projects.len()
    }

    pub fn n_contributions(&self) -> usize {
        self.contributions.iter().map(Vec::len).sum()
    }

    pub fn index_of(&self, project_id: &str) -> Option<usize> {
        self.index.get(project_id).copied()
    }

    pub fn project(&self, project_id: &str) -> Option<&ProjectRecord> {
        self.index_of(project_id).map(|i| &self.projects[i])
    }

    /// Contributions of the `i`-th project, ascending by timestamp.
    pub fn events(&self, i: usize) -> &[ContributionEvent] {
        &self.contributions[i]
    }

    pub fn events_of(&self, project_id: &str) -> Option<&[ContributionEvent]> {
        self.index_of(project_id).map(|i| self.events(i))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ProjectRecord, &[ContributionEvent])> {
        self.projects.iter().zip(self.contributions.iter().map(Vec::as_slice))
    }

    /// All contributions in project order, each stream in time order.
    pub fn all_contributions(&self) -> impl Iterator<Item = &ContributionEvent> {
        self.contributions.iter().flatten()
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    /// Keeps the projects for which `keep` returns true.
    pub fn retain(&self, mut keep: impl FnMut(&ProjectRecord, &[ContributionEvent]) -> bool) -> Dataset {
        let mut projects = Vec::new();
        let mut contributions = Vec::new();
        let mut index = HashMap::new();
        for (p, events) in self.iter() {
            if keep(p, events) {
                index.insert(p.project_id.clone(), projects.len());
                projects.push(p.clone());
                contributions.push(events.to_vec());
            }
        }
        Dataset {
            schema: self.schema.clone(),
            projects,
            contributions,
            index,
            provenance: self.provenance.clone(),
        }
    }

    /// Field-wise equality of schema, projects and contribution streams.
    /// Provenance is ignored.
    pub fn same_content(&self, other: &Dataset) -> bool {
        self.schema == other.schema
            && self.projects == other.projects
            && self.contributions == other.contributions
    }
}

fn validate_project(schema: &CovariateSchema, p: &ProjectRecord) -> Result<(), IngestError> {
    let invalid = |message: String| IngestError::InvalidProject { project_id: p.project_id.clone(), message };
    if !(p.goal_amount > 0.0 && p.goal_amount.is_finite()) {
        return Err(invalid(format!("goal_amount must be positive, got {}", p.goal_amount)));
    }
    if let Some(deadline) = p.deadline_at {
        if deadline <= p.posted_at {
            return Err(IngestError::TemporalViolation {
                project_id: p.project_id.clone(),
                message: format!("deadline {deadline} is not after posting {}", p.posted_at),
            });
        }
    }
    if p.covariates.len() != schema.len() {
        return Err(IngestError::SchemaMismatch(format!(
            "project `{}` has {} covariates, schema declares {}",
            p.project_id,
            p.covariates.len(),
            schema.len()
        )));
    }
    for (value, def) in p.covariates.iter().zip(&schema.covariates) {
        if value.kind() != def.kind {
            return Err(IngestError::SchemaMismatch(format!(
                "project `{}`: covariate `{}` should be {:?}",
                p.project_id, def.name, def.kind
            )));
        }
        if let CovariateValue::Numeric(v) = value {
            if !v.is_finite() {
                return Err(invalid(format!("covariate `{}` is not finite", def.name)));
            }
        }
    }
    Ok(())
}

fn check_contribution(p: &ProjectRecord, c: &ContributionEvent) -> Result<(), IngestError> {
    if !(c.amount >= 0.0 && c.amount.is_finite()) {
        return Err(IngestError::InvalidProject {
            project_id: p.project_id.clone(),
            message: format!("contribution amount must be non-negative, got {}", c.amount),
        });
    }
    if c.timestamp < p.posted_at {
        return Err(IngestError::TemporalViolation {
            project_id: p.project_id.clone(),
            message: format!("contribution at {} precedes posting at {}", c.timestamp, p.posted_at),
        });
    }
    Ok(())
}

/// Result of [`filter_completed`].
#[derive(Debug, Clone)]
pub struct FilterOutcome {
    pub dataset: Dataset,
    pub kept: usize,
    pub dropped: usize,
    pub warning: Option<String>,
}

/// Keeps only projects with a resolved outcome. A project is resolved when its
/// funded flag is present and, if `as_of` is given, its deadline (when it has
/// one) is not later than `as_of`.
pub fn filter_completed(d: &Dataset, as_of: Option<Timestamp>) -> FilterOutcome {
    let dataset = d.retain(|p, _| {
        p.funded.is_some()
            && match (as_of, p.deadline_at) {
                (Some(now), Some(deadline)) => deadline <= now,
                _ => true,
            }
    });
    let kept = dataset.n_projects();
    let dropped = d.n_projects() - kept;
    let warning = (kept == 0).then(|| {
        let msg = format!("no resolved projects remain ({dropped} active projects dropped)");
        log::warn!("{msg}");
        msg
    });
    FilterOutcome { dataset, kept, dropped, warning }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn project(id: &str, funded: Option<bool>) -> ProjectRecord {
        ProjectRecord {
            project_id: id.into(),
            posted_at: Timestamp::from_unix(0),
            deadline_at: Some(Timestamp::from_unix(864_000)),
            goal_amount: 100.0,
            funded,
            covariates: vec![],
        }
    }

    fn event(id: &str, t: i64) -> ContributionEvent {
        ContributionEvent {
            project_id: id.into(),
            funder_id: "f".into(),
            timestamp: Timestamp::from_unix(t),
            amount: 1.0,
        }
    }

    fn dataset(projects: Vec<ProjectRecord>, events: Vec<ContributionEvent>) -> Dataset {
        Dataset::new(CovariateSchema::default(), projects, events, Provenance::default()).unwrap()
    }

    #[test]
    fn sorts_streams_stably() {
        let mut a = event("p", 50);
        a.funder_id = "first".into();
        let mut b = event("p", 50);
        b.funder_id = "second".into();
        let d = dataset(vec![project("p", Some(true))], vec![event("p", 90), a, b, event("p", 10)]);
        let ts: Vec<i64> = d.events(0).iter().map(|e| e.timestamp.unix()).collect();
        assert_eq!(ts, vec![10, 50, 50, 90]);
        assert_eq!(d.events(0)[1].funder_id, "first");
        assert_eq!(d.events(0)[2].funder_id, "second");
    }

    #[test]
    fn rejects_unknown_project_and_early_contribution() {
        let err = Dataset::new(
            CovariateSchema::default(),
            vec![project("p", None)],
            vec![event("zzz", 1)],
            Provenance::default(),
        )
        .unwrap_err();
        assert!(matches!(err, IngestError::UnknownProject { ref project_id, .. } if project_id == "zzz"));

        let err = Dataset::new(
            CovariateSchema::default(),
            vec![project("p", None)],
            vec![event("p", -3600)],
            Provenance::default(),
        )
        .unwrap_err();
        assert!(matches!(err, IngestError::TemporalViolation { .. }));
    }

    #[test]
    fn rejects_bad_deadline_and_goal() {
        let mut p = project("p", None);
        p.deadline_at = Some(p.posted_at);
        assert!(matches!(
            Dataset::new(CovariateSchema::default(), vec![p], vec![], Provenance::default()),
            Err(IngestError::TemporalViolation { .. })
        ));
        let mut p = project("p", None);
        p.goal_amount = 0.0;
        assert!(Dataset::new(CovariateSchema::default(), vec![p], vec![], Provenance::default()).is_err());
    }

    #[test]
    fn schema_rejects_duplicates_and_reserved_names() {
        assert!(CovariateSchema::new(vec![CovariateDef::numeric("a"), CovariateDef::numeric("a")]).is_err());
        assert!(CovariateSchema::new(vec![CovariateDef::numeric("funded")]).is_err());
    }

    #[test]
    fn filter_completed_cases() {
        let d = dataset(
            vec![project("a", Some(true)), project("b", Some(false)), project("c", None)],
            vec![event("a", 1), event("c", 2)],
        );
        let out = filter_completed(&d, None);
        assert_eq!((out.kept, out.dropped), (2, 1));
        assert!(out.dataset.project("c").is_none());
        assert!(out.warning.is_none());

        let resolved = dataset(vec![project("a", Some(true)), project("b", Some(false))], vec![]);
        let out = filter_completed(&resolved, None);
        assert!(out.dataset.same_content(&resolved));

        let active = dataset(vec![project("a", None), project("b", None)], vec![]);
        let out = filter_completed(&active, None);
        assert_eq!(out.dataset.n_projects(), 0);
        assert!(out.warning.is_some());

        // a deadline in the future keeps the campaign open
        let out = filter_completed(&resolved, Some(Timestamp::from_unix(1000)));
        assert_eq!(out.kept, 0);
    }
}
