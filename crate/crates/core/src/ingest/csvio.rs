use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::Path;

use super::{
    ContributionEvent, CovariateDef, CovariateKind, CovariateSchema, CovariateValue, Dataset,
    IngestError, LoadOptions, MissingPolicy, ProjectRecord, Provenance, Timestamp,
    CONTRIBUTION_COLUMNS, RESERVED_PROJECT_COLUMNS,
};

pub fn load_schema(path: &Path) -> Result<CovariateSchema, IngestError> {
    let text = fs::read_to_string(path).map_err(|source| IngestError::Io { path: path.into(), source })?;
    let defs: Vec<CovariateDef> = serde_json::from_str(&text)
        .map_err(|e| IngestError::InvalidSchema { path: path.into(), message: e.to_string() })?;
    CovariateSchema::new(defs)
}

fn reader(path: &Path) -> Result<csv::Reader<fs::File>, IngestError> {
    let file = fs::File::open(path).map_err(|source| IngestError::Io { path: path.into(), source })?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file))
}

fn file_label(path: &Path) -> String {
    path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default()
}

struct RowContext<'a> {
    file: &'a str,
    line: u64,
}

impl RowContext<'_> {
    fn malformed(&self, column: &str, message: impl Into<String>) -> IngestError {
        IngestError::MalformedRow {
            file: self.file.to_string(),
            line: self.line,
            column: column.to_string(),
            message: message.into(),
        }
    }

    fn timestamp(&self, column: &str, raw: &str) -> Result<Timestamp, IngestError> {
        Timestamp::parse(raw).ok_or_else(|| self.malformed(column, format!("`{raw}` is not an ISO-8601 time")))
    }

    fn number(&self, column: &str, raw: &str) -> Result<f64, IngestError> {
        raw.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| self.malformed(column, format!("`{raw}` is not a number")))
    }
}

fn column_positions(headers: &csv::StringRecord, required: &[&str], file: &str) -> Result<Vec<usize>, IngestError> {
    required
        .iter()
        .map(|name| {
            headers
                .iter()
                .position(|h| h == *name)
                .ok_or_else(|| IngestError::SchemaMismatch(format!("{file}: missing column `{name}`")))
        })
        .collect()
}

/// Loads `projects.csv`, `contributions.csv` and the JSON schema sidecar into
/// a validated [`Dataset`].
pub fn load_dataset(
    projects_path: &Path,
    contributions_path: &Path,
    schema_path: &Path,
    options: &LoadOptions,
) -> Result<Dataset, IngestError> {
    let schema = load_schema(schema_path)?;
    let (projects, skipped) = read_projects(projects_path, &schema, options)?;
    let known: HashMap<&str, Timestamp> = projects.iter().map(|p| (p.project_id.as_str(), p.posted_at)).collect();
    let contributions = read_contributions(contributions_path, &known, &skipped)?;
    let provenance = Provenance {
        source: format!("{} + {}", projects_path.display(), contributions_path.display()),
        loaded_at: Some(chrono::Utc::now().format("%Y-%m-%dT%H:%M:%SZ").to_string()),
        seed: None,
    };
    Dataset::new(schema, projects, contributions, provenance)
}

fn read_projects(
    path: &Path,
    schema: &CovariateSchema,
    options: &LoadOptions,
) -> Result<(Vec<ProjectRecord>, HashSet<String>), IngestError> {
    let file = file_label(path);
    let mut rdr = reader(path)?;
    let headers = rdr.headers().map_err(|source| IngestError::Csv { path: path.into(), source })?.clone();
    let reserved = column_positions(&headers, &RESERVED_PROJECT_COLUMNS, &file)?;

    let mut covariate_cols = vec![None; schema.len()];
    for (col, name) in headers.iter().enumerate() {
        if RESERVED_PROJECT_COLUMNS.contains(&name) {
            continue;
        }
        let Some(k) = schema.position(name) else {
            return Err(IngestError::SchemaMismatch(format!("{file}: undeclared column `{name}`")));
        };
        if covariate_cols[k].replace(col).is_some() {
            return Err(IngestError::SchemaMismatch(format!("{file}: column `{name}` appears twice")));
        }
    }
    let covariate_cols: Vec<usize> = covariate_cols
        .into_iter()
        .zip(&schema.covariates)
        .map(|(col, def)| {
            col.ok_or_else(|| IngestError::SchemaMismatch(format!("{file}: declared covariate `{}` missing", def.name)))
        })
        .collect::<Result<_, _>>()?;

    let mut projects = Vec::new();
    let mut gaps: Vec<Vec<usize>> = Vec::new();
    let mut skipped = HashSet::new();
    for record in rdr.records() {
        let record = record.map_err(|source| IngestError::Csv { path: path.into(), source })?;
        let ctx = RowContext { file: &file, line: record.position().map_or(0, |p| p.line()) };
        let field = |i: usize| record.get(reserved[i]).unwrap_or("");

        let project_id = field(0).to_string();
        if project_id.is_empty() {
            return Err(ctx.malformed("project_id", "empty id"));
        }
        if options.exclude_ids.contains(&project_id) {
            skipped.insert(project_id);
            continue;
        }
        let posted_at = ctx.timestamp("posted_at", field(1))?;
        let deadline_at = match field(2) {
            "" => None,
            raw => Some(ctx.timestamp("deadline_at", raw)?),
        };
        let goal_amount = ctx.number("goal_amount", field(3))?;
        let funded = match field(4) {
            "" => None,
            "1" | "true" | "TRUE" | "True" => Some(true),
            "0" | "false" | "FALSE" | "False" => Some(false),
            raw => return Err(ctx.malformed("funded", format!("`{raw}` is not 0/1"))),
        };

        let mut covariates = Vec::with_capacity(schema.len());
        let mut missing = Vec::new();
        for (k, (def, &col)) in schema.covariates.iter().zip(&covariate_cols).enumerate() {
            let raw = record.get(col).unwrap_or("");
            let value = if raw.is_empty() || raw.eq_ignore_ascii_case("na") {
                missing.push(k);
                match def.kind {
                    CovariateKind::Numeric => CovariateValue::Numeric(0.0),
                    CovariateKind::Categorical => CovariateValue::Categorical(String::new()),
                }
            } else {
                match def.kind {
                    CovariateKind::Numeric => CovariateValue::Numeric(ctx.number(&def.name, raw)?),
                    CovariateKind::Categorical => CovariateValue::Categorical(raw.to_string()),
                }
            };
            covariates.push(value);
        }
        if !missing.is_empty() && options.missing == MissingPolicy::Drop {
            log::debug!("dropping project `{project_id}`: missing covariates");
            skipped.insert(project_id);
            continue;
        }
        projects.push(ProjectRecord { project_id, posted_at, deadline_at, goal_amount, funded, covariates });
        gaps.push(missing);
    }

    if gaps.iter().any(|g| !g.is_empty()) {
        impute(schema, &mut projects, &gaps);
    }
    if !skipped.is_empty() {
        log::info!("{file}: skipped {} projects (excluded or missing covariates)", skipped.len());
    }
    Ok((projects, skipped))
}

/// Median for numeric columns, mode (smallest level on ties) for categorical.
fn impute(schema: &CovariateSchema, projects: &mut [ProjectRecord], gaps: &[Vec<usize>]) {
    for (k, def) in schema.covariates.iter().enumerate() {
        let observed = projects.iter().zip(gaps).filter(|(_, g)| !g.contains(&k)).map(|(p, _)| &p.covariates[k]);
        let fill = match def.kind {
            CovariateKind::Numeric => {
                let mut vals: Vec<f64> = observed.filter_map(CovariateValue::as_numeric).collect();
                if vals.is_empty() {
                    continue;
                }
                vals.sort_by(f64::total_cmp);
                let m = vals.len();
                let median = if m % 2 == 1 { vals[m / 2] } else { 0.5 * (vals[m / 2 - 1] + vals[m / 2]) };
                CovariateValue::Numeric(median)
            }
            CovariateKind::Categorical => {
                let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
                for v in observed.filter_map(CovariateValue::as_category) {
                    *counts.entry(v).or_default() += 1;
                }
                let Some((level, _)) = counts.iter().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0))) else {
                    continue;
                };
                CovariateValue::Categorical(level.to_string())
            }
        };
        for (p, g) in projects.iter_mut().zip(gaps) {
            if g.contains(&k) {
                p.covariates[k] = fill.clone();
            }
        }
    }
}

fn read_contributions(
    path: &Path,
    known: &HashMap<&str, Timestamp>,
    skipped: &HashSet<String>,
) -> Result<Vec<ContributionEvent>, IngestError> {
    let file = file_label(path);
    let mut rdr = reader(path)?;
    let headers = rdr.headers().map_err(|source| IngestError::Csv { path: path.into(), source })?.clone();
    let cols = column_positions(&headers, &CONTRIBUTION_COLUMNS, &file)?;
    if let Some(extra) = headers.iter().find(|h| !CONTRIBUTION_COLUMNS.contains(h)) {
        return Err(IngestError::SchemaMismatch(format!("{file}: undeclared column `{extra}`")));
    }

    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|source| IngestError::Csv { path: path.into(), source })?;
        let line = record.position().map_or(0, |p| p.line());
        let ctx = RowContext { file: &file, line };
        let field = |i: usize| record.get(cols[i]).unwrap_or("");

        let project_id = field(0);
        if skipped.contains(project_id) {
            continue;
        }
        let Some(&posted_at) = known.get(project_id) else {
            return Err(IngestError::UnknownProject { project_id: project_id.to_string(), line: Some(line) });
        };
        let timestamp = ctx.timestamp("timestamp", field(2))?;
        let amount = ctx.number("amount", field(3))?;
        if amount < 0.0 {
            return Err(ctx.malformed("amount", format!("negative amount {amount}")));
        }
        if timestamp < posted_at {
            return Err(IngestError::TemporalViolation {
                project_id: project_id.to_string(),
                message: format!("line {line}: contribution at {timestamp} precedes posting at {posted_at}"),
            });
        }
        out.push(ContributionEvent {
            project_id: project_id.to_string(),
            funder_id: field(1).to_string(),
            timestamp,
            amount,
        });
    }
    Ok(out)
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> IngestError + '_ {
    move |source| IngestError::Csv { path: path.into(), source }
}

/// Writes `projects.csv`, `contributions.csv` and `schema.json` into `dir`.
pub fn write_dataset(d: &Dataset, dir: &Path) -> Result<(), IngestError> {
    fs::create_dir_all(dir).map_err(|source| IngestError::Io { path: dir.into(), source })?;

    let path = dir.join("projects.csv");
    let mut w = csv::Writer::from_path(&path).map_err(csv_err(&path))?;
    let mut header: Vec<&str> = RESERVED_PROJECT_COLUMNS.to_vec();
    header.extend(d.schema().names());
    w.write_record(&header).map_err(csv_err(&path))?;
    for p in d.projects() {
        let mut row = vec![
            p.project_id.clone(),
            p.posted_at.to_string(),
            p.deadline_at.map(|t| t.to_string()).unwrap_or_default(),
            p.goal_amount.to_string(),
            match p.funded {
                Some(true) => "1".into(),
                Some(false) => "0".into(),
                None => String::new(),
            },
        ];
        for v in &p.covariates {
            row.push(match v {
                CovariateValue::Numeric(x) => x.to_string(),
                CovariateValue::Categorical(s) => s.clone(),
            });
        }
        w.write_record(&row).map_err(csv_err(&path))?;
    }
    w.flush().map_err(|source| IngestError::Io { path: path.clone(), source })?;

    let path = dir.join("contributions.csv");
    let mut w = csv::Writer::from_path(&path).map_err(csv_err(&path))?;
    w.write_record(CONTRIBUTION_COLUMNS).map_err(csv_err(&path))?;
    for c in d.all_contributions() {
        w.write_record([
            c.project_id.as_str(),
            c.funder_id.as_str(),
            &c.timestamp.to_string(),
            &c.amount.to_string(),
        ])
        .map_err(csv_err(&path))?;
    }
    w.flush().map_err(|source| IngestError::Io { path: path.clone(), source })?;

    let path = dir.join("schema.json");
    let json = serde_json::to_string_pretty(d.schema()).expect("schema serializes");
    fs::write(&path, json + "\n").map_err(|source| IngestError::Io { path, source })
}
