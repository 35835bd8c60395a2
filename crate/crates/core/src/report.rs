//! The analysis report and its tabular renderings.
//!
//! Table 1 summarizes the crowd features, Table 2 sets funded and failed
//! group means beside the outcome correlations, Table 3 holds classifier
//! metrics, the importance rankings are ordered shares, and the effect table
//! lists one SATT estimate with its confidence interval per feature.

use serde::{Deserialize, Serialize};

use crate::cem::{CoarseningPlan, FeatureSatt, MatchPair};
use crate::features::{FeatureSummary, GroupStats, MatrixBuild};
use crate::ingest::CovariateSchema;
use crate::pipeline::PipelineConfig;
use crate::predict::{EvalReport, ImportanceReport};
use crate::stats::{CorrelationRow, DipResult, Histogram};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageState {
    Ok,
    /// Some outputs of the stage failed; the rest are reported.
    Partial,
    Failed,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageStatus {
    pub stage: String,
    pub state: StageState,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub source: String,
    pub seed: Option<u64>,
    pub schema: CovariateSchema,
    pub n_projects_loaded: usize,
    pub n_unresolved_dropped: usize,
    pub n_without_contributions: usize,
    /// Projects entering the analysis.
    pub n_projects: usize,
    pub n_contributions: usize,
}

/// One row of the outcome table: group means beside the correlation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeRow {
    pub feature: String,
    pub funded: Option<GroupStats>,
    pub failed: Option<GroupStats>,
    pub correlation: CorrelationRow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionRow {
    pub feature: String,
    pub dip: Option<DipResult>,
    pub error: Option<String>,
    pub histogram: Histogram,
}

/// Stage seeds derived from the master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageSeeds {
    pub dip: u64,
    pub forest: u64,
    pub importance: u64,
    pub satt: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchingInfo {
    pub plan: CoarseningPlan,
    /// Units eligible for matching (resolved outcome and contributions).
    pub n_units: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub seeds: StageSeeds,
    pub config: PipelineConfig,
    pub dataset: DatasetInfo,
    pub stages: Vec<StageStatus>,
    pub notes: Vec<String>,
    pub warnings: Vec<String>,
    pub feature_summary: Option<FeatureSummary>,
    pub outcome_table: Option<Vec<OutcomeRow>>,
    pub distributions: Option<Vec<DistributionRow>>,
    pub evaluation: Option<EvalReport>,
    pub importance: Option<ImportanceReport>,
    pub matching: Option<MatchingInfo>,
    pub satt: Option<Vec<FeatureSatt>>,
}

impl AnalysisReport {
    /// 0 when every enabled stage succeeded, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.stages.iter().all(|s| matches!(s.state, StageState::Ok | StageState::Skipped)) {
            0
        } else {
            2
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// One row per project: id, outcome and the five crowd features.
pub fn project_features_csv(build: &MatrixBuild) -> String {
    let rows = build.crowd.iter().enumerate().map(|(i, c)| {
        let funded = match build.outcomes[i] {
            Some(true) => "1".to_string(),
            Some(false) => "0".to_string(),
            None => String::new(),
        };
        let mut r = vec![build.matrix.project_ids()[i].clone(), funded, c.appeal.to_string()];
        r.extend([c.momentum, c.variation, c.latency, c.engagement].map(num));
        r.push(c.latency_scaled.to_string());
        r
    });
    csv_string(
        &["project_id", "funded", "appeal", "momentum", "variation", "latency", "engagement", "latency_scaled"],
        rows,
    )
}

/// Joins the feature summary and outcome correlations into Table 2 rows.
pub fn outcome_table(summary: &FeatureSummary, correlations: &[CorrelationRow]) -> Vec<OutcomeRow> {
    correlations
        .iter()
        .map(|c| {
            let stats = summary.features.iter().find(|f| f.feature.name() == c.feature);
            OutcomeRow {
                feature: c.feature.clone(),
                funded: stats.and_then(|s| s.funded),
                failed: stats.and_then(|s| s.failed),
                correlation: c.clone(),
            }
        })
        .collect()
}

fn csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

fn num(x: f64) -> String {
    format!("{x:.6}")
}

fn cell(g: Option<GroupStats>) -> String {
    g.map(|g| g.cell()).unwrap_or_else(|| "-".into())
}

pub fn feature_summary_csv(s: &FeatureSummary) -> String {
    let header = ["feature", "mean", "std", "funded_mean", "funded_std", "failed_mean", "failed_std"];
    let opt = |g: Option<GroupStats>, f: fn(GroupStats) -> f64| g.map(|g| num(f(g))).unwrap_or_default();
    csv_string(
        &header,
        s.features.iter().map(|f| {
            vec![
                f.feature.name().to_string(),
                num(f.overall.mean),
                num(f.overall.std),
                opt(f.funded, |g| g.mean),
                opt(f.funded, |g| g.std),
                opt(f.failed, |g| g.mean),
                opt(f.failed, |g| g.std),
            ]
        }),
    )
}

pub fn outcome_table_csv(rows: &[OutcomeRow]) -> String {
    let header = ["feature", "funded", "failed", "r", "p_value", "stars", "note"];
    csv_string(
        &header,
        rows.iter().map(|r| {
            vec![
                r.feature.clone(),
                cell(r.funded),
                cell(r.failed),
                r.correlation.r.map(num).unwrap_or_default(),
                r.correlation.p_value.map(|p| format!("{p:.6e}")).unwrap_or_default(),
                r.correlation.stars.clone(),
                r.correlation.note.clone().unwrap_or_default(),
            ]
        }),
    )
}

pub fn evaluation_csv(e: &EvalReport) -> String {
    let header = ["metric", "mean", "std"];
    let rows = [("accuracy", e.accuracy), ("precision", e.precision), ("recall", e.recall), ("f1", e.f1), ("auc", e.auc)];
    csv_string(&header, rows.iter().map(|(n, m)| vec![n.to_string(), num(m.mean), num(m.std)]))
}

pub fn importance_csv(r: &ImportanceReport) -> String {
    let header = ["rank", "feature", "group", "share", "raw", "raw_std"];
    let mut rows: Vec<Vec<String>> = r
        .ranking()
        .iter()
        .enumerate()
        .map(|(k, f)| {
            vec![(k + 1).to_string(), f.name.clone(), f.group.clone().unwrap_or_default(), num(f.share), num(f.raw), num(f.raw_std)]
        })
        .collect();
    rows.extend(r.groups.iter().map(|g| vec![String::new(), format!("[{}]", g.name), g.name.clone(), num(g.share), num(g.raw), num(g.raw_std)]));
    csv_string(&header, rows)
}

pub fn satt_csv(rows: &[FeatureSatt]) -> String {
    let header = ["feature", "estimate", "ci_lower", "ci_upper", "significant", "n_treated", "n_control", "error"];
    csv_string(
        &header,
        rows.iter().map(|r| match &r.estimate {
            Some(e) => vec![
                r.feature.clone(),
                num(e.estimate),
                num(e.ci_lower),
                num(e.ci_upper),
                e.significant.to_string(),
                e.n_treated.to_string(),
                e.n_control.to_string(),
                String::new(),
            ],
            None => {
                let mut v = vec![r.feature.clone()];
                v.extend(std::iter::repeat_n(String::new(), 6));
                v.push(r.error.clone().unwrap_or_default());
                v
            }
        }),
    )
}

pub fn pairs_csv(pairs: &[MatchPair]) -> String {
    csv_string(
        &["treated_id", "control_id", "distance"],
        pairs.iter().map(|p| vec![p.treated_id.clone(), p.control_id.clone(), num(p.distance)]),
    )
}

pub fn distributions_csv(rows: &[DistributionRow]) -> String {
    let header = ["feature", "dip", "p_value", "verdict", "n", "bootstrap_reps", "error"];
    csv_string(
        &header,
        rows.iter().map(|r| match &r.dip {
            Some(d) => vec![
                r.feature.clone(),
                num(d.dip),
                num(d.p_value),
                format!("{:?}", d.verdict).to_lowercase(),
                d.n.to_string(),
                d.bootstrap_reps.to_string(),
                String::new(),
            ],
            None => {
                let mut v = vec![r.feature.clone()];
                v.extend(std::iter::repeat_n(String::new(), 5));
                v.push(r.error.clone().unwrap_or_default());
                v
            }
        }),
    )
}

/// Histogram bins of every feature in long format.
pub fn histograms_csv(rows: &[DistributionRow]) -> String {
    csv_string(
        &["feature", "bin", "lower", "upper", "count"],
        rows.iter().flat_map(|r| {
            let h = &r.histogram;
            (0..h.counts.len()).map(move |k| {
                vec![r.feature.clone(), k.to_string(), num(h.edges[k]), num(h.edges[k + 1]), h.counts[k].to_string()]
            })
        }),
    )
}

fn md_table(out: &mut String, header: &[&str], rows: &[Vec<String>]) {
    out.push_str(&format!("| {} |\n", header.join(" | ")));
    out.push_str(&format!("|{}\n", "---|".repeat(header.len())));
    for r in rows {
        out.push_str(&format!("| {} |\n", r.join(" | ")));
    }
    out.push('\n');
}

/// Markdown rendering of the report tables.
pub fn render_markdown(r: &AnalysisReport) -> String {
    let mut out = format!("# Crowd dynamics analysis\n\n{} {} | seed {} | {}\n\n", r.tool, r.version, r.seed, r.dataset.source);
    out.push_str(&format!(
        "{} projects ({} unresolved and {} without contributions excluded), {} contributions.\n\n",
        r.dataset.n_projects, r.dataset.n_unresolved_dropped, r.dataset.n_without_contributions, r.dataset.n_contributions
    ));

    if let Some(s) = &r.feature_summary {
        out.push_str(&format!(
            "## Crowd features\n\nFunded {:.1}%, failed {:.1}%.\n\n",
            s.funded_pct, s.failed_pct
        ));
        let rows: Vec<Vec<String>> =
            s.features.iter().map(|f| vec![f.feature.name().to_string(), f.overall.cell()]).collect();
        md_table(&mut out, &["feature", "mean (std)"], &rows);
    }
    if let Some(t) = &r.outcome_table {
        out.push_str("## Funded vs failed\n\n");
        let rows: Vec<Vec<String>> =
            t.iter().map(|o| vec![o.feature.clone(), cell(o.funded), cell(o.failed), o.correlation.cell()]).collect();
        md_table(&mut out, &["feature", "funded", "failed", "r"], &rows);
        out.push_str("Significance: * p < 0.05, ** p < 0.01, *** p < 0.001.\n\n");
    }
    if let Some(d) = &r.distributions {
        out.push_str("## Distribution shape\n\n");
        let rows: Vec<Vec<String>> = d
            .iter()
            .map(|row| match &row.dip {
                Some(x) => vec![row.feature.clone(), format!("{:.4}", x.dip), format!("{:.4}", x.p_value), format!("{:?}", x.verdict).to_lowercase()],
                None => vec![row.feature.clone(), "-".into(), "-".into(), row.error.clone().unwrap_or_default()],
            })
            .collect();
        md_table(&mut out, &["feature", "dip", "p", "verdict"], &rows);
    }
    if let Some(e) = &r.evaluation {
        out.push_str("## Prediction\n\n");
        md_table(&mut out, &["accuracy", "precision", "recall", "F1", "AUC"], &[e.table_row().split(' ').map(String::from).collect()]);
    }
    if let Some(i) = &r.importance {
        out.push_str("## Permutation importance\n\n");
        let rows: Vec<Vec<String>> = i.ranking().iter().map(|f| vec![f.name.clone(), format!("{:.3}", f.share)]).collect();
        md_table(&mut out, &["feature", "share"], &rows);
        let rows: Vec<Vec<String>> = i.groups.iter().map(|g| vec![g.name.clone(), format!("{:.3}", g.share)]).collect();
        md_table(&mut out, &["group", "share"], &rows);
    }
    if let Some(s) = &r.satt {
        out.push_str("## Treatment effects on funding (SATT)\n\n");
        let rows: Vec<Vec<String>> = s
            .iter()
            .map(|f| match &f.estimate {
                Some(e) => vec![
                    f.feature.clone(),
                    format!("{:.3}", e.estimate),
                    format!("[{:.3}, {:.3}]", e.ci_lower, e.ci_upper),
                    if e.significant { "yes".into() } else { "no".into() },
                    format!("{} / {}", e.n_treated, e.n_treated_total),
                ],
                None => vec![f.feature.clone(), "-".into(), "-".into(), f.error.clone().unwrap_or_default(), "-".into()],
            })
            .collect();
        let ci = format!("{}% CI", 100.0 * r.config.matching.confidence);
        md_table(&mut out, &["feature", "SATT", &ci, "CI excludes 0", "matched treated"], &rows);
    }
    let failed: Vec<&StageStatus> = r.stages.iter().filter(|s| matches!(s.state, StageState::Failed | StageState::Partial)).collect();
    if !failed.is_empty() {
        out.push_str("## Stage problems\n\n");
        for s in failed {
            out.push_str(&format!("- {}: {}\n", s.stage, s.errors.join("; ")));
        }
        out.push('\n');
    }
    if !r.notes.is_empty() {
        out.push_str("## Notes\n\n");
        for n in &r.notes {
            out.push_str(&format!("- {n}\n"));
        }
    }
    out
}
