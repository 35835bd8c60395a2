use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use crowdlens::cem::BinOverride;
use crowdlens::features::{build_feature_matrix, summarize, CvOrientation, Include};
use crowdlens::ingest::{write_dataset, MissingPolicy};
use crowdlens::pipeline::{load_configured_dataset, run_pipeline, DatasetConfig, PipelineConfig, PipelineError};
use crowdlens::predict::ErrorMetric;
use crowdlens::report::{self, AnalysisReport};
use crowdlens::synth::{generate_market, load_spec, write_market, MarketSpec};
use serde::Serialize;

/// Crowd-dynamics analysis of crowdfunding contribution logs.
#[derive(Parser)]
#[command(name = "crowdlens", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a dataset and write a normalized copy.
    Ingest(Common),
    /// Per-project crowd features and the summary table.
    Features(Common),
    /// Funded versus failed means and point-biserial correlations.
    Correlate(Common),
    /// Dip tests and histograms of the feature distributions.
    Distshape(DistshapeArgs),
    /// Cross-validated random forest with permutation importance.
    Classify(ClassifyArgs),
    /// Coarsened exact matching and treatment effects of each feature.
    Match(MatchArgs),
    /// Generate a synthetic market with planted effects.
    Synth(SynthArgs),
    /// Render the tables of an existing report.json.
    Report(ReportArgs),
    /// Run every stage and write the full report bundle.
    Pipeline(Common),
}

#[derive(Args, Clone)]
struct Common {
    /// Pipeline config (JSON); dataset paths resolve against its directory.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory holding projects.csv, contributions.csv and schema.json.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "crowdlens-out")]
    out: PathBuf,
    /// Master seed; overrides CROWDLENS_SEED and the config.
    #[arg(long)]
    seed: Option<u64>,
    /// How to treat missing covariates: drop or impute.
    #[arg(long, value_parser = parse_missing)]
    missing: Option<MissingPolicy>,
    /// Momentum orientation: mean-over-std or std-over-mean.
    #[arg(long, value_parser = parse_orientation)]
    momentum_orientation: Option<CvOrientation>,
}

#[derive(Args)]
struct DistshapeArgs {
    #[command(flatten)]
    common: Common,
    /// Bootstrap replicates of the uniform null.
    #[arg(long)]
    reps: Option<usize>,
    /// Histogram bins (Sturges by default).
    #[arg(long)]
    bins: Option<usize>,
}

#[derive(Args)]
struct ClassifyArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    trees: Option<usize>,
    #[arg(long)]
    folds: Option<usize>,
    /// Undersampling iterations.
    #[arg(long)]
    iterations: Option<usize>,
    /// Feature groups used by the classifier: crowd, project or both.
    #[arg(long, value_parser = parse_groups)]
    groups: Option<Include>,
    /// Permutation repeats per feature.
    #[arg(long)]
    importance_repeats: Option<usize>,
    /// Error metric scored by permutation importance: accuracy or auc.
    #[arg(long, value_parser = parse_metric)]
    importance_metric: Option<ErrorMetric>,
}

#[derive(Args)]
struct MatchArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated matching covariates (all by default).
    #[arg(long, value_delimiter = ',')]
    covariates: Option<Vec<String>>,
    /// Bin override `name=COUNT` or `name=c1;c2;...` (repeatable).
    #[arg(long = "bins", value_parser = parse_bins)]
    bins: Vec<(String, BinOverride)>,
    #[arg(long)]
    treatment_quantile: Option<f64>,
    /// Bootstrap replicates for the confidence interval.
    #[arg(long)]
    bootstrap: Option<usize>,
    #[arg(long)]
    confidence: Option<f64>,
    /// Prune matched strata to one-to-one nearest pairs.
    #[arg(long)]
    one_to_one: bool,
}

#[derive(Args)]
struct SynthArgs {
    /// Market spec (JSON); defaults when absent.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Overrides the market spec seed and CROWDLENS_SEED.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the number of projects.
    #[arg(long)]
    projects: Option<usize>,
}

#[derive(Args)]
struct ReportArgs {
    /// A report.json written by `pipeline`.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

fn parse_missing(s: &str) -> Result<MissingPolicy, String> {
    match s {
        "drop" => Ok(MissingPolicy::Drop),
        "impute" => Ok(MissingPolicy::Impute),
        _ => Err(format!("expected drop or impute, got `{s}`")),
    }
}

fn parse_orientation(s: &str) -> Result<CvOrientation, String> {
    match s {
        "mean-over-std" => Ok(CvOrientation::MeanOverStd),
        "std-over-mean" => Ok(CvOrientation::StdOverMean),
        _ => Err(format!("expected mean-over-std or std-over-mean, got `{s}`")),
    }
}

fn parse_groups(s: &str) -> Result<Include, String> {
    let mut parts: Vec<&str> = s.split(',').map(str::trim).collect();
    parts.sort_unstable();
    parts.dedup();
    match parts.as_slice() {
        ["crowd"] => Ok(Include::Crowd),
        ["project"] => Ok(Include::Project),
        ["crowd", "project"] | ["both"] => Ok(Include::Both),
        _ => Err(format!("expected crowd, project or crowd,project, got `{s}`")),
    }
}

fn parse_metric(s: &str) -> Result<ErrorMetric, String> {
    match s {
        "accuracy" => Ok(ErrorMetric::Accuracy),
        "auc" => Ok(ErrorMetric::Auc),
        _ => Err(format!("expected accuracy or auc, got `{s}`")),
    }
}

fn parse_bins(s: &str) -> Result<(String, BinOverride), String> {
    let (name, spec) = s.split_once('=').ok_or_else(|| format!("expected name=spec, got `{s}`"))?;
    let over = if spec.contains(';') {
        let cuts: Result<Vec<f64>, _> = spec.split(';').map(|c| c.trim().parse::<f64>()).collect();
        BinOverride::Cutpoints(cuts.map_err(|e| format!("bad cutpoint in `{s}`: {e}"))?)
    } else if let Ok(n) = spec.parse::<usize>() {
        BinOverride::Count(n)
    } else {
        BinOverride::Cutpoints(vec![spec.parse::<f64>().map_err(|e| format!("bad bin spec `{s}`: {e}"))?])
    };
    Ok((name.to_string(), over))
}

fn seed_from_env() -> Result<Option<u64>, PipelineError> {
    match std::env::var("CROWDLENS_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| PipelineError::new("config", format!("CROWDLENS_SEED must be an unsigned integer, got `{v}`"))),
        Err(_) => Ok(None),
    }
}

/// Resolves the effective config: file (or defaults), then environment, then flags.
fn resolve_config(c: &Common) -> Result<(PipelineConfig, PathBuf), PipelineError> {
    let (mut cfg, mut base) = match &c.config {
        Some(path) => {
            let cfg = PipelineConfig::load(path)?;
            (cfg, path.parent().map(Path::to_path_buf).unwrap_or_default())
        }
        None => {
            let dataset = DatasetConfig {
                projects: "projects.csv".into(),
                contributions: "contributions.csv".into(),
                schema: "schema.json".into(),
                missing: MissingPolicy::Drop,
                exclude_ids: Vec::new(),
                as_of: None,
            };
            let cfg: PipelineConfig = serde_json::from_value(serde_json::json!({ "dataset": dataset }))
                .map_err(|e| PipelineError::new("config", e.to_string()))?;
            (cfg, PathBuf::from("."))
        }
    };
    if let Some(dir) = &c.data {
        cfg.dataset.projects = "projects.csv".into();
        cfg.dataset.contributions = "contributions.csv".into();
        cfg.dataset.schema = "schema.json".into();
        base = dir.clone();
    } else if c.config.is_none() {
        return Err(PipelineError::new("config", "either --config or --data is required"));
    }
    if let Some(s) = seed_from_env()? {
        cfg.seed = s;
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(m) = c.missing {
        cfg.dataset.missing = m;
    }
    if let Some(o) = c.momentum_orientation {
        cfg.features.momentum_orientation = o;
    }
    Ok((cfg, base))
}

/// Disables every optional stage except the one named.
fn only(cfg: &mut PipelineConfig, stage: &str) {
    cfg.distshape.enabled = stage == "distshape";
    cfg.classify.enabled = stage == "classify";
    cfg.matching.enabled = stage == "match";
}

fn io_err(path: &Path, e: std::io::Error) -> PipelineError {
    PipelineError::new("output", format!("{}: {e}", path.display()))
}

fn write_text(dir: &Path, name: &str, body: &str) -> Result<(), PipelineError> {
    let path = dir.join(name);
    std::fs::write(&path, body).map_err(|e| io_err(&path, e))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), PipelineError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| PipelineError::new("output", e.to_string()))?;
    s.push('\n');
    write_text(dir, name, &s)
}

fn prepare_out(dir: &Path) -> Result<(), PipelineError> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

/// Writes report.json, report.md and one CSV per table present.
fn write_bundle(r: &AnalysisReport, out: &Path) -> Result<(), PipelineError> {
    prepare_out(out)?;
    write_text(out, "report.json", &r.to_json())?;
    write_text(out, "report.md", &report::render_markdown(r))?;
    if let Some(s) = &r.feature_summary {
        write_text(out, "feature_summary.csv", &report::feature_summary_csv(s))?;
    }
    if let Some(t) = &r.outcome_table {
        write_text(out, "outcome_table.csv", &report::outcome_table_csv(t))?;
    }
    if let Some(d) = &r.distributions {
        write_text(out, "distributions.csv", &report::distributions_csv(d))?;
        write_text(out, "histograms.csv", &report::histograms_csv(d))?;
    }
    if let Some(e) = &r.evaluation {
        write_text(out, "evaluation.csv", &report::evaluation_csv(e))?;
    }
    if let Some(i) = &r.importance {
        write_text(out, "importance.csv", &report::importance_csv(i))?;
    }
    if let Some(s) = &r.satt {
        write_text(out, "satt.csv", &report::satt_csv(s))?;
    }
    Ok(())
}

fn finish(r: &AnalysisReport) -> i32 {
    for s in &r.stages {
        for e in &s.errors {
            log::warn!("[{}] {e}", s.stage);
        }
    }
    r.exit_code()
}

fn cmd_ingest(c: &Common) -> Result<i32, PipelineError> {
    let (cfg, base) = resolve_config(c)?;
    let (loaded, _, filtered) = load_configured_dataset(&cfg, &base)?;
    prepare_out(&c.out)?;
    write_dataset(&filtered.dataset, &c.out).map_err(|e| PipelineError::new("output", e.to_string()))?;
    let info = serde_json::json!({
        "n_projects_loaded": loaded,
        "n_projects": filtered.dataset.n_projects(),
        "n_contributions": filtered.dataset.n_contributions(),
        "n_unresolved_dropped": filtered.dropped,
        "warning": filtered.warning,
    });
    write_json(&c.out, "ingest.json", &info)?;
    Ok(0)
}

fn cmd_features(c: &Common) -> Result<i32, PipelineError> {
    let (cfg, base) = resolve_config(c)?;
    let (_, _, filtered) = load_configured_dataset(&cfg, &base)?;
    let build = build_feature_matrix(&filtered.dataset, Include::Both, &cfg.features)
        .map_err(|e| PipelineError::new("features", e.to_string()))?;
    for w in &build.warnings {
        log::warn!("{w}");
    }
    let summary = summarize(&build.crowd, &build.outcomes);
    prepare_out(&c.out)?;
    write_text(&c.out, "features.csv", &report::project_features_csv(&build))?;
    write_json(&c.out, "feature_summary.json", &summary)?;
    write_text(&c.out, "feature_summary.csv", &report::feature_summary_csv(&summary))?;
    Ok(0)
}

fn cmd_correlate(c: &Common) -> Result<i32, PipelineError> {
    let (mut cfg, base) = resolve_config(c)?;
    only(&mut cfg, "correlate");
    let r = run_pipeline(&cfg, &base)?;
    prepare_out(&c.out)?;
    if let Some(t) = &r.outcome_table {
        write_json(&c.out, "outcome_table.json", t)?;
        write_text(&c.out, "outcome_table.csv", &report::outcome_table_csv(t))?;
    }
    Ok(finish(&r))
}

fn cmd_distshape(a: &DistshapeArgs) -> Result<i32, PipelineError> {
    let (mut cfg, base) = resolve_config(&a.common)?;
    only(&mut cfg, "distshape");
    if let Some(n) = a.reps {
        cfg.distshape.bootstrap_reps = n;
    }
    if a.bins.is_some() {
        cfg.distshape.bins = a.bins;
    }
    let r = run_pipeline(&cfg, &base)?;
    let out = &a.common.out;
    prepare_out(out)?;
    if let Some(d) = &r.distributions {
        write_json(out, "distributions.json", d)?;
        write_text(out, "distributions.csv", &report::distributions_csv(d))?;
        write_text(out, "histograms.csv", &report::histograms_csv(d))?;
    }
    Ok(finish(&r))
}

fn cmd_classify(a: &ClassifyArgs) -> Result<i32, PipelineError> {
    let (mut cfg, base) = resolve_config(&a.common)?;
    only(&mut cfg, "classify");
    let k = &mut cfg.classify;
    k.trees = a.trees.unwrap_or(k.trees);
    k.folds = a.folds.unwrap_or(k.folds);
    k.iterations = a.iterations.unwrap_or(k.iterations);
    k.include = a.groups.unwrap_or(k.include);
    k.importance_repeats = a.importance_repeats.unwrap_or(k.importance_repeats);
    k.importance_metric = a.importance_metric.unwrap_or(k.importance_metric);
    let r = run_pipeline(&cfg, &base)?;
    let out = &a.common.out;
    prepare_out(out)?;
    if let Some(e) = &r.evaluation {
        write_json(out, "evaluation.json", e)?;
        write_text(out, "evaluation.csv", &report::evaluation_csv(e))?;
    }
    if let Some(i) = &r.importance {
        write_json(out, "importance.json", i)?;
        write_text(out, "importance.csv", &report::importance_csv(i))?;
    }
    Ok(finish(&r))
}

fn cmd_match(a: &MatchArgs) -> Result<i32, PipelineError> {
    let (mut cfg, base) = resolve_config(&a.common)?;
    only(&mut cfg, "match");
    let m = &mut cfg.matching;
    if let Some(c) = &a.covariates {
        m.covariates = c.clone();
    }
    m.bins.extend(a.bins.iter().cloned());
    m.treatment_quantile = a.treatment_quantile.unwrap_or(m.treatment_quantile);
    m.bootstrap = a.bootstrap.unwrap_or(m.bootstrap);
    m.confidence = a.confidence.unwrap_or(m.confidence);
    m.one_to_one |= a.one_to_one;
    let r = run_pipeline(&cfg, &base)?;
    let out = &a.common.out;
    prepare_out(out)?;
    if let Some(info) = &r.matching {
        write_json(out, "coarsening.json", &info.plan)?;
    }
    if let Some(rows) = &r.satt {
        write_json(out, "satt.json", rows)?;
        write_text(out, "satt.csv", &report::satt_csv(rows))?;
        for row in rows {
            let Some(ms) = &row.matched else { continue };
            write_json(out, &format!("matched_{}.json", row.feature), ms)?;
            if let Some(pairs) = &ms.pairs {
                write_text(out, &format!("pairs_{}.csv", row.feature), &report::pairs_csv(pairs))?;
            }
            log::info!("{}", ms.summary_line(&format!("high-{}", row.feature)));
        }
    }
    Ok(finish(&r))
}

fn cmd_synth(a: &SynthArgs) -> Result<i32, PipelineError> {
    let synth_err = |e: crowdlens::synth::SynthError| PipelineError::new("synth", e.to_string());
    let mut spec = match &a.spec {
        Some(p) => load_spec(p).map_err(synth_err)?,
        None => MarketSpec::default(),
    };
    if let Some(s) = seed_from_env()? {
        spec.seed = s;
    }
    if let Some(s) = a.seed {
        spec.seed = s;
    }
    if let Some(n) = a.projects {
        spec.n_projects = n;
    }
    let (d, truth) = generate_market(&spec).map_err(synth_err)?;
    prepare_out(&a.out)?;
    write_market(&d, &truth, &a.out).map_err(synth_err)?;
    Ok(0)
}

fn cmd_report(a: &ReportArgs) -> Result<i32, PipelineError> {
    let text = std::fs::read_to_string(&a.input).map_err(|e| io_err(&a.input, e))?;
    let r: AnalysisReport =
        serde_json::from_str(&text).map_err(|e| PipelineError::new("report", format!("{}: {e}", a.input.display())))?;
    write_bundle(&r, &a.out)?;
    Ok(r.exit_code())
}

fn cmd_pipeline(c: &Common) -> Result<i32, PipelineError> {
    let (cfg, base) = resolve_config(c)?;
    let r = run_pipeline(&cfg, &base)?;
    write_bundle(&r, &c.out)?;
    Ok(finish(&r))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Ingest(c) => cmd_ingest(c),
        Command::Features(c) => cmd_features(c),
        Command::Correlate(c) => cmd_correlate(c),
        Command::Distshape(a) => cmd_distshape(a),
        Command::Classify(a) => cmd_classify(a),
        Command::Match(a) => cmd_match(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Report(a) => cmd_report(a),
        Command::Pipeline(c) => cmd_pipeline(c),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: stage \"{}\": {}", e.stage, e.message);
            ExitCode::from(1)
        }
    }
}
