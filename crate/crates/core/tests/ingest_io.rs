use std::fs;
use std::path::{Path, PathBuf};

use crowdlens::features::{build_feature_matrix, extract_crowd_features, FeatureConfig, Include};
use crowdlens::ingest::{load_dataset, write_dataset, IngestError, LoadOptions, MissingPolicy};
use crowdlens::Dataset;

fn tiny_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/tiny")
}

fn load(dir: &Path, options: &LoadOptions) -> Result<Dataset, IngestError> {
    load_dataset(&dir.join("projects.csv"), &dir.join("contributions.csv"), &dir.join("schema.json"), options)
}

/// Copies the tiny fixture into a scratch directory, replacing the named
/// files with the given contents.
fn patched_fixture(replace: &[(&str, &str)]) -> tempfile::TempDir {
    let tmp = tempfile::tempdir().unwrap();
    for name in ["projects.csv", "contributions.csv", "schema.json"] {
        fs::copy(tiny_dir().join(name), tmp.path().join(name)).unwrap();
    }
    for (name, body) in replace {
        fs::write(tmp.path().join(name), body).unwrap();
    }
    tmp
}

#[test]
fn tiny_fixture_counts() {
    let d = load(&tiny_dir(), &LoadOptions::default()).unwrap();
    assert_eq!((d.n_projects(), d.n_contributions()), (3, 7));
    assert_eq!(d.events_of("alpha").unwrap().len(), 3);
    assert!(d.provenance().loaded_at.is_some());
}

#[test]
fn tiny_fixture_features_by_hand() {
    let d = load(&tiny_dir(), &LoadOptions::default()).unwrap();
    let cfg = FeatureConfig::default();
    let f = |id: &str| extract_crowd_features(d.project(id).unwrap(), d.events_of(id).unwrap(), &cfg).unwrap();

    // alpha: contributions on days 1, 2, 4 of a 10 day window; amounts 100, 200, 300
    let a = f("alpha");
    assert_eq!(a.appeal, 2);
    assert!((a.momentum - 1.5 / 0.5f64.sqrt()).abs() < 1e-12);
    assert!((a.variation - 0.5).abs() < 1e-12);
    assert!((a.latency - 0.1).abs() < 1e-12);
    assert!((a.engagement - 3.0).abs() < 1e-12);

    // beta: days 4 and 6.5; amounts 50, 25
    let b = f("beta");
    assert_eq!((b.appeal, b.momentum), (2, 0.0));
    assert!((b.variation - 12.5f64.hypot(12.5) / 37.5).abs() < 1e-12);
    assert!((b.latency - 0.4).abs() < 1e-12);
    assert!((b.engagement - 2.5).abs() < 1e-12);

    // gamma has no deadline: latency stays in days
    let g = f("gamma");
    assert!(!g.latency_scaled);
    assert!((g.latency - 0.25).abs() < 1e-12);
    assert_eq!((g.variation, g.engagement), (0.0, 1.0));

    let build = build_feature_matrix(&d, Include::Both, &cfg).unwrap();
    assert_eq!(
        build.matrix.column_names(),
        ["appeal", "momentum", "variation", "latency", "engagement", "amount", "category=art", "category=music"]
    );
    assert!(build.warnings.iter().any(|w| w.contains("raw days")));
}

#[test]
fn unknown_project_is_named() {
    let contributions = "project_id,funder_id,timestamp,amount\nalpha,f1,2021-03-02T00:00:00Z,100\nzzz,f9,2021-03-02T00:00:00Z,5\n";
    let tmp = patched_fixture(&[("contributions.csv", contributions)]);
    match load(tmp.path(), &LoadOptions::default()) {
        Err(e @ IngestError::UnknownProject { .. }) => {
            assert!(e.to_string().contains("zzz"));
            let IngestError::UnknownProject { project_id, line } = e else { unreachable!() };
            assert_eq!((project_id.as_str(), line), ("zzz", Some(3)));
        }
        other => panic!("expected UnknownProject, got {other:?}"),
    }
}

#[test]
fn contribution_before_posting_is_rejected() {
    // alpha is posted at midnight on March 1st
    let contributions = "project_id,funder_id,timestamp,amount\nalpha,f1,2021-02-28T23:00:00Z,100\n";
    let tmp = patched_fixture(&[("contributions.csv", contributions)]);
    match load(tmp.path(), &LoadOptions::default()) {
        Err(IngestError::TemporalViolation { project_id, .. }) => assert_eq!(project_id, "alpha"),
        other => panic!("expected TemporalViolation, got {other:?}"),
    }
}

#[test]
fn undeclared_column_is_a_schema_mismatch() {
    let projects = "project_id,posted_at,deadline_at,goal_amount,funded,amount,category,extra\n\
                    alpha,2021-03-01,2021-03-11,500,1,500,art,x\n";
    let tmp = patched_fixture(&[("projects.csv", projects), ("contributions.csv", "project_id,funder_id,timestamp,amount\n")]);
    assert!(matches!(load(tmp.path(), &LoadOptions::default()), Err(IngestError::SchemaMismatch(_))));
}

#[test]
fn missing_covariates_drop_or_impute() {
    let projects = "project_id,posted_at,deadline_at,goal_amount,funded,amount,category\n\
                    alpha,2021-03-01,2021-03-11,500,1,500,art\n\
                    beta,2021-03-02,2021-03-12,800,0,,music\n\
                    gamma,2021-03-05,,300,1,300,\n";
    let tmp = patched_fixture(&[("projects.csv", projects)]);
    let dropped = load(tmp.path(), &LoadOptions::default()).unwrap();
    assert_eq!((dropped.n_projects(), dropped.n_contributions()), (1, 3));

    let imputed = load(tmp.path(), &LoadOptions { missing: MissingPolicy::Impute, ..Default::default() }).unwrap();
    assert_eq!(imputed.n_projects(), 3);
    let beta = imputed.project("beta").unwrap();
    assert_eq!(beta.covariates[0].as_numeric(), Some(400.0));
    // categorical mode among observed {art, music} ties; the first in sorted order wins
    assert_eq!(imputed.project("gamma").unwrap().covariates[1].as_category(), Some("art"));
}

#[test]
fn write_then_reload_is_identity() {
    let d = load(&tiny_dir(), &LoadOptions::default()).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    write_dataset(&d, tmp.path()).unwrap();
    let back = load(tmp.path(), &LoadOptions::default()).unwrap();
    assert!(d.same_content(&back));
    // a second round trip is byte-stable
    let tmp2 = tempfile::tempdir().unwrap();
    write_dataset(&back, tmp2.path()).unwrap();
    for name in ["projects.csv", "contributions.csv", "schema.json"] {
        assert_eq!(fs::read(tmp.path().join(name)).unwrap(), fs::read(tmp2.path().join(name)).unwrap());
    }
}
