use std::path::Path;
use std::process::Command;

fn crowdlens(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_crowdlens")).args(args).output().unwrap()
}

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name).display().to_string()
}

#[test]
fn tiny_dataset_runs_with_partial_stages() {
    let out = tempfile::tempdir().unwrap();
    let o = out.path().to_str().unwrap();
    let run = crowdlens(&["pipeline", "--data", &fixture("tiny"), "--out", o, "--seed", "3"]);
    assert_eq!(run.status.code(), Some(2), "{}", String::from_utf8_lossy(&run.stderr));
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(out.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["seed"], 3);
    assert!(out.path().join("report.md").exists());
}

#[test]
fn missing_data_fails_at_ingest() {
    let out = tempfile::tempdir().unwrap();
    let run = crowdlens(&["pipeline", "--data", "/nonexistent/crowdlens", "--out", out.path().to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&run.stderr).contains("\"ingest\""));
}

#[test]
fn synth_is_reproducible_from_a_seed() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [&a, &b] {
        let run = crowdlens(&["synth", "--projects", "150", "--seed", "9", "--out", dir.path().to_str().unwrap()]);
        assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    }
    for name in ["projects.csv", "contributions.csv"] {
        assert_eq!(std::fs::read(a.path().join(name)).unwrap(), std::fs::read(b.path().join(name)).unwrap());
    }
}
