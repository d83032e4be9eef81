use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use revmarket::commands::{RECORDS_FILE, REPORT_JSON, REPORT_TXT};
use revmarket::records::read_records;
use revmarket_core::evaluation::{Bucket, SuccessReport};

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/goog_daily.csv")
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("run.toml");
    let text = format!(
        "data = {:?}\noutput = \"out\"\nseed = 11\nworkers = 2\n{body}",
        fixture().display().to_string()
    );
    std::fs::write(&path, text).unwrap();
    path
}

const SMALL: &str = r#"
variants = ["GCMG", "GCMjG"]
[days]
last = 2
[null]
n_strategies = 500
[window]
in_sample_days = 10
ensemble_runs = 2
[ga]
population_size = 8
max_generations = 5
[ga.hyper]
agents = 5
memory = 2
"#;

fn revmarket(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_revmarket"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn run_ok(args: &[&str]) -> Output {
    let out = revmarket(args);
    assert!(
        out.status.success(),
        "{:?} failed: {}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

#[test]
fn predict_smoke_and_idempotent_resume() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let cfg = cfg.to_str().unwrap();
    run_ok(&["predict", "--config", cfg]);
    let out_dir = dir.path().join("out");
    let records = read_records(&out_dir.join(RECORDS_FILE)).unwrap();
    assert_eq!(records.len(), 4);
    for v in ["GCMG", "GCMjG"] {
        assert_eq!(records.iter().filter(|r| r.variant.name() == v).count(), 2);
    }
    assert!(out_dir.join("config.toml").exists());
    assert!(out_dir.join(REPORT_TXT).exists());
    let first = std::fs::read(out_dir.join(RECORDS_FILE)).unwrap();

    let again = run_ok(&["predict", "--config", cfg, "--workers", "1"]);
    let stdout = String::from_utf8_lossy(&again.stdout);
    assert!(
        stdout.contains("0 days computed, 4 already on disk"),
        "{stdout}"
    );
    assert_eq!(std::fs::read(out_dir.join(RECORDS_FILE)).unwrap(), first);
}

#[test]
fn resolved_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    run_ok(&[
        "predict",
        "--config",
        cfg.to_str().unwrap(),
        "--variant",
        "mixg",
    ]);
    let out_dir = dir.path().join("out");
    let resolved = out_dir.join("config.toml");
    let rerun = dir.path().join("rerun");
    std::fs::create_dir(&rerun).unwrap();
    let text = std::fs::read_to_string(&resolved).unwrap().replace(
        &out_dir.display().to_string(),
        &rerun.join("out").display().to_string(),
    );
    let copy = rerun.join("config.toml");
    std::fs::write(&copy, text).unwrap();
    run_ok(&["predict", "--config", copy.to_str().unwrap()]);
    assert_eq!(
        std::fs::read(out_dir.join(RECORDS_FILE)).unwrap(),
        std::fs::read(rerun.join("out").join(RECORDS_FILE)).unwrap()
    );
    assert_eq!(
        std::fs::read(out_dir.join(REPORT_TXT)).unwrap(),
        std::fs::read(rerun.join("out").join(REPORT_TXT)).unwrap()
    );
}

#[test]
fn changed_config_needs_no_resume() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let cfg = cfg.to_str().unwrap();
    run_ok(&["predict", "--config", cfg]);
    let out = revmarket(&["predict", "--config", cfg, "--seed", "12"]);
    assert_eq!(out.status.code(), Some(1));
    run_ok(&["predict", "--config", cfg, "--seed", "12", "--no-resume"]);
    let records = read_records(&dir.path().join("out").join(RECORDS_FILE)).unwrap();
    assert_eq!(records.len(), 4);
}

#[test]
fn validation_errors_exit_one_before_compute() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[window]\nin_sample_days = 3\n[ga.hyper]\nmemory = 3\n",
    );
    let out = revmarket(&["predict", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("in_sample_days"));
    assert!(!dir.path().join("out").exists());

    let out = revmarket(&[
        "predict",
        "--config",
        dir.path().join("missing.toml").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let out = revmarket(&["predict"]);
    assert_eq!(out.status.code(), Some(1));
    let cfg = write_config(dir.path(), "variants = [\"XG\"]\n");
    assert_eq!(
        revmarket(&["predict", "--config", cfg.to_str().unwrap()])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn bad_price_row_is_reported_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("p.csv");
    std::fs::write(&data, "date,close\n2020-01-02,10\n2020-01-03,-1\n").unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "data = \"p.csv\"\n").unwrap();
    let out = revmarket(&["predict", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains(":3:"));
}

#[test]
fn report_is_a_view_of_the_records() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!(
        "{SMALL}\n[[regimes]]\nstart = \"2008-10-13\"\nend = \"2008-10-13\"\nlabel = \"trending_up\"\n"
    );
    let cfg = write_config(dir.path(), &body);
    let cfg = cfg.to_str().unwrap();
    run_ok(&["predict", "--config", cfg]);
    let out_dir = dir.path().join("out");
    let before = std::fs::read(out_dir.join(REPORT_JSON)).unwrap();
    std::fs::remove_file(out_dir.join(REPORT_JSON)).unwrap();
    let out = run_ok(&["report", "--config", cfg]);
    assert_eq!(std::fs::read(out_dir.join(REPORT_JSON)).unwrap(), before);

    let report: SuccessReport = serde_json::from_slice(&before).unwrap();
    for v in &report.variants {
        let all = v.bucket(Bucket::All).n_days;
        let split = v.bucket(Bucket::Trending).n_days + v.bucket(Bucket::NonTrending).n_days;
        assert_eq!(all, split + v.unclassified_days);
        assert_eq!(v.bucket(Bucket::Trending).n_days, 1);
    }
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(
        text.contains("agent type | (p-val) avg | min  | max"),
        "{text}"
    );

    let empty = dir.path().join("empty.jsonl");
    std::fs::write(&empty, "").unwrap();
    let out = revmarket(&[
        "report",
        "--config",
        cfg,
        "--records",
        empty.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("empty"));

    let bad = dir.path().join("bad.jsonl");
    std::fs::write(&bad, "{}\n").unwrap();
    let out = revmarket(&[
        "report",
        "--config",
        cfg,
        "--records",
        bad.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains(":1:"));
}

#[test]
fn blackbox_writes_a_reproducible_scorecard() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"
[window]
in_sample_days = 10
ensemble_runs = 2
[ga]
population_size = 8
max_generations = 5
[ga.hyper]
agents = 5
memory = 2
[blackbox]
holdout_days = 4
random_genomes = 100
[blackbox.planted]
seed = 3
[blackbox.planted.hyper]
agents = 5
memory = 2
"#;
    let cfg = write_config(dir.path(), body);
    let cfg = cfg.to_str().unwrap();
    run_ok(&["blackbox", "--config", cfg]);
    let card = dir.path().join("out").join("scorecard_GCMjG.json");
    let first = std::fs::read(&card).unwrap();
    let v: serde_json::Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(v["holdout_days"], 4);
    assert!(dir.path().join("out").join("blackbox_GCMjG.json").exists());
    run_ok(&["blackbox", "--config", cfg, "--workers", "1"]);
    assert_eq!(std::fs::read(&card).unwrap(), first);
}

#[test]
fn defaults_reference_is_printed() {
    let out = run_ok(&["defaults"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("in_sample_days = 25"));
}
