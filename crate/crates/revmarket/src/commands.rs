//! Subcommand implementations. Each returns a [`CliError`] whose class
//! decides the exit code.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::Context;
use chrono::NaiveDate;
use revmarket_core::blackbox::{run_blackbox, Scorecard};
use revmarket_core::evaluation::{regime_breakdown, render_table, Bucket, SuccessReport};
use revmarket_core::market::classify_regime;
use revmarket_core::pipeline::run_experiment;
use revmarket_core::{PredictionRecord, RegimeLabel, ReturnSeries};

use crate::config::{RegimeRange, RunConfig};
use crate::data::load_prices;
use crate::error::{validation, CliError};
use crate::exec::Rayon;
use crate::records::{read_records, RecordStore};

pub const RECORDS_FILE: &str = "records.jsonl";
pub const CONFIG_FILE: &str = "config.toml";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_TXT: &str = "report.txt";

/// Days predicted per checkpoint, per worker thread.
const DAYS_PER_WORKER: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct PredictSummary {
    pub computed: usize,
    pub skipped: usize,
    pub records: PathBuf,
    pub report: SuccessReport,
}

pub fn load_series(cfg: &RunConfig) -> Result<ReturnSeries, CliError> {
    let prices =
        load_prices(&cfg.data, &cfg.close_column).map_err(|e| validation(e.to_string()))?;
    ReturnSeries::from_prices(&prices, cfg.returns)
        .map_err(|e| validation(format!("{}: {e}", cfg.data.display())))
}

/// Indices of the days to predict, the same for every parameter set.
pub fn select_days(cfg: &RunConfig, series: &ReturnSeries) -> Result<Vec<usize>, CliError> {
    let mut memory = 0;
    for k in 0..cfg.param_set_count() {
        memory = memory.max(cfg.param_set(k)?.hyper.memory);
    }
    let first = cfg.window.first_predictable(memory);
    let dates = series.dates();
    let mut days: Vec<usize> = (first..series.len())
        .filter(|&i| cfg.days.start.is_none_or(|s| dates[i] >= s))
        .filter(|&i| cfg.days.end.is_none_or(|e| dates[i] <= e))
        .collect();
    if let Some(n) = cfg.days.last {
        days.drain(..days.len().saturating_sub(n));
    }
    if days.is_empty() {
        return Err(validation(format!(
            "no predictable days: the series has {} returns and each prediction needs {first} before it",
            series.len()
        )));
    }
    Ok(days)
}

/// Creates the output directory and records the resolved config there.
/// An existing directory from a different run is refused unless `resume` is
/// off, in which case its records are discarded.
fn prepare_output(cfg: &RunConfig, resume: bool) -> Result<(), CliError> {
    std::fs::create_dir_all(&cfg.output)
        .with_context(|| format!("creating {}", cfg.output.display()))?;
    let config_path = cfg.output.join(CONFIG_FILE);
    if config_path.exists() {
        let previous = std::fs::read_to_string(&config_path)
            .with_context(|| format!("reading {}", config_path.display()))?;
        let same = RunConfig::from_toml(&previous).is_ok_and(|p| p.same_run(cfg));
        if resume && !same {
            return Err(validation(format!(
                "{} holds results of a different configuration; choose another output or pass --no-resume",
                cfg.output.display()
            )));
        }
        if !resume {
            let records = cfg.output.join(RECORDS_FILE);
            if records.exists() {
                std::fs::remove_file(&records)
                    .with_context(|| format!("removing {}", records.display()))?;
            }
        }
    }
    std::fs::write(&config_path, cfg.to_toml())
        .with_context(|| format!("writing {}", config_path.display()))?;
    Ok(())
}

pub fn cmd_predict(cfg: &RunConfig, resume: bool) -> Result<PredictSummary, CliError> {
    cfg.validate()?;
    let series = load_series(cfg)?;
    let days = select_days(cfg, &series)?;
    prepare_output(cfg, resume)?;

    let exec = Rayon::new(cfg.workers)?;
    let chunk = exec.threads().max(1) * DAYS_PER_WORKER;
    let records_path = cfg.output.join(RECORDS_FILE);
    let mut store = RecordStore::open(&records_path).map_err(anyhow::Error::from)?;
    let (mut computed, mut skipped) = (0, 0);
    log::info!(
        "predicting {} days x {} variants x {} parameter sets on {} threads",
        days.len(),
        cfg.variants.len(),
        cfg.param_set_count(),
        exec.threads()
    );

    for &variant in &cfg.variants {
        for k in 0..cfg.param_set_count() {
            let mut ga = cfg.param_set(k)?;
            ga.seed = cfg.seed;
            ga.variant = variant;
            let param_set = k as u32;
            let dates = series.dates();
            let pending: Vec<usize> = days
                .iter()
                .copied()
                .filter(|&i| !store.contains(&(variant, param_set, dates[i])))
                .collect();
            skipped += days.len() - pending.len();
            for batch in pending.chunks(chunk) {
                let mut records = run_experiment(&series, batch, &cfg.window, &ga, &exec)
                    .with_context(|| format!("{} parameter set {k}", variant.name()))?;
                for r in &mut records {
                    r.param_set = param_set;
                }
                store.append(&records).map_err(anyhow::Error::from)?;
                computed += records.len();
                log::info!(
                    "{} set {k}: {}/{} days",
                    variant.name(),
                    days.len() - pending.len() + computed_in(&pending, batch),
                    days.len()
                );
            }
        }
    }
    drop(store);
    let report = write_report(cfg, &records_path)?;
    Ok(PredictSummary {
        computed,
        skipped,
        records: records_path,
        report,
    })
}

fn computed_in(pending: &[usize], batch: &[usize]) -> usize {
    let end = batch.last().copied().unwrap_or(0);
    pending.iter().filter(|&&i| i <= end).count()
}

/// Labels each predicted day from the configured ranges. Unlabelled ranges are
/// classified from the realized returns of the recorded days inside them.
pub fn regime_labels(
    records: &[PredictionRecord],
    ranges: &[RegimeRange],
) -> Result<BTreeMap<NaiveDate, RegimeLabel>, CliError> {
    let returns: BTreeMap<NaiveDate, f64> = records
        .iter()
        .map(|r| (r.date, r.realized_return))
        .collect();
    let mut range_labels = Vec::with_capacity(ranges.len());
    for r in ranges {
        let label = match r.label {
            Some(l) => l,
            None => {
                let inside: Vec<f64> = returns.range(r.start..=r.end).map(|(_, v)| *v).collect();
                if inside.is_empty() {
                    RegimeLabel::Unclassified
                } else {
                    classify_regime(&inside).map_err(anyhow::Error::from)?
                }
            }
        };
        range_labels.push(label);
    }
    Ok(returns
        .keys()
        .map(|&d| {
            let label = ranges
                .iter()
                .zip(&range_labels)
                .find(|(r, _)| r.start <= d && d <= r.end)
                .map_or(RegimeLabel::Unclassified, |(_, l)| *l);
            (d, label)
        })
        .collect())
}

/// Builds the report from records only.
pub fn build_report(
    cfg: &RunConfig,
    records: &[PredictionRecord],
) -> Result<SuccessReport, CliError> {
    if records.is_empty() {
        return Err(validation("records: empty input"));
    }
    let labels = regime_labels(records, &cfg.regimes)?;
    Ok(
        regime_breakdown(records, &labels, cfg.null.n_strategies, cfg.null_seed())
            .map_err(anyhow::Error::from)?,
    )
}

pub fn render_report(report: &SuccessReport) -> String {
    let mut out = render_table(report);
    let _ = writeln!(out, "--- Details ---");
    for v in &report.variants {
        let all = v.bucket(Bucket::All);
        let _ = writeln!(
            out,
            "{:<10} days={} records={} parameter sets={} ties={} zero-return days={} unclassified days={} exact p={:.4}",
            v.variant.name(),
            all.n_days,
            all.n_records,
            all.param_sets,
            all.ties,
            all.zero_return_days,
            v.unclassified_days,
            all.exact_p_value
        );
    }
    out
}

fn write_report(cfg: &RunConfig, records_path: &Path) -> Result<SuccessReport, CliError> {
    let records = read_records(records_path).map_err(|e| validation(e.to_string()))?;
    let report = build_report(cfg, &records)?;
    let dir = records_path.parent().unwrap_or(Path::new("."));
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    std::fs::write(dir.join(REPORT_JSON), json + "\n").context("writing report.json")?;
    std::fs::write(dir.join(REPORT_TXT), render_report(&report)).context("writing report.txt")?;
    Ok(report)
}

/// Regenerates `report.json` and `report.txt` next to `records`.
pub fn cmd_report(cfg: &RunConfig, records: &Path) -> Result<SuccessReport, CliError> {
    if !records.exists() {
        return Err(validation(format!(
            "{}: no such records file",
            records.display()
        )));
    }
    write_report(cfg, records)
}

/// Runs the black-box experiment once per configured search variant and
/// writes `blackbox_<variant>.json` (full experiment) and
/// `scorecard_<variant>.json`.
pub fn cmd_blackbox(cfg: &RunConfig, resume: bool) -> Result<Vec<Scorecard>, CliError> {
    cfg.validate()?;
    cfg.validate_blackbox()?;
    prepare_output(cfg, resume)?;
    let exec = Rayon::new(cfg.workers)?;
    let planted = cfg.blackbox.planted.build()?;
    let mut cards = Vec::new();
    for &variant in &cfg.variants {
        let mut ga = cfg.param_set(0)?;
        ga.variant = variant;
        ga.seed = cfg.seed;
        log::info!("black box: {} search", variant.name());
        let exp = run_blackbox(
            &planted,
            &ga,
            &cfg.window,
            &cfg.blackbox.config(),
            cfg.seed,
            &exec,
        )
        .with_context(|| format!("black box with {} search", variant.name()))?;
        let name = variant.name();
        let write = |file: String, body: String| -> Result<(), CliError> {
            let path = cfg.output.join(file);
            std::fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
            Ok(())
        };
        write(
            format!("blackbox_{name}.json"),
            serde_json::to_string_pretty(&exp).expect("experiment serializes") + "\n",
        )?;
        write(
            format!("scorecard_{name}.json"),
            serde_json::to_string_pretty(&exp.scorecard).expect("scorecard serializes") + "\n",
        )?;
        cards.push(exp.scorecard);
    }
    Ok(cards)
}
