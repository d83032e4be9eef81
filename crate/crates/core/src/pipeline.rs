//! Sliding-window, one-step-ahead prediction with an ensemble of GA runs.
//!
//! For a target day `t` the GA only ever sees a copy of the series truncated
//! at `t`; the realized sign of day `t` is attached to the record afterwards.

use alloc::vec::Vec;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::ga::{run_ga, GaConfig, GaRunResult};
use crate::game::GameVariant;
use crate::market::{ReturnSeries, Sign};
use crate::rng::{self, TAG_DAY};
use crate::stats::{mean, rms, std_dev};

/// How the ensemble's demands become one directional call.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Combiner {
    /// Sign of the mean normalized demand.
    #[default]
    Mean,
    /// Majority of the per-run demand signs; abstaining runs do not vote.
    MajorityVote,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowSpec {
    pub in_sample_days: usize,
    pub ensemble_runs: usize,
    pub combiner: Combiner,
}

impl Default for WindowSpec {
    fn default() -> Self {
        Self {
            in_sample_days: 25,
            ensemble_runs: 10,
            combiner: Combiner::Mean,
        }
    }
}

impl WindowSpec {
    pub fn validate(&self, memory: u8) -> Result<()> {
        if self.in_sample_days < memory as usize + 1 {
            return Err(Error::InvalidConfig(alloc::format!(
                "in_sample_days ({}) must be at least memory + 1 ({})",
                self.in_sample_days,
                memory as usize + 1
            )));
        }
        if self.ensemble_runs == 0 {
            return Err(Error::InvalidConfig("ensemble_runs must be >= 1".into()));
        }
        Ok(())
    }

    /// First day index that can be predicted.
    pub fn first_predictable(&self, memory: u8) -> usize {
        self.in_sample_days + memory as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub date: NaiveDate,
    pub index: usize,
    pub variant: GameVariant,
    #[serde(default)]
    pub param_set: u32,
    pub ga_seed_base: u64,
    pub per_run_demand: Vec<i32>,
    pub per_run_normalized: Vec<f64>,
    pub per_run_distance: Vec<f64>,
    pub mean_demand: f64,
    pub dispersion: f64,
    pub predicted_sign: Sign,
    pub realized_sign: Sign,
    pub realized_return: f64,
    /// The combiner had no direction and fell back to a down call.
    pub tie: bool,
}

impl PredictionRecord {
    pub fn is_success(&self) -> bool {
        self.predicted_sign == self.realized_sign
    }
}

/// A prediction together with the GA runs behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct DayOutcome {
    pub record: PredictionRecord,
    pub runs: Vec<GaRunResult>,
}

/// Per-day GA seed base; independent of processing order.
pub fn day_seed(master: u64, variant: GameVariant, index: usize) -> u64 {
    rng::derive(master, &[TAG_DAY, variant.id(), index as u64])
}

/// Predicts the sign of day `t` with `cfg.seed` as the GA seed base.
pub fn predict_day<E: Executor>(
    external: &ReturnSeries,
    t: usize,
    spec: &WindowSpec,
    cfg: &GaConfig,
    exec: &E,
) -> Result<PredictionRecord> {
    predict_day_detailed(external, t, spec, cfg, exec).map(|o| o.record)
}

pub fn predict_day_detailed<E: Executor>(
    external: &ReturnSeries,
    t: usize,
    spec: &WindowSpec,
    cfg: &GaConfig,
    exec: &E,
) -> Result<DayOutcome> {
    let memory = cfg.hyper.memory;
    spec.validate(memory)?;
    cfg.validate()?;
    let required = spec.first_predictable(memory);
    if t < required || t >= external.len() {
        return Err(Error::InsufficientHistory { index: t, required });
    }

    let visible = external.prefix(t);
    let (runs, demand, normalized) = forecast(&visible, spec, cfg, exec)?;

    let (predicted_sign, tie) = combine(spec.combiner, &demand, &normalized);
    let record = PredictionRecord {
        date: external.dates()[t],
        index: t,
        variant: cfg.variant,
        param_set: 0,
        ga_seed_base: cfg.seed,
        per_run_distance: runs.iter().map(|r| r.best_fitness.distance).collect(),
        mean_demand: mean(&normalized),
        dispersion: std_dev(&normalized),
        per_run_demand: demand,
        per_run_normalized: normalized,
        predicted_sign,
        realized_sign: external.binary()[t],
        realized_return: external.returns()[t],
        tie,
    };
    Ok(DayOutcome { record, runs })
}

/// Runs the ensemble on the last `in_sample_days` of `visible` and forecasts
/// the day after it. Nothing beyond `visible` is reachable here.
fn forecast<E: Executor>(
    visible: &ReturnSeries,
    spec: &WindowSpec,
    cfg: &GaConfig,
    exec: &E,
) -> Result<(Vec<GaRunResult>, Vec<i32>, Vec<f64>)> {
    let t = visible.len();
    let memory = cfg.hyper.memory;
    let window = visible.window(t - spec.in_sample_days, t, memory)?;
    let mut ext_scale = rms(window.returns);
    if ext_scale == 0.0 {
        log::warn!("flat in-sample window ending at index {t}; demands left unscaled");
        ext_scale = 1.0;
    }

    let per_run = exec.map_indexed(spec.ensemble_runs, |k| -> Result<(GaRunResult, i32, f64)> {
        let mut run_cfg = cfg.clone();
        run_cfg.seed = cfg.seed ^ (k as u64 + 1);
        let result = run_ga(&run_cfg, &window, exec)?;
        let mut game = result.best_genome.decode(cfg.variant, cfg.hyper)?;
        let mut in_sample = Vec::with_capacity(window.len());
        let next_history = game.run_demand(&window, &mut in_sample)?;
        game.discard_pending();
        let a = game.predict_next(&next_history)?;
        let own = rms(&in_sample.iter().map(|&x| x as f64).collect::<Vec<_>>());
        let normalized = if own == 0.0 {
            0.0
        } else {
            a as f64 * ext_scale / own
        };
        Ok((result, a, normalized))
    });

    let mut runs = Vec::with_capacity(spec.ensemble_runs);
    let mut demand = Vec::with_capacity(spec.ensemble_runs);
    let mut normalized = Vec::with_capacity(spec.ensemble_runs);
    for r in per_run {
        let (res, a, n) = r?;
        runs.push(res);
        demand.push(a);
        normalized.push(n);
    }
    Ok((runs, demand, normalized))
}

/// Directional call plus a tie flag. Ties resolve to `Down`.
pub fn combine(combiner: Combiner, demand: &[i32], normalized: &[f64]) -> (Sign, bool) {
    let score = match combiner {
        Combiner::Mean => mean(normalized),
        Combiner::MajorityVote => demand.iter().map(|a| a.signum() as f64).sum(),
    };
    if score > 0.0 {
        (Sign::Up, false)
    } else if score < 0.0 {
        (Sign::Down, false)
    } else {
        (Sign::Down, true)
    }
}

/// Predicts each day in `days` from scratch. Day `t` uses
/// [`day_seed`]`(cfg.seed, variant, t)` as its seed base, so results do not
/// depend on order or on which other days are requested.
pub fn run_experiment<E: Executor>(
    external: &ReturnSeries,
    days: &[usize],
    spec: &WindowSpec,
    cfg: &GaConfig,
    exec: &E,
) -> Result<Vec<PredictionRecord>> {
    exec.map_indexed(days.len(), |i| {
        let mut day_cfg = cfg.clone();
        day_cfg.seed = day_seed(cfg.seed, cfg.variant, days[i]);
        predict_day(external, days[i], spec, &day_cfg, exec)
    })
    .into_iter()
    .collect()
}
