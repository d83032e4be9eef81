//! Black-box validation: a hidden ensemble generates a series, the search
//! reverse-engineers it from the series alone, and only then is the hidden
//! ensemble compared with what was recovered.
//!
//! The search path ([`analyze_series`]) takes the series and configs only; it
//! has no way to reach the planted game.

use alloc::vec::Vec;

use chrono::NaiveDate;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::exact_p_value;
use crate::exec::Executor;
use crate::fitness::FitnessValue;
use crate::ga::{evaluate, GaConfig, GaRunResult, Genome};
use crate::game::{GameDefinition, GameVariant, History, Hyper, StrategyTable, ThirdPartyGame};
use crate::market::{ReturnSeries, Sign};
use crate::pipeline::{day_seed, predict_day_detailed, PredictionRecord, WindowSpec};
use crate::rng::{self, TAG_BASELINE, TAG_PLANT, TAG_SERIES};

/// A generated series plus how often the planted game produced no demand.
#[derive(Debug, Clone, PartialEq)]
pub struct BlackBoxSeries {
    pub series: ReturnSeries,
    /// Generated steps with zero excess demand (resolved by a coin flip).
    pub abstain_steps: usize,
    /// The planted game never traded.
    pub never_acted: bool,
}

fn synthetic_dates(n: usize) -> Vec<NaiveDate> {
    let start = NaiveDate::from_ymd_opt(2000, 1, 3).expect("valid date");
    (0..n)
        .map(|i| start + chrono::Duration::days(i as i64))
        .collect()
}

/// Runs `planted` closed-loop for `length` days.
///
/// The first `m` symbols are random; afterwards each day's symbol is the sign
/// of the game's excess demand (a seeded coin flip when it is zero), which is
/// fed back both as the realized sign for scoring and as the next history
/// symbol. Returns are `±1`.
pub fn blackbox_generate(
    planted: &ThirdPartyGame,
    length: usize,
    seed: u64,
) -> Result<BlackBoxSeries> {
    let m = planted.hyper().memory as usize;
    if length < m + 1 {
        return Err(Error::SeriesTooShort {
            min: m + 1,
            got: length,
        });
    }
    let mut rng = rng::stream(seed, &[TAG_SERIES]);
    let mut game = planted.clone();
    let mut symbols: Vec<Sign> = (0..m)
        .map(|_| {
            if rng.gen::<bool>() {
                Sign::Up
            } else {
                Sign::Down
            }
        })
        .collect();
    let mut history = History::from_signs(&symbols)?;
    let mut abstain_steps = 0;
    let mut acted = false;
    while symbols.len() < length {
        let step = game.decide(&history)?;
        let symbol = match step.excess_demand.signum() {
            1 => Sign::Up,
            -1 => Sign::Down,
            _ => {
                abstain_steps += 1;
                if rng.gen::<bool>() {
                    Sign::Up
                } else {
                    Sign::Down
                }
            }
        };
        acted |= step.actions.iter().any(|&a| a != 0);
        game.score_update(&step, symbol)?;
        history.push(symbol);
        symbols.push(symbol);
    }
    if !acted {
        log::warn!("planted game never traded; series is pure coin flips after warm-up");
    }
    let returns = symbols.iter().map(|s| s.value() as f64).collect();
    Ok(BlackBoxSeries {
        series: ReturnSeries::from_returns(synthetic_dates(length), returns)?,
        abstain_steps,
        never_acted: !acted,
    })
}

/// How to build the hidden game: explicit tables, or random tables from
/// `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantedSpec {
    pub variant: GameVariant,
    pub hyper: Hyper,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub isd: Option<Vec<Vec<u64>>>,
}

impl Default for PlantedSpec {
    fn default() -> Self {
        Self {
            variant: GameVariant::Gcmjg,
            hyper: Hyper::default(),
            seed: 0,
            isd: None,
        }
    }
}

impl PlantedSpec {
    pub fn build(&self) -> Result<ThirdPartyGame> {
        match &self.isd {
            Some(isd) => ThirdPartyGame::from_definition(&GameDefinition {
                variant: self.variant,
                hyper: self.hyper,
                isd: isd.clone(),
            }),
            None => {
                self.hyper.validate()?;
                let mut rng = rng::stream(self.seed, &[TAG_PLANT]);
                let tables = (0..self.hyper.table_count())
                    .map(|_| StrategyTable::random(self.hyper.memory, &mut rng))
                    .collect();
                ThirdPartyGame::new(self.variant, self.hyper, tables)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlackBoxConfig {
    pub holdout_days: usize,
    pub random_genomes: usize,
}

impl Default for BlackBoxConfig {
    fn default() -> Self {
        Self {
            holdout_days: 50,
            random_genomes: 10_000,
        }
    }
}

/// Everything the search path produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    /// GA runs on the in-sample window right before the holdout.
    pub recovery: Vec<GaRunResult>,
    pub records: Vec<PredictionRecord>,
    pub best_fitness: FitnessValue,
    /// Fraction of random genomes strictly less fit than the best recovered one.
    pub random_percentile: f64,
    /// Fraction of random genomes exactly as fit as the best recovered one.
    pub random_ties: f64,
    pub random_genomes: usize,
    pub holdout_days: usize,
    pub holdout_successes: usize,
    pub holdout_accuracy: f64,
    /// One-sided exact binomial P(X >= successes) under a fair coin.
    pub holdout_p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scorecard {
    pub best_distance: f64,
    pub best_fitness: f64,
    pub random_percentile: f64,
    /// Fraction of random genomes exactly as fit as the best recovered one.
    pub random_ties: f64,
    pub random_genomes: usize,
    pub holdout_days: usize,
    pub holdout_successes: usize,
    pub holdout_accuracy: f64,
    pub holdout_p_value: f64,
    /// Distance of the planted tables, trained from zero on the same window.
    pub planted_distance: Option<f64>,
    /// Informational only: cell agreement between planted and recovered
    /// tables, slot by slot.
    pub genome_agreement: Option<f64>,
    pub abstain_steps: usize,
    pub planted_never_acted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlackBoxExperiment {
    pub planted: GameDefinition,
    pub series: ReturnSeries,
    pub recovery: Vec<GaRunResult>,
    pub records: Vec<PredictionRecord>,
    pub scorecard: Scorecard,
}

/// Reverse-engineers `series`: predicts the last `holdout_days` days one at a
/// time and benchmarks the first day's best fit against random genomes.
pub fn analyze_series<E: Executor>(
    series: &ReturnSeries,
    ga_cfg: &GaConfig,
    spec: &WindowSpec,
    bb: &BlackBoxConfig,
    exec: &E,
) -> Result<SearchOutcome> {
    ga_cfg.validate()?;
    spec.validate(ga_cfg.hyper.memory)?;
    if bb.holdout_days == 0 {
        return Err(Error::InvalidConfig("holdout_days must be >= 1".into()));
    }
    let first = spec.first_predictable(ga_cfg.hyper.memory);
    if series.len() < first + bb.holdout_days {
        return Err(Error::SeriesTooShort {
            min: first + bb.holdout_days,
            got: series.len(),
        });
    }
    let start = series.len() - bb.holdout_days;

    let outcomes = exec.map_indexed(bb.holdout_days, |i| {
        let t = start + i;
        let mut cfg = ga_cfg.clone();
        cfg.seed = day_seed(ga_cfg.seed, ga_cfg.variant, t);
        predict_day_detailed(series, t, spec, &cfg, exec)
    });
    let mut records = Vec::with_capacity(bb.holdout_days);
    let mut recovery = Vec::new();
    for (i, o) in outcomes.into_iter().enumerate() {
        let o = o?;
        if i == 0 {
            recovery = o.runs;
        }
        records.push(o.record);
    }

    let best = recovery
        .iter()
        .map(|r| r.best_fitness)
        .max_by(|a, b| a.fitness.total_cmp(&b.fitness))
        .ok_or(Error::EmptyInput)?;

    let window = series.window(start - spec.in_sample_days, start, ga_cfg.hyper.memory)?;
    let random = exec.map_indexed(bb.random_genomes, |i| {
        let mut rng = rng::stream(ga_cfg.seed, &[TAG_BASELINE, i as u64]);
        evaluate(&Genome::random(&ga_cfg.hyper, &mut rng), &window, ga_cfg)
    });
    let (mut worse, mut tied) = (0usize, 0usize);
    for f in random {
        let f = f?.fitness;
        if f < best.fitness {
            worse += 1;
        } else if f == best.fitness {
            tied += 1;
        }
    }
    let share = |k: usize| {
        if bb.random_genomes == 0 {
            0.0
        } else {
            k as f64 / bb.random_genomes as f64
        }
    };
    let random_percentile = share(worse);
    let random_ties = share(tied);

    let holdout_successes = records.iter().filter(|r| r.is_success()).count();
    Ok(SearchOutcome {
        recovery,
        best_fitness: best,
        random_percentile,
        random_ties,
        random_genomes: bb.random_genomes,
        holdout_days: bb.holdout_days,
        holdout_successes,
        holdout_accuracy: holdout_successes as f64 / bb.holdout_days as f64,
        holdout_p_value: exact_p_value(holdout_successes.saturating_sub(1), bb.holdout_days),
        records,
    })
}

/// Compares the search outcome with the planted game. Nothing here feeds back
/// into the search.
pub fn open_box(
    planted: &ThirdPartyGame,
    generated: BlackBoxSeries,
    search: SearchOutcome,
    ga_cfg: &GaConfig,
    spec: &WindowSpec,
) -> Result<BlackBoxExperiment> {
    let planted_genome = Genome::of_game(planted);
    let best_genome = search
        .recovery
        .iter()
        .max_by(|a, b| a.best_fitness.fitness.total_cmp(&b.best_fitness.fitness))
        .map(|r| &r.best_genome);
    let start = generated.series.len() - search.holdout_days;
    let planted_distance = if planted_genome.matches(&ga_cfg.hyper) {
        let window =
            generated
                .series
                .window(start - spec.in_sample_days, start, ga_cfg.hyper.memory)?;
        let mut cfg = ga_cfg.clone();
        cfg.variant = planted.variant();
        Some(evaluate(&planted_genome, &window, &cfg)?.distance)
    } else {
        None
    };
    let scorecard = Scorecard {
        best_distance: search.best_fitness.distance,
        best_fitness: search.best_fitness.fitness,
        random_percentile: search.random_percentile,
        random_ties: search.random_ties,
        random_genomes: search.random_genomes,
        holdout_days: search.holdout_days,
        holdout_successes: search.holdout_successes,
        holdout_accuracy: search.holdout_accuracy,
        holdout_p_value: search.holdout_p_value,
        planted_distance,
        genome_agreement: best_genome.and_then(|g| g.cell_agreement(&planted_genome)),
        abstain_steps: generated.abstain_steps,
        planted_never_acted: generated.never_acted,
    };
    Ok(BlackBoxExperiment {
        planted: planted.definition(),
        series: generated.series,
        recovery: search.recovery,
        records: search.records,
        scorecard,
    })
}

/// Generates a series from `planted` (`m + in_sample_days + holdout_days`
/// long), reverse-engineers it and scores the recovery.
pub fn run_blackbox<E: Executor>(
    planted: &ThirdPartyGame,
    ga_cfg: &GaConfig,
    spec: &WindowSpec,
    bb: &BlackBoxConfig,
    seed: u64,
    exec: &E,
) -> Result<BlackBoxExperiment> {
    let memory = planted.hyper().memory.max(ga_cfg.hyper.memory) as usize;
    let length = memory + spec.in_sample_days + bb.holdout_days;
    let generated = blackbox_generate(planted, length, rng::derive(seed, &[TAG_SERIES]))?;
    let mut cfg = ga_cfg.clone();
    cfg.seed = seed;
    let search = analyze_series(&generated.series, &cfg, spec, bb, exec)?;
    open_box(planted, generated, search, &cfg, spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Serial;
    use alloc::vec;

    fn hyper(n: usize, s: usize, m: u8) -> Hyper {
        Hyper {
            agents: n,
            strategies: s,
            memory: m,
            threshold: 0.0,
        }
    }

    #[test]
    fn always_buy_agent_locks_in() {
        // tau = -1 so the agent is active from the first step.
        let mut h = hyper(1, 1, 2);
        h.threshold = -1.0;
        let g = ThirdPartyGame::new(
            GameVariant::Gcmjg,
            h,
            vec![StrategyTable::constant(2, Sign::Up)],
        )
        .unwrap();
        let out = blackbox_generate(&g, 30, 4).unwrap();
        assert!(out.series.binary()[2..].iter().all(|s| *s == Sign::Up));
        assert_eq!(out.abstain_steps, 0);
        assert!(!out.never_acted);
    }

    #[test]
    fn generation_is_seeded() {
        let g = PlantedSpec {
            variant: GameVariant::Gcmg,
            hyper: hyper(11, 2, 2),
            seed: 5,
            isd: None,
        }
        .build()
        .unwrap();
        let a = blackbox_generate(&g, 200, 1).unwrap();
        assert_eq!(a, blackbox_generate(&g, 200, 1).unwrap());
        assert_ne!(a.series, blackbox_generate(&g, 200, 2).unwrap().series);
        assert_eq!(a.series.len(), 200);
        assert!(blackbox_generate(&g, 2, 1).is_err());
    }

    #[test]
    fn silent_game_is_flagged() {
        let mut h = hyper(3, 1, 1);
        h.threshold = f64::INFINITY;
        let g = ThirdPartyGame::new(
            GameVariant::Gcmjg,
            h,
            vec![StrategyTable::constant(1, Sign::Up); 3],
        )
        .unwrap();
        let out = blackbox_generate(&g, 40, 9).unwrap();
        assert!(out.never_acted);
        assert_eq!(out.abstain_steps, 39);
    }

    #[test]
    fn planted_spec_with_explicit_tables() {
        let spec = PlantedSpec {
            variant: GameVariant::Mixg,
            hyper: hyper(2, 1, 1),
            seed: 0,
            isd: Some(vec![vec![0b01], vec![0b10]]),
        };
        let g = spec.build().unwrap();
        assert_eq!(g.definition().isd, vec![vec![1], vec![2]]);
        let bad = PlantedSpec {
            isd: Some(vec![vec![0b01]]),
            ..spec
        };
        assert!(bad.build().is_err());
    }

    #[test]
    fn search_path_ignores_planted_game() {
        let planted = PlantedSpec {
            variant: GameVariant::Gcmjg,
            hyper: hyper(5, 2, 2),
            seed: 1,
            isd: None,
        }
        .build()
        .unwrap();
        let generated = blackbox_generate(&planted, 2 + 12 + 4, 3).unwrap();
        let cfg = GaConfig {
            population_size: 8,
            max_generations: 4,
            elite_count: 1,
            hyper: hyper(5, 2, 2),
            ..GaConfig::default()
        };
        let spec = WindowSpec {
            in_sample_days: 12,
            ensemble_runs: 2,
            ..WindowSpec::default()
        };
        let bb = BlackBoxConfig {
            holdout_days: 4,
            random_genomes: 50,
        };
        let search = analyze_series(&generated.series, &cfg, &spec, &bb, &Serial).unwrap();
        let other = PlantedSpec {
            variant: GameVariant::Gcmjg,
            hyper: hyper(5, 2, 2),
            seed: 2,
            isd: None,
        }
        .build()
        .unwrap();
        let a = open_box(&planted, generated.clone(), search.clone(), &cfg, &spec).unwrap();
        let b = open_box(&other, generated, search, &cfg, &spec).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.recovery, b.recovery);
        assert_eq!(a.scorecard.holdout_accuracy, b.scorecard.holdout_accuracy);
        assert_eq!(a.scorecard.random_percentile, b.scorecard.random_percentile);
        assert_ne!(a.planted, b.planted);
    }

    #[test]
    fn search_matches_planted_witness() {
        let h = hyper(3, 1, 1);
        for seed in 0..4 {
            let planted = PlantedSpec {
                variant: GameVariant::Gcmjg,
                hyper: h,
                seed,
                isd: None,
            }
            .build()
            .unwrap();
            let generated = blackbox_generate(&planted, 21, seed).unwrap();
            let window = generated.series.window(1, 21, 1).unwrap();
            let cfg = GaConfig {
                population_size: 30,
                max_generations: 60,
                hyper: h,
                seed,
                ..GaConfig::default()
            };
            let witness = evaluate(&Genome::of_game(&planted), &window, &cfg).unwrap();
            let found = crate::ga::run_ga(&cfg, &window, &Serial).unwrap();
            assert!(found.best_fitness.distance <= witness.distance);
        }
    }

    #[test]
    fn minority_game_is_anti_persistent() {
        let mut total = 0.0;
        for seed in 0..10 {
            let g = PlantedSpec {
                variant: GameVariant::Gcmg,
                hyper: hyper(11, 2, 2),
                seed,
                isd: None,
            }
            .build()
            .unwrap();
            let r = blackbox_generate(&g, 2000, seed).unwrap().series;
            let x = r.returns();
            total += crate::stats::pearson(&x[..x.len() - 1], &x[1..]);
        }
        assert!(
            total / 10.0 < 0.0,
            "mean lag-1 autocorrelation {}",
            total / 10.0
        );
    }
}
