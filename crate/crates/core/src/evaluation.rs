//! Success rates, random-strategy p-values and the regime breakdown table.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use chrono::NaiveDate;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::GameVariant;
use crate::market::{RegimeLabel, Sign};
use crate::pipeline::PredictionRecord;
use crate::rng::{self, TAG_NULL};
use crate::stats::binomial_half_tail_ge;

/// Fraction of records whose predicted sign matches the realized sign.
pub fn success_rate(records: &[PredictionRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(success_count(records) as f64 / records.len() as f64)
}

pub fn success_count(records: &[PredictionRecord]) -> usize {
    records.iter().filter(|r| r.is_success()).count()
}

/// Success counts of fair-coin guessing strategies.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NullDistribution {
    pub n_days: usize,
    pub n_strategies: usize,
    pub success_counts: Vec<u32>,
    pub seed: u64,
}

impl NullDistribution {
    /// Fraction of strategies with at least `count` successes.
    pub fn tail_ge(&self, count: usize) -> f64 {
        if self.n_strategies == 0 {
            return 0.0;
        }
        self.success_counts
            .iter()
            .filter(|&&c| c as usize >= count)
            .count() as f64
            / self.n_strategies as f64
    }
}

/// Scores `n_strategies` fair-coin strategies against `realized`.
pub fn null_distribution_against(
    realized: &[Sign],
    n_strategies: usize,
    seed: u64,
) -> NullDistribution {
    let success_counts = (0..n_strategies)
        .map(|i| {
            let mut rng = rng::stream(seed, &[TAG_NULL, i as u64]);
            realized
                .iter()
                .filter(|&&s| (rng.gen::<bool>()) == s.is_up())
                .count() as u32
        })
        .collect();
    NullDistribution {
        n_days: realized.len(),
        n_strategies,
        success_counts,
        seed,
    }
}

/// Null distribution for `n_days` days. Every guess matches a fixed realized
/// sign with probability 1/2, so the counts are Binomial(n_days, 1/2) whatever
/// that sequence is; an all-up sequence is used.
pub fn null_distribution(n_days: usize, n_strategies: usize, seed: u64) -> NullDistribution {
    null_distribution_against(&alloc::vec![Sign::Up; n_days], n_strategies, seed)
}

/// Fraction of random strategies that did strictly better than `observed`.
pub fn p_value(observed: usize, null: &NullDistribution) -> f64 {
    if null.n_strategies == 0 {
        return 0.0;
    }
    null.success_counts
        .iter()
        .filter(|&&c| c as usize > observed)
        .count() as f64
        / null.n_strategies as f64
}

/// Exact P(X > observed), X ~ Binomial(n_days, 1/2).
pub fn exact_p_value(observed: usize, n_days: usize) -> f64 {
    binomial_half_tail_ge(n_days as u64, observed as u64 + 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bucket {
    All,
    Trending,
    NonTrending,
}

impl Bucket {
    pub const ALL: [Bucket; 3] = [Bucket::All, Bucket::Trending, Bucket::NonTrending];

    pub fn contains(self, label: RegimeLabel) -> bool {
        match self {
            Bucket::All => true,
            Bucket::Trending => label.is_trending(),
            Bucket::NonTrending => label == RegimeLabel::NonTrending,
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Bucket::All => "All periods",
            Bucket::Trending => "Trending periods",
            Bucket::NonTrending => "Non-trending periods",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketReport {
    pub bucket: Bucket,
    /// Distinct days in the bucket.
    pub n_days: usize,
    pub n_records: usize,
    pub successes: usize,
    /// Mean of the per-parameter-set success rates.
    pub success_rate: f64,
    pub min_rate: f64,
    pub max_rate: f64,
    pub param_sets: usize,
    /// Monte-Carlo p-value against the random-strategy null.
    pub p_value: f64,
    /// Exact binomial counterpart of `p_value`.
    pub exact_p_value: f64,
    pub ties: usize,
    pub zero_return_days: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantReport {
    pub variant: GameVariant,
    pub buckets: Vec<BucketReport>,
    pub unclassified_days: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRates {
    pub bucket: Bucket,
    pub n_days: usize,
    pub buy_and_hold: f64,
    pub sell_and_hold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuccessReport {
    pub variants: Vec<VariantReport>,
    pub benchmarks: Vec<BenchmarkRates>,
    pub n_strategies: usize,
    pub null_seed: u64,
}

impl SuccessReport {
    pub fn variant(&self, v: GameVariant) -> Option<&VariantReport> {
        self.variants.iter().find(|r| r.variant == v)
    }
}

impl VariantReport {
    pub fn bucket(&self, b: Bucket) -> &BucketReport {
        self.buckets
            .iter()
            .find(|r| r.bucket == b)
            .expect("all buckets are reported")
    }
}

fn label_of(regimes: &BTreeMap<NaiveDate, RegimeLabel>, date: NaiveDate) -> Result<RegimeLabel> {
    regimes
        .get(&date)
        .copied()
        .ok_or(Error::UnlabeledDate(date))
}

fn bucket_report(
    bucket: Bucket,
    records: &[&PredictionRecord],
    n_strategies: usize,
    null_seed: u64,
) -> BucketReport {
    let n_days = records
        .iter()
        .map(|r| r.date)
        .collect::<BTreeSet<_>>()
        .len();
    let mut per_set: BTreeMap<u32, (usize, usize)> = BTreeMap::new();
    for r in records {
        let e = per_set.entry(r.param_set).or_default();
        e.0 += r.is_success() as usize;
        e.1 += 1;
    }
    let rates: Vec<f64> = per_set
        .values()
        .map(|&(s, n)| s as f64 / n as f64)
        .collect();
    let (success_rate, min_rate, max_rate) = if rates.is_empty() {
        (0.0, 0.0, 0.0)
    } else {
        (
            crate::stats::mean(&rates),
            rates.iter().copied().fold(f64::INFINITY, f64::min),
            rates.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        )
    };
    let observed = libm::round(success_rate * n_days as f64) as usize;
    let (p, exact) = if n_days == 0 {
        (1.0, 1.0)
    } else {
        let null = null_distribution(n_days, n_strategies, null_seed);
        (p_value(observed, &null), exact_p_value(observed, n_days))
    };
    BucketReport {
        bucket,
        n_days,
        n_records: records.len(),
        successes: records.iter().filter(|r| r.is_success()).count(),
        success_rate,
        min_rate,
        max_rate,
        param_sets: per_set.len(),
        p_value: p,
        exact_p_value: exact,
        ties: records.iter().filter(|r| r.tie).count(),
        zero_return_days: records
            .iter()
            .filter(|r| r.realized_return == 0.0)
            .map(|r| r.date)
            .collect::<BTreeSet<_>>()
            .len(),
    }
}

/// Success rates per variant over all days, trending days and non-trending
/// days. Unclassified days only count towards "all".
pub fn regime_breakdown(
    records: &[PredictionRecord],
    regimes: &BTreeMap<NaiveDate, RegimeLabel>,
    n_strategies: usize,
    null_seed: u64,
) -> Result<SuccessReport> {
    if records.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut labelled = Vec::with_capacity(records.len());
    for r in records {
        labelled.push((r, label_of(regimes, r.date)?));
    }
    let mut variants = Vec::new();
    for variant in GameVariant::ALL {
        let own: Vec<_> = labelled
            .iter()
            .filter(|(r, _)| r.variant == variant)
            .collect();
        if own.is_empty() {
            continue;
        }
        let buckets = Bucket::ALL
            .into_iter()
            .map(|b| {
                let members: Vec<&PredictionRecord> = own
                    .iter()
                    .filter(|(_, l)| b.contains(*l))
                    .map(|(r, _)| *r)
                    .collect();
                let seed = rng::derive(null_seed, &[variant.id(), b as u64]);
                bucket_report(b, &members, n_strategies, seed)
            })
            .collect();
        let unclassified_days = own
            .iter()
            .filter(|(_, l)| *l == RegimeLabel::Unclassified)
            .map(|(r, _)| r.date)
            .collect::<BTreeSet<_>>()
            .len();
        variants.push(VariantReport {
            variant,
            buckets,
            unclassified_days,
        });
    }
    Ok(SuccessReport {
        variants,
        benchmarks: benchmark_rates(records, regimes)?,
        n_strategies,
        null_seed,
    })
}

/// Buy-and-hold and sell-and-hold success rates per bucket, over distinct
/// days.
pub fn benchmark_rates(
    records: &[PredictionRecord],
    regimes: &BTreeMap<NaiveDate, RegimeLabel>,
) -> Result<Vec<BenchmarkRates>> {
    let mut days: BTreeMap<NaiveDate, (Sign, RegimeLabel)> = BTreeMap::new();
    for r in records {
        days.insert(r.date, (r.realized_sign, label_of(regimes, r.date)?));
    }
    Ok(Bucket::ALL
        .into_iter()
        .map(|b| {
            let signs: Vec<Sign> = days
                .values()
                .filter(|(_, l)| b.contains(*l))
                .map(|(s, _)| *s)
                .collect();
            let n = signs.len();
            let up = signs.iter().filter(|s| s.is_up()).count();
            let (bh, sh) = if n == 0 {
                (0.0, 0.0)
            } else {
                (up as f64 / n as f64, (n - up) as f64 / n as f64)
            };
            BenchmarkRates {
                bucket: b,
                n_days: n,
                buy_and_hold: bh,
                sell_and_hold: sh,
            }
        })
        .collect())
}

/// `"(p) avg | min | max"` with two decimals.
pub fn format_cell(p: f64, avg: f64, min: f64, max: f64) -> String {
    alloc::format!("({p:.2}) {avg:.2} | {min:.2} | {max:.2}")
}

/// Fixed-width text table: one block per bucket, one row per variant.
pub fn render_table(report: &SuccessReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<10} | (p-val) avg | min  | max", "agent type");
    for bucket in Bucket::ALL {
        let n = report
            .variants
            .first()
            .map_or(0, |v| v.bucket(bucket).n_days);
        let _ = writeln!(out, "--- {} (n={n}) ---", bucket.title());
        for v in &report.variants {
            let b = v.bucket(bucket);
            if b.n_days == 0 {
                let _ = writeln!(out, "{:<10} | n=0", v.variant.name());
            } else {
                let _ = writeln!(
                    out,
                    "{:<10} | {}",
                    v.variant.name(),
                    format_cell(b.p_value, b.success_rate, b.min_rate, b.max_rate)
                );
            }
        }
    }
    let _ = writeln!(out, "--- Benchmarks ---");
    for b in &report.benchmarks {
        let _ = writeln!(
            out,
            "{:<20} n={:<5} buy-and-hold {:.2} | sell-and-hold {:.2}",
            b.bucket.title(),
            b.n_days,
            b.buy_and_hold,
            b.sell_and_hold
        );
    }
    out
}
