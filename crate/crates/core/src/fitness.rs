//! Distances between a game's excess-demand series and the external returns.
//!
//! Lower distance is better; fitness is the negated distance so that the
//! search maximizes it.

use alloc::string::ToString;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use libm::sqrt;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::MarketStep;
use crate::market::{Sign, Window};
use crate::stats::{pearson, rms};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum FitnessMetric {
    #[serde(rename = "l1")]
    L1,
    #[serde(rename = "l2")]
    L2,
    #[default]
    #[serde(rename = "hamming2")]
    HammingBinary,
    #[serde(rename = "hamming3")]
    HammingTernary,
    /// `1 - pearson(A, r)`. Not a metric in the axiomatic sense.
    #[serde(rename = "xcorr")]
    CrossCorrelation,
}

impl FitnessMetric {
    pub const ALL: [FitnessMetric; 5] = [
        FitnessMetric::L1,
        FitnessMetric::L2,
        FitnessMetric::HammingBinary,
        FitnessMetric::HammingTernary,
        FitnessMetric::CrossCorrelation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FitnessMetric::L1 => "l1",
            FitnessMetric::L2 => "l2",
            FitnessMetric::HammingBinary => "hamming2",
            FitnessMetric::HammingTernary => "hamming3",
            FitnessMetric::CrossCorrelation => "xcorr",
        }
    }
}

impl fmt::Display for FitnessMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FitnessMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FitnessMetric::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownName(s.to_string()))
    }
}

/// Binary coding of a zero excess demand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZeroDemand {
    #[default]
    Down,
    Up,
}

#[inline]
pub fn sign2(demand: i32, zero: ZeroDemand) -> Sign {
    match demand.cmp(&0) {
        core::cmp::Ordering::Greater => Sign::Up,
        core::cmp::Ordering::Less => Sign::Down,
        core::cmp::Ordering::Equal => match zero {
            ZeroDemand::Down => Sign::Down,
            ZeroDemand::Up => Sign::Up,
        },
    }
}

#[inline]
pub fn sign3(demand: i32) -> i8 {
    demand.signum() as i8
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitnessValue {
    pub distance: f64,
    pub fitness: f64,
}

impl FitnessValue {
    pub fn from_distance(distance: f64) -> Self {
        Self {
            distance,
            fitness: -distance,
        }
    }
}

/// Rescales excess demand onto the external series' scale:
/// `r̂(t) = A(t) * rms(ext) / rms(A)`, with `r̂ ≡ 0` when `A ≡ 0`.
pub fn normalize_demand(demand: &[i32], external: &[f64]) -> Result<Vec<f64>> {
    check_lengths(demand.len(), external.len())?;
    let ext_scale = rms(external);
    if ext_scale == 0.0 {
        return Err(Error::FlatWindow);
    }
    Ok(scale_demand(demand, ext_scale))
}

/// `A * target / rms(A)`, or zeros when `A ≡ 0`.
pub fn scale_demand(demand: &[i32], target: f64) -> Vec<f64> {
    let raw: Vec<f64> = demand.iter().map(|&a| a as f64).collect();
    let own = rms(&raw);
    if own == 0.0 {
        return alloc::vec![0.0; demand.len()];
    }
    let k = target / own;
    raw.into_iter().map(|a| a * k).collect()
}

fn check_lengths(left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(Error::LengthMismatch { left, right });
    }
    if left == 0 {
        return Err(Error::EmptyWindow);
    }
    Ok(())
}

pub fn manhattan(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

pub fn hamming<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

/// Distance between a demand series and the external window it was generated
/// against.
pub fn demand_distance(
    metric: FitnessMetric,
    zero: ZeroDemand,
    demand: &[i32],
    window: &Window<'_>,
) -> Result<FitnessValue> {
    check_lengths(demand.len(), window.len())?;
    let d = match metric {
        FitnessMetric::L1 => manhattan(&normalize_demand(demand, window.returns)?, window.returns),
        FitnessMetric::L2 => euclidean(&normalize_demand(demand, window.returns)?, window.returns),
        FitnessMetric::HammingBinary => demand
            .iter()
            .zip(window.binary)
            .filter(|(&a, &b)| sign2(a, zero) != b)
            .count() as f64,
        FitnessMetric::HammingTernary => demand
            .iter()
            .zip(window.ternary)
            .filter(|(&a, &t)| sign3(a) != t)
            .count() as f64,
        FitnessMetric::CrossCorrelation => {
            let raw: Vec<f64> = demand.iter().map(|&a| a as f64).collect();
            1.0 - pearson(&raw, window.returns)
        }
    };
    Ok(FitnessValue::from_distance(d))
}

/// [`demand_distance`] over full market steps.
pub fn distance(
    metric: FitnessMetric,
    zero: ZeroDemand,
    steps: &[MarketStep],
    window: &Window<'_>,
) -> Result<FitnessValue> {
    let demand: Vec<i32> = steps.iter().map(|s| s.excess_demand).collect();
    demand_distance(metric, zero, &demand, window)
}
