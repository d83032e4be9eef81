//! Price ingestion results, return series and their discrete codings, and
//! market regime labels.

use alloc::vec::Vec;
use core::fmt;

use chrono::NaiveDate;
use libm::{exp, log};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::History;

/// One daily closing price.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PricePoint {
    pub date: NaiveDate,
    pub close: f64,
}

/// Daily closes sorted by date. At least two entries, strictly increasing
/// dates, strictly positive closes.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    entries: Vec<PricePoint>,
}

impl PriceSeries {
    /// Validates and sorts `entries` ascending by date.
    pub fn new(mut entries: Vec<PricePoint>) -> Result<Self> {
        for p in &entries {
            if !p.close.is_finite() || p.close <= 0.0 {
                return Err(Error::NonPositivePrice {
                    date: p.date,
                    price: p.close,
                });
            }
        }
        entries.sort_by_key(|p| p.date);
        if let Some(w) = entries.windows(2).find(|w| w[0].date == w[1].date) {
            return Err(Error::DuplicateDate(w[0].date));
        }
        if entries.len() < 2 {
            return Err(Error::SeriesTooShort {
                min: 2,
                got: entries.len(),
            });
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[PricePoint] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReturnKind {
    #[default]
    Log,
    Simple,
}

/// Binary market symbol: up or down.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum Sign {
    Up,
    Down,
}

impl From<Sign> for i8 {
    fn from(s: Sign) -> i8 {
        s.value()
    }
}

impl TryFrom<i8> for Sign {
    type Error = &'static str;

    fn try_from(v: i8) -> core::result::Result<Self, Self::Error> {
        match v {
            1 => Ok(Sign::Up),
            -1 => Ok(Sign::Down),
            _ => Err("sign must be +1 or -1"),
        }
    }
}

impl Sign {
    /// Binary coding of a return. Exact zero codes as `Up`.
    #[inline]
    pub fn of_return(r: f64) -> Sign {
        if r >= 0.0 {
            Sign::Up
        } else {
            Sign::Down
        }
    }

    #[inline]
    pub fn value(self) -> i8 {
        match self {
            Sign::Up => 1,
            Sign::Down => -1,
        }
    }

    #[inline]
    pub fn flip(self) -> Sign {
        match self {
            Sign::Up => Sign::Down,
            Sign::Down => Sign::Up,
        }
    }

    #[inline]
    pub fn is_up(self) -> bool {
        self == Sign::Up
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Up => "+1",
            Sign::Down => "-1",
        })
    }
}

/// Exact three-way sign.
#[inline]
pub fn ternary_of(r: f64) -> i8 {
    if r > 0.0 {
        1
    } else if r < 0.0 {
        -1
    } else {
        0
    }
}

/// Dated returns together with their binary and ternary codings.
///
/// `dates[t]` is the day on which `returns[t]` was realized, i.e. the later
/// of the two closes it was computed from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReturnSeries {
    dates: Vec<NaiveDate>,
    returns: Vec<f64>,
    binary: Vec<Sign>,
    ternary: Vec<i8>,
}

impl ReturnSeries {
    /// Log returns of `prices`.
    pub fn from_prices(prices: &PriceSeries, kind: ReturnKind) -> Result<Self> {
        let e = prices.entries();
        if e.len() < 2 {
            return Err(Error::SeriesTooShort {
                min: 2,
                got: e.len(),
            });
        }
        let dates = e[1..].iter().map(|p| p.date).collect();
        let returns = e
            .windows(2)
            .map(|w| match kind {
                ReturnKind::Log => log(w[1].close / w[0].close),
                ReturnKind::Simple => w[1].close / w[0].close - 1.0,
            })
            .collect();
        Self::from_returns(dates, returns)
    }

    /// Builds a series from already computed returns (synthetic data).
    pub fn from_returns(dates: Vec<NaiveDate>, returns: Vec<f64>) -> Result<Self> {
        if dates.len() != returns.len() {
            return Err(Error::MisalignedSeries {
                dates: dates.len(),
                returns: returns.len(),
            });
        }
        if returns.is_empty() {
            return Err(Error::SeriesTooShort { min: 1, got: 0 });
        }
        if let Some(i) = returns.iter().position(|r| !r.is_finite()) {
            return Err(Error::NonFiniteReturn(i));
        }
        if let Some(w) = dates.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::DuplicateDate(w[1]));
        }
        let mut binary = Vec::with_capacity(returns.len());
        let mut ternary = Vec::with_capacity(returns.len());
        for (i, &r) in returns.iter().enumerate() {
            if r == 0.0 {
                log::info!("zero return on {}: binary +1, ternary 0", dates[i]);
            }
            binary.push(Sign::of_return(r));
            ternary.push(ternary_of(r));
        }
        Ok(Self {
            dates,
            returns,
            binary,
            ternary,
        })
    }

    pub fn len(&self) -> usize {
        self.returns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.returns.is_empty()
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn returns(&self) -> &[f64] {
        &self.returns
    }

    pub fn binary(&self) -> &[Sign] {
        &self.binary
    }

    pub fn ternary(&self) -> &[i8] {
        &self.ternary
    }

    pub fn index_of(&self, date: NaiveDate) -> Option<usize> {
        self.dates.binary_search(&date).ok()
    }

    /// Copy of the first `end` days. Anything at or after `end` is not
    /// reachable from the result.
    pub fn prefix(&self, end: usize) -> ReturnSeries {
        let end = end.min(self.len());
        ReturnSeries {
            dates: self.dates[..end].to_vec(),
            returns: self.returns[..end].to_vec(),
            binary: self.binary[..end].to_vec(),
            ternary: self.ternary[..end].to_vec(),
        }
    }

    /// Days `[start, end)` together with the `memory` binary symbols that
    /// immediately precede them.
    pub fn window(&self, start: usize, end: usize, memory: u8) -> Result<Window<'_>> {
        if start >= end {
            return Err(Error::EmptyWindow);
        }
        if end > self.len() {
            return Err(Error::LengthMismatch {
                left: end,
                right: self.len(),
            });
        }
        let m = memory as usize;
        if start < m {
            return Err(Error::InsufficientHistory {
                index: start,
                required: m,
            });
        }
        Ok(Window {
            warm: History::from_signs(&self.binary[start - m..start])?,
            returns: &self.returns[start..end],
            binary: &self.binary[start..end],
            ternary: &self.ternary[start..end],
        })
    }

    /// The `memory` binary symbols ending at day `end - 1`.
    pub fn history_before(&self, end: usize, memory: u8) -> Result<History> {
        let m = memory as usize;
        if end < m || end > self.len() {
            return Err(Error::InsufficientHistory {
                index: end,
                required: m,
            });
        }
        History::from_signs(&self.binary[end - m..end])
    }
}

/// A contiguous stretch of the external series plus its warm-up history.
#[derive(Debug, Clone, Copy)]
pub struct Window<'a> {
    pub warm: History,
    pub returns: &'a [f64],
    pub binary: &'a [Sign],
    pub ternary: &'a [i8],
}

impl Window<'_> {
    pub fn len(&self) -> usize {
        self.returns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.returns.is_empty()
    }
}

/// `close[t] / close[0]` reconstructed from log returns.
pub fn cumulative_growth(log_returns: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(log_returns.len() + 1);
    out.push(1.0);
    for r in log_returns {
        acc += r;
        out.push(exp(acc));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeLabel {
    TrendingUp,
    TrendingDown,
    NonTrending,
    Unclassified,
}

impl RegimeLabel {
    pub fn is_trending(self) -> bool {
        matches!(self, RegimeLabel::TrendingUp | RegimeLabel::TrendingDown)
    }
}

/// Labels a window by its up/down day counts: at least twice as many up days
/// as down days is an up trend (and symmetrically), equal counts are
/// non-trending, anything else is unclassified.
pub fn classify_regime(returns: &[f64]) -> Result<RegimeLabel> {
    if returns.is_empty() {
        return Err(Error::EmptyWindow);
    }
    let up = returns.iter().filter(|&&r| r > 0.0).count();
    let down = returns.iter().filter(|&&r| r < 0.0).count();
    let dominates = |a: usize, b: usize| (b > 0 && a >= 2 * b) || (b == 0 && a > 0);
    Ok(if dominates(up, down) {
        RegimeLabel::TrendingUp
    } else if dominates(down, up) {
        RegimeLabel::TrendingDown
    } else if up == down {
        RegimeLabel::NonTrending
    } else {
        RegimeLabel::Unclassified
    })
}
