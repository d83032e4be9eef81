//! Reverse-engineering of one-dimensional return series with grand-canonical
//! minority/majority games.
//!
//! A population of candidate agent ensembles ("third party games") is evolved
//! by a simple genetic algorithm until the excess demand they generate tracks
//! an external return series. The recovered ensembles then forecast the sign
//! of the next return, and the forecasts are scored against random-guess
//! baselines.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, the command line and
//! the thread pool live in the `revmarket` crate; parallel sections here are
//! expressed through [`exec::Executor`].

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod blackbox;
pub mod error;
pub mod evaluation;
pub mod exec;
pub mod fitness;
pub mod ga;
pub mod game;
pub mod market;
pub mod pipeline;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use exec::{Executor, Serial};
pub use fitness::{FitnessMetric, FitnessValue};
pub use ga::{GaConfig, GaRunResult, Genome};
pub use game::{GameVariant, Hyper, MarketStep, StrategyTable, ThirdPartyGame};
pub use market::{PriceSeries, RegimeLabel, ReturnSeries, Sign};
pub use pipeline::{PredictionRecord, WindowSpec};
