use alloc::string::String;

use chrono::NaiveDate;
use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("series too short: need at least {min} entries, got {got}")]
    SeriesTooShort { min: usize, got: usize },
    #[error("non-positive price {price} on {date}")]
    NonPositivePrice { date: NaiveDate, price: f64 },
    #[error("duplicate date {0}")]
    DuplicateDate(NaiveDate),
    #[error("dates and returns differ in length ({dates} vs {returns})")]
    MisalignedSeries { dates: usize, returns: usize },
    #[error("non-finite return at index {0}")]
    NonFiniteReturn(usize),
    #[error("empty window")]
    EmptyWindow,
    #[error("empty input")]
    EmptyInput,
    #[error("history holds {got} symbols but the game remembers {expected}")]
    HistoryLength { expected: usize, got: usize },
    #[error("invalid hyperparameters: {0}")]
    InvalidHyper(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("external window has zero scale; L1/L2 comparison is undefined")]
    FlatWindow,
    #[error("insufficient history: index {index} needs at least {required} preceding days")]
    InsufficientHistory { index: usize, required: usize },
    #[error("genome shape does not match the game hyperparameters")]
    GenomeMismatch,
    #[error("no regime label for {0}")]
    UnlabeledDate(NaiveDate),
    #[error("unknown name {0:?}")]
    UnknownName(String),
}
