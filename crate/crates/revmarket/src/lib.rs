//! Command-line front end for `revmarket-core`: price loading, run
//! configuration, checkpointed prediction records, reports and a rayon
//! executor.

pub mod commands;
pub mod config;
pub mod data;
pub mod error;
pub mod exec;
pub mod records;

pub use config::{Overrides, RunConfig};
pub use error::CliError;
