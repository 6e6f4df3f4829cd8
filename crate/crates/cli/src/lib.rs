//! Command-line driver for the `ssep` library: config loading, the
//! `exact`, `simulate`, `verify` and `report` commands, and JSON/CSV output.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use config::{OutputFormat, RunConfig, Tolerances};
pub use error::{CliError, Result};
