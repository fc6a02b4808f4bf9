//! Configuration, validation and CSV output for the `opa-sim` binary.

pub mod commands;
pub mod config;
pub mod csv;
pub mod error;

pub use commands::{run, Command};
pub use error::CliError;

/// Configuration used when `--config` is not given.
pub const DEFAULT_CONFIG: &str = include_str!("../config/default.json");
