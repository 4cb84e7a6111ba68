//! Command-line front end for the `pasm-core` engines: tensor files,
//! experiment configs and the `quantize`, `run`, `simulate`, `cost`,
//! `sweep` and `selftest` commands.

pub mod commands;
pub mod config;
pub mod error;
pub mod fixtures;
pub mod io;

pub use commands::{cost_csv, cost_rows, run_cli, ReportRow, CSV_HEADER};
pub use config::ExperimentConfig;
pub use error::{CliError, CliResult};
