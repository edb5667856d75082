//! Library side of the `mbsts` command-line tool: run configuration and the
//! `simulate`, `train`, `forecast` and `report` commands.

pub mod commands;
pub mod config;
pub mod error;

pub use commands::{chain_dir, forecast, report, simulate, train, Overrides};
pub use config::{LoadedConfig, RunConfig, resolved_name};
pub use error::CliError;
