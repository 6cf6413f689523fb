//! Command-line front end for `smfft`: signal files, single runs with
//! JSON/CSV reports, scaling sweeps and the self-test battery.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;
pub mod signal_file;

pub use config::{Cli, CommandKind, Format, RunConfig};
pub use error::CliError;
pub use report::{RunReport, SweepRow};
