//! File formats, reports and the command-line driver for `eochain-core`.

pub mod cli;
pub mod dump;
pub mod error;
pub mod event_trace;
pub mod report;
pub mod scenario_file;

pub use crate::error::CliError;
