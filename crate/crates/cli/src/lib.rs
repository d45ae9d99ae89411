//! Command-line front end for the qnslab pipelines.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod pipeline;
pub mod report;

pub use config::{Overrides, RunConfig};
pub use error::{CliError, CliResult};
