//! Config, file formats, and pipelines behind the `pqlap` binary.

pub mod config;
pub mod error;
pub mod output;
pub mod pipeline;

pub use config::{load, validate, Diagnostic, RunConfig, Severity};
pub use error::CliError;
pub use pipeline::{run, RunOptions, Status};
