//! File formats, sample ingestion and the command surface of the
//! `ltebounds` binary.

pub mod app;
pub mod error;
pub mod files;
pub mod report;
pub mod samples;

pub use app::{execute, run, Cli, Command, Outcome};
pub use error::{CliError, Result};
