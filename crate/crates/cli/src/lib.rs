//! Command-line front end: config ingestion, `solve`, `verify` and `bench`,
//! and the on-disk formats they read and write.

pub mod artifacts;
pub mod bench;
pub mod config;
pub mod exit;
pub mod run;

pub use exit::{CliError, CliResult, ExitCode};
