//! File formats, reports, and command implementations for the `kaplansky`
//! batch CLI. The binary in `main.rs` is a thin argument-parsing shell over
//! [`commands`]; tests drive the same functions directly.

pub mod commands;
pub mod error;
pub mod report;
pub mod run;
pub mod schema;

pub use error::CliError;
pub use run::{OutputFormat, RunConfig};
