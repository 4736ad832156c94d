//! Run configuration shared by every command and embedded in every report.

use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Text,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub rank_tol: f64,
    pub solve_tol: f64,
    pub equality_tol: f64,
    /// Maximum concurrent fibers; 0 means one thread per core.
    pub parallelism: usize,
    pub output_format: OutputFormat,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            rank_tol: kaplansky_core::DEFAULT_RANK_TOL,
            solve_tol: kaplansky_core::DEFAULT_SOLVE_TOL,
            equality_tol: kaplansky_core::DEFAULT_EQUALITY_TOL,
            parallelism: 0,
            output_format: OutputFormat::Text,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        for (name, value) in [
            ("rank-tol", self.rank_tol),
            ("solve-tol", self.solve_tol),
            ("equality-tol", self.equality_tol),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(CliError::parse(format!(
                    "--{name} must be strictly positive, got {value}"
                )));
            }
        }
        Ok(())
    }
}
