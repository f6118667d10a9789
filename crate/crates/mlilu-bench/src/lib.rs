//! Experiment driver: JSON configs and presets, case execution and CSV
//! reports.

pub mod config;
pub mod report;
pub mod run;

use thiserror::Error;

pub use config::{parse_configs, preset, suite, RunConfig};
pub use report::{ReportRow, TimingRow};
pub use run::{export_matrix, run_case, write_case, CaseResult};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    MatrixMarket(#[from] mlilu::mmio::MmError),
    #[error("solver failed: {0}")]
    Solver(String),
}

macro_rules! solver_error {
    ($($t:ty),*) => {$(
        impl From<$t> for BenchError {
            fn from(e: $t) -> Self {
                BenchError::Solver(e.to_string())
            }
        }
    )*};
}

solver_error!(
    mlilu::discretize::DiscretizeError,
    mlilu::precond::PrecondError,
    mlilu::krylov::KrylovError,
    mlilu::nonlinear::NonlinearError
);
