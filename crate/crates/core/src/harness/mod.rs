//! Experiment harness behind the `tvfb` binary: configuration, seeded
//! pipeline execution, sweeps, verification reports and CSV output.
//!
//! Every command is a pure function of its [`ExperimentConfig`]; identical
//! configs give byte-identical files.

mod checks;
mod config;
mod output;
mod pipeline;
mod sweep;

use thiserror::Error;

use crate::error::Error;

pub use checks::{cmd_verify, require_pass, run_checks, verify_csv, CheckRow, VERIFY_HEADER};
pub use config::{
    AlgorithmSpec, EtaX, ExperimentConfig, Family, GraphSchedule, GraphSpec, MetricMode,
    OutputSpec, ProblemSpec, Topology,
};
pub use output::{metadata_csv, metrics_csv, write_atomic, METADATA_HEADER};
pub use pipeline::{build_graph, cmd_run, execute, prepare, Prepared, RunOutput};
pub use sweep::{
    cell_config, cells_csv, cmd_sweep, run_sweep, summarize, summary_csv, Axis, CellResult,
    SummaryRow, SweepSpec, SWEEP_CELLS_HEADER, SWEEP_SUMMARY_HEADER,
};

/// Failure of a harness command, mapped onto the process exit code.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("infeasible graph: {0}")]
    Graph(Error),
    #[error("numerical abort: {0}")]
    Numerical(Error),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Graph(_) => 3,
            HarnessError::Numerical(_) => 4,
            HarnessError::Verification(_) => 5,
            HarnessError::Io { .. } => 1,
        }
    }
}

impl From<Error> for HarnessError {
    fn from(e: Error) -> Self {
        match e {
            Error::Disconnected { .. } | Error::RetryBudgetExhausted { .. } => {
                HarnessError::Graph(e)
            }
            Error::NonFinite { .. } => HarnessError::Numerical(e),
            Error::CertificateInfeasible { .. } => HarnessError::Verification(e.to_string()),
            Error::InvalidParameter(_) | Error::DimensionMismatch { .. } | Error::MissingBound => {
                HarnessError::Config(e.to_string())
            }
        }
    }
}
