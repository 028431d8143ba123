//! Transfer functions, moments, error metrics, sweeps and the cascade
//! verifier.

mod cascade;
mod grid;
mod metrics;
mod moments;
mod sweep;
mod transfer;

pub use cascade::{verify_cascade, CascadeDiagnostics};
pub use grid::{Axis, FrequencyGrid};
pub use metrics::{
    relative_errors, spectral_norm, write_error_csv, ErrorPoint, ErrorReport, ErrorSummary,
};
pub use moments::{match_order, moments, MomentSeries};
pub use sweep::{read_sweep_csv, sweep, sweep_parallel, write_sweep_csv, SweepRow, TransferSample};
pub use transfer::{eval_transfer, eval_transfer_real};

use crate::reduction::ReductionError;
use crate::sparse::SparseError;

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error("G + sC is singular at s = {re} + {im}j")]
    SingularAtPoint { re: f64, im: f64 },
    #[error("port counts differ: {left} vs {right}")]
    PortMismatch { left: usize, right: usize },
    #[error("invalid frequency grid: {0}")]
    InvalidGrid(String),
    #[error("csv line {line}: {reason}")]
    Csv { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Sparse(#[from] SparseError),
    #[error(transparent)]
    Reduction(#[from] ReductionError),
}
