//! Reducers: single-point elimination, the sparse multipoint cascade and
//! the TurboMOR / PRIMA baselines.

mod model;
mod prima;
mod sip;
mod smp;
mod turbomor;

pub use model::{Method, ReducedSystem};
pub use prima::{prima_basis, prima_reduce};
pub use sip::{full_sip_stage, sparse_sip, StageResult, StageTransform};
pub use smp::{deflate_coupling, sip_reduce, smp_cascade, smp_reduce, Cascade, Deflation};
pub use turbomor::turbomor_reduce;

use serde::{Deserialize, Serialize};

use crate::sparse::SparseError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReductionError {
    #[error("expansion schedule is empty")]
    EmptySchedule,
    #[error("expansion point {0} must be finite and nonnegative")]
    InvalidPoint(f64),
    #[error("invalid options: {0}")]
    InvalidOptions(String),
    #[error(
        "stage {stage}: internal block not positive definite (pivot {value:e} at node {node})"
    )]
    NotPositiveDefinite {
        stage: usize,
        node: usize,
        value: f64,
    },
    #[error("stage {stage}: projected pencil lost definiteness")]
    Breakdown { stage: usize },
    #[error("requested order {requested} exceeds system dimension {available}")]
    OrderTooLarge { requested: usize, available: usize },
    #[error("invalid reduced model: {0}")]
    InvalidModel(String),
    #[error(transparent)]
    Sparse(#[from] SparseError),
}

/// Ordered expansion points `s₁..s_m` (rad/s, real, nonnegative).
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionSchedule {
    points: Vec<f64>,
}

impl ExpansionSchedule {
    pub fn new(points: Vec<f64>) -> Result<Self, ReductionError> {
        if points.is_empty() {
            return Err(ReductionError::EmptySchedule);
        }
        if let Some(&bad) = points.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
            return Err(ReductionError::InvalidPoint(bad));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Number of times `s` appears in the schedule.
    pub fn multiplicity(&self, s: f64) -> usize {
        self.points.iter().filter(|&&x| x == s).count()
    }

    /// Distinct points with their multiplicities, in order of first appearance.
    pub fn distinct(&self) -> Vec<(f64, usize)> {
        let mut out: Vec<(f64, usize)> = Vec::new();
        for &s in &self.points {
            match out.iter_mut().find(|(x, _)| *x == s) {
                Some(e) => e.1 += 1,
                None => out.push((s, 1)),
            }
        }
        out
    }
}

impl std::str::FromStr for ExpansionSchedule {
    type Err = String;
    /// Parses a comma-separated list such as `0,1e6,1e9`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let points = s
            .split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|e| format!("bad point {t:?}: {e}"))
            })
            .collect::<Result<Vec<_>, _>>()?;
        ExpansionSchedule::new(points).map_err(|e| e.to_string())
    }
}

/// Knobs of the multipoint reducer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReductionOptions {
    /// Fill budget: stage-1 elimination stops once `nnz(Ĝ + Ĉ)` would exceed
    /// `eta` times the current dimension. `f64::INFINITY` eliminates everything.
    pub eta: f64,
    /// RRQR truncation tolerance for the inter-stage coupling.
    pub delta: f64,
    pub sparsity_control: bool,
    pub deflation: bool,
}

impl Default for ReductionOptions {
    fn default() -> Self {
        Self {
            eta: 20.0,
            delta: 1e-6,
            sparsity_control: true,
            deflation: true,
        }
    }
}

impl ReductionOptions {
    pub fn validate(&self) -> Result<(), ReductionError> {
        if !(self.eta >= 1.0) {
            return Err(ReductionError::InvalidOptions(format!(
                "eta = {} must be ≥ 1",
                self.eta
            )));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(ReductionError::InvalidOptions(format!(
                "delta = {} must lie in (0, 1)",
                self.delta
            )));
        }
        Ok(())
    }
}
