//! Symmetric sparse kernels: storage, ordering, LDLᵀ, Schur complements,
//! congruences and rank-revealing QR.

mod ldl;
mod ordering;
mod rrqr;
mod schur;
mod sym;

pub use ldl::{factor_pencil, spd_factorize, spd_solve, Ldl, Scalar, SpdFactor, PIVOT_TOL};
pub use ordering::{amd_order, Permutation};
pub use rrqr::{householder_qr, rrqr, Rrqr};
pub use schur::{congruence_transform, schur_port_block, CongruenceTransform, EliminationRecord};
pub use sym::{SymBuilder, SymSparse};

pub(crate) use ordering::min_degree_order;
pub(crate) use rrqr::{constrained_qr, orthonormal_complement, QrRule};
pub(crate) use sym::symmetrize;

/// Dense real block used for port-sized arithmetic.
pub type DenseBlock = nalgebra::DMatrix<f64>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SparseError {
    #[error("index ({row}, {col}) out of bounds for dimension {dim}")]
    IndexOutOfBounds { row: usize, col: usize, dim: usize },
    #[error("non-finite value at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("not a permutation")]
    InvalidPermutation,
    #[error("matrix is not positive definite: pivot {value:e} at node {pivot}")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("matrix is singular: pivot {value:e} at node {pivot}")]
    Singular { pivot: usize, value: f64 },
}
