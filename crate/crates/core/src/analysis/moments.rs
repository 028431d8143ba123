use nalgebra::DMatrix;

use crate::sparse::{factor_pencil, SparseError};
use crate::LinearSystem;

use super::AnalysisError;

/// Taylor coefficients `M_k` of `H(s)` about `s0`:
/// `H(s) = Σ M_k (s − s0)^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSeries {
    pub s0: f64,
    pub terms: Vec<DMatrix<f64>>,
}

/// First `count` moments via `v₀ = A⁻¹B`, `v_{k+1} = A⁻¹C v_k`,
/// `M_k = (−1)^k Bᵀ v_k`, with a single factorization of `A = G + s0·C`.
pub fn moments<S: LinearSystem + ?Sized>(
    sys: &S,
    s0: f64,
    count: usize,
) -> Result<MomentSeries, AnalysisError> {
    let n = sys.dim();
    let ldl = factor_pencil(sys.g(), sys.c(), s0).map_err(|e| match e {
        SparseError::Singular { .. } => AnalysisError::SingularAtPoint { re: s0, im: 0.0 },
        other => other.into(),
    })?;
    let b = sys.input().to_dense(n);
    let mut v = ldl.solve_matrix(&b)?;
    let mut terms = Vec::with_capacity(count);
    for k in 0..count {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        terms.push(b.tr_mul(&v) * sign);
        if k + 1 < count {
            v = ldl.solve_matrix(&sys.c().mul_dense(&v))?;
        }
    }
    Ok(MomentSeries { s0, terms })
}

/// Number of leading moments of `b` that agree with `a`, each within
/// `‖a_k − b_k‖_F ≤ tol·‖a_k‖_F`.
pub fn match_order(a: &MomentSeries, b: &MomentSeries, tol: f64) -> usize {
    a.terms
        .iter()
        .zip(&b.terms)
        .take_while(|(x, y)| x.shape() == y.shape() && (*x - *y).norm() <= tol * x.norm())
        .count()
}
