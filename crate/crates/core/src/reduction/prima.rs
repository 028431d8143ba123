use nalgebra::{DMatrix, DVector};

use crate::netlist::MnaSystem;
use crate::sparse::{spd_factorize, symmetrize, SymSparse};
use crate::LinearSystem;

use super::sip::map_spd;
use super::{Method, ReducedSystem, ReductionError};

/// Columns whose norm drops below this fraction of their norm before
/// orthogonalization are deflated.
const DEFLATION_TOL: f64 = 1e-12;

/// Orthonormal block Krylov basis of `(A⁻¹C, A⁻¹B)` with `A = G + s0·C`:
/// `r` blocks, full (twice-iterated) Gram–Schmidt, column deflation.
pub fn prima_basis(sys: &MnaSystem, r: usize, s0: f64) -> Result<DMatrix<f64>, ReductionError> {
    let (g, c, n) = (sys.g(), sys.c(), sys.dim());
    if !(s0.is_finite() && s0 >= 0.0) {
        return Err(ReductionError::InvalidPoint(s0));
    }
    if r == 0 {
        return Err(ReductionError::InvalidOptions(
            "block count must be at least 1".into(),
        ));
    }
    let nodes: Vec<usize> = (0..n).collect();
    let f = spd_factorize(&g.add_scaled(c, s0)?).map_err(map_spd(1, &nodes))?;
    let b = sys.input().to_dense(n);
    let mut next = f.solve(&b)?;
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for _ in 0..r {
        let start = basis.len();
        for col in next.column_iter() {
            let mut v = col.into_owned();
            let before = v.norm();
            if before == 0.0 {
                continue;
            }
            for _ in 0..2 {
                for q in &basis {
                    let h = q.dot(&v);
                    v.axpy(-h, q, 1.0);
                }
            }
            let after = v.norm();
            if after > DEFLATION_TOL * before && basis.len() < n {
                basis.push(v / after);
            }
        }
        if basis.len() == start {
            break;
        }
        let fresh = DMatrix::from_columns(&basis[start..]);
        next = f.solve(&c.mul_dense(&fresh))?;
    }
    Ok(if basis.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&basis)
    })
}

/// PRIMA: congruence projection onto [`prima_basis`]. Returns dense
/// `Ĝ = VᵀGV`, `Ĉ = VᵀCV` and `B̂ = VᵀB`; matches `2r` moments at `s0`.
pub fn prima_reduce(sys: &MnaSystem, r: usize, s0: f64) -> Result<ReducedSystem, ReductionError> {
    let v = prima_basis(sys, r, s0)?;
    let mut gh = v.tr_mul(&sys.g().mul_dense(&v));
    let mut ch = v.tr_mul(&sys.c().mul_dense(&v));
    symmetrize(&mut gh);
    symmetrize(&mut ch);
    let bh = v.rows(0, sys.ports()).transpose();
    ReducedSystem::new(
        Method::Prima,
        SymSparse::from_dense_lower(&gh)?,
        SymSparse::from_dense_lower(&ch)?,
        Some(bh),
        vec![v.ncols()],
        vec![s0],
        sys.port_names().to_vec(),
    )
}
