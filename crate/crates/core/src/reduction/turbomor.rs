use nalgebra::DMatrix;

use crate::netlist::MnaSystem;
use crate::sparse::{constrained_qr, spd_factorize, symmetrize, QrRule, SymSparse};
use crate::LinearSystem;

use super::sip::map_spd;
use super::smp::assemble_stages;
use super::{full_sip_stage, Method, ReducedSystem, ReductionError, StageResult, StageTransform};

/// TurboMOR: exact port elimination at `s = 0` followed by `r − 1` steps of
/// block Lanczos on `K⁻¹ C_I K⁻ᵀ` (`G_I = K Kᵀ`), started from the scaled
/// coupling `K⁻¹ Ĉ_C`.
///
/// The model has order exactly `r·p`; `Ĝ` is block diagonal (the port Schur
/// complement followed by identities) and `Ĉ` block tridiagonal. It matches
/// `2r` moments at zero.
pub fn turbomor_reduce(sys: &MnaSystem, r: usize) -> Result<ReducedSystem, ReductionError> {
    let (g, c, p, n) = (sys.g(), sys.c(), sys.ports(), sys.dim());
    if r == 0 {
        return Err(ReductionError::InvalidOptions(
            "stage count must be at least 1".into(),
        ));
    }
    if r * p > n {
        return Err(ReductionError::OrderTooLarge {
            requested: r * p,
            available: n,
        });
    }
    let first = full_sip_stage(g, c, p, 0.0)?;
    let interior: Vec<usize> = (p..n).collect();
    let ni = interior.len();
    let mut stages = Vec::with_capacity(r);
    if r > 1 {
        let gi = g.submatrix(&interior);
        let ci = c.submatrix(&interior);
        let factor = spd_factorize(&gi).map_err(map_spd(1, &interior))?;
        let ldl = factor.ldl();
        let columns = |m: &DMatrix<f64>, f: &dyn Fn(&[f64]) -> Vec<f64>| {
            let cols: Vec<_> = m
                .column_iter()
                .map(|col| nalgebra::DVector::from_vec(f(col.as_slice())))
                .collect();
            DMatrix::from_columns(&cols)
        };
        let mut block = columns(&first.coupling_out, &|x| ldl.half_solve(x));
        let mut span = DMatrix::zeros(ni, 0);
        stages.push(first);
        for k in 2..=r {
            let qr = constrained_qr(&span, &block, QrRule::Plain);
            let b = qr.coupling();
            let y = qr.q;
            let basis = columns(&y, &|x| ldl.half_solve_transpose(x));
            let cw = ci.mul_dense(&basis);
            let my = columns(&cw, &|x| ldl.half_solve(x));
            let mut cp = y.tr_mul(&my);
            symmetrize(&mut cp);
            let mut e = DMatrix::zeros(ni, span.ncols() + y.ncols());
            e.columns_mut(0, span.ncols()).copy_from(&span);
            e.columns_mut(span.ncols(), y.ncols()).copy_from(&y);
            block = &my - &e * e.tr_mul(&my);
            stages.push(StageResult {
                k,
                point: 0.0,
                gp: SymSparse::identity(y.ncols()),
                cp: SymSparse::from_dense_lower(&cp)?,
                coupling_in: Some(b),
                coupling_out: block.clone(),
                transform: StageTransform::Projection { basis },
                decoupling_residual: 0.0,
            });
            span = e;
        }
    } else {
        stages.push(first);
    }
    assemble_stages(&stages, sys.port_names().to_vec(), Method::Turbomor)
}
