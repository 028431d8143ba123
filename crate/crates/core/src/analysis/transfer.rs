use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::sparse::{factor_pencil, Ldl, Scalar, SparseError};
use crate::{InputMap, LinearSystem};

use super::AnalysisError;

fn solve_ports<T: Scalar>(ldl: &Ldl<T>, input: InputMap<'_>, n: usize) -> DMatrix<T> {
    let p = input.ports();
    let dense: Option<DMatrix<f64>> = match input {
        InputMap::Dense(b) => Some(b.clone()),
        InputMap::Leading(_) => None,
    };
    let mut h = DMatrix::from_element(p, p, T::zero());
    let mut x = vec![T::zero(); n];
    for j in 0..p {
        match &dense {
            None => {
                x.iter_mut().for_each(|v| *v = T::zero());
                x[j] = T::from_real(1.0);
            }
            Some(b) => {
                for (i, v) in x.iter_mut().enumerate() {
                    *v = T::from_real(b[(i, j)]);
                }
            }
        }
        ldl.solve_in_place(&mut x);
        for i in 0..p {
            h[(i, j)] = match &dense {
                None => x[i],
                Some(b) => (0..n).fold(T::zero(), |acc, k| acc + T::from_real(b[(k, i)]) * x[k]),
            };
        }
    }
    h
}

fn singular(s: Complex64) -> impl Fn(SparseError) -> AnalysisError {
    move |e| match e {
        SparseError::Singular { .. } => AnalysisError::SingularAtPoint { re: s.re, im: s.im },
        other => other.into(),
    }
}

/// `H(s) = Bᵀ(G + sC)⁻¹B` at a complex frequency. One sparse factorization
/// per call; real `s` stays in real arithmetic.
pub fn eval_transfer<S: LinearSystem + ?Sized>(
    sys: &S,
    s: Complex64,
) -> Result<DMatrix<Complex64>, AnalysisError> {
    let n = sys.dim();
    if s.im == 0.0 {
        let ldl = factor_pencil(sys.g(), sys.c(), s.re).map_err(singular(s))?;
        Ok(solve_ports(&ldl, sys.input(), n).map(|v| Complex64::new(v, 0.0)))
    } else {
        let ldl = factor_pencil(sys.g(), sys.c(), s).map_err(singular(s))?;
        Ok(solve_ports(&ldl, sys.input(), n))
    }
}

/// Real-axis transfer function `H(s)` for real `s`.
pub fn eval_transfer_real<S: LinearSystem + ?Sized>(
    sys: &S,
    s: f64,
) -> Result<DMatrix<f64>, AnalysisError> {
    let ldl = factor_pencil(sys.g(), sys.c(), s).map_err(singular(Complex64::new(s, 0.0)))?;
    Ok(solve_ports(&ldl, sys.input(), sys.dim()))
}
