//! Up-looking sparse LDLᵀ on a fill-reducing permutation.
//!
//! The factorization never pivots, so it is reserved for matrices whose
//! leading principal minors are nonzero: SPD matrices and the complex
//! symmetric pencils `G + jωC` with `G` SPD and `C` PSD.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{amd_order, Permutation, SparseError, SymSparse};

/// Field the factorization runs over.
pub trait Scalar:
    Copy
    + Debug
    + PartialEq
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + nalgebra::Scalar
    + 'static
{
    fn zero() -> Self;
    fn from_real(v: f64) -> Self;
    fn modulus(self) -> f64;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn from_real(v: f64) -> Self {
        v
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn from_real(v: f64) -> Self {
        Complex64::new(v, 0.0)
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
}

/// Relative pivot tolerance: a pivot at or below `PIVOT_TOL · max|diag|` fails.
pub const PIVOT_TOL: f64 = 1e-14;

/// Elimination tree and column pointers for a fixed pattern and ordering.
#[derive(Debug, Clone)]
pub(crate) struct Symbolic {
    perm: Permutation,
    parent: Vec<usize>,
    col_ptr: Vec<usize>,
}

const NONE: usize = usize::MAX;

impl Symbolic {
    /// Analyses the pattern of `pattern` under its minimum-degree order.
    pub fn analyse(pattern: &SymSparse) -> Self {
        let perm = amd_order(pattern);
        let n = pattern.dim();
        let (fwd, inv) = (perm.forward(), perm.inverse());
        let mut parent = vec![NONE; n];
        let mut flag = vec![NONE; n];
        let mut count = vec![0usize; n];
        for k in 0..n {
            flag[k] = k;
            for (j, _) in pattern.row(fwd[k]) {
                let mut i = inv[j];
                if i < k {
                    while flag[i] != k {
                        if parent[i] == NONE {
                            parent[i] = k;
                        }
                        count[i] += 1;
                        flag[i] = k;
                        i = parent[i];
                    }
                }
            }
        }
        let mut col_ptr = Vec::with_capacity(n + 1);
        col_ptr.push(0);
        for c in &count {
            col_ptr.push(col_ptr.last().unwrap() + c);
        }
        Self {
            perm,
            parent,
            col_ptr,
        }
    }
}

/// Numeric factor `P A Pᵀ = L D Lᵀ` over `T`.
#[derive(Debug, Clone)]
pub struct Ldl<T: Scalar> {
    sym: Symbolic,
    row_idx: Vec<usize>,
    lx: Vec<T>,
    d: Vec<T>,
}

/// Failure of the numeric phase: pivot at permuted step `step`, original index `index`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PivotFailure {
    pub index: usize,
    pub value: f64,
}

impl<T: Scalar> Ldl<T> {
    /// Factors the matrix with pattern `pattern` whose stored values are given by
    /// `value(position in pattern storage)`.
    pub(crate) fn numeric(
        sym: Symbolic,
        pattern: &SymSparse,
        value: impl Fn(usize) -> T,
        accept: impl Fn(T, f64) -> bool,
    ) -> Result<Self, PivotFailure> {
        let n = pattern.dim();
        let (fwd, inv) = (sym.perm.forward().to_vec(), sym.perm.inverse().to_vec());
        let nnz_l = sym.col_ptr[n];
        let mut row_idx = vec![0usize; nnz_l];
        let mut lx = vec![T::zero(); nnz_l];
        let mut d = vec![T::zero(); n];
        let mut y = vec![T::zero(); n];
        let mut flag = vec![NONE; n];
        let mut pattern_buf = vec![0usize; n];
        let mut lnz = vec![0usize; n];

        let (rp, ci) = (pattern.row_ptr(), pattern.col_idx());
        let mut max_diag = 0.0_f64;
        for i in 0..n {
            for p in rp[i]..rp[i + 1] {
                if ci[p] == i {
                    max_diag = max_diag.max(value(p).modulus());
                }
            }
        }
        let tol = PIVOT_TOL * max_diag;

        for k in 0..n {
            y[k] = T::zero();
            let mut top = n;
            flag[k] = k;
            let kk = fwd[k];
            for p in rp[kk]..rp[kk + 1] {
                let mut i = inv[ci[p]];
                if i <= k {
                    y[i] += value(p);
                    let mut len = 0;
                    while flag[i] != k {
                        pattern_buf[len] = i;
                        len += 1;
                        flag[i] = k;
                        i = sym.parent[i];
                    }
                    while len > 0 {
                        top -= 1;
                        len -= 1;
                        pattern_buf[top] = pattern_buf[len];
                    }
                }
            }
            let mut dk = y[k];
            y[k] = T::zero();
            for &i in &pattern_buf[top..n] {
                let yi = y[i];
                y[i] = T::zero();
                let end = sym.col_ptr[i] + lnz[i];
                for q in sym.col_ptr[i]..end {
                    let r = row_idx[q];
                    y[r] -= lx[q] * yi;
                }
                let l_ki = yi / d[i];
                dk -= l_ki * yi;
                row_idx[end] = k;
                lx[end] = l_ki;
                lnz[i] += 1;
            }
            if !accept(dk, tol) {
                return Err(PivotFailure {
                    index: kk,
                    value: dk.modulus(),
                });
            }
            d[k] = dk;
        }
        Ok(Self {
            sym,
            row_idx,
            lx,
            d,
        })
    }

    pub fn dim(&self) -> usize {
        self.d.len()
    }

    pub fn permutation(&self) -> &Permutation {
        &self.sym.perm
    }

    fn forward_l(&self, x: &mut [T]) {
        for j in 0..self.dim() {
            let xj = x[j];
            for q in self.sym.col_ptr[j]..self.sym.col_ptr[j + 1] {
                x[self.row_idx[q]] -= self.lx[q] * xj;
            }
        }
    }

    fn backward_lt(&self, x: &mut [T]) {
        for j in (0..self.dim()).rev() {
            let mut xj = x[j];
            for q in self.sym.col_ptr[j]..self.sym.col_ptr[j + 1] {
                xj -= self.lx[q] * x[self.row_idx[q]];
            }
            x[j] = xj;
        }
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [T]) {
        let n = self.dim();
        let fwd = self.sym.perm.forward();
        let mut x: Vec<T> = (0..n).map(|k| b[fwd[k]]).collect();
        self.forward_l(&mut x);
        for (xi, di) in x.iter_mut().zip(&self.d) {
            *xi = *xi / *di;
        }
        self.backward_lt(&mut x);
        for k in 0..n {
            b[fwd[k]] = x[k];
        }
    }

    pub fn solve_matrix(&self, rhs: &DMatrix<T>) -> Result<DMatrix<T>, SparseError> {
        if rhs.nrows() != self.dim() {
            return Err(SparseError::DimensionMismatch {
                expected: self.dim(),
                found: rhs.nrows(),
            });
        }
        let mut out = rhs.clone();
        let mut col = vec![T::zero(); self.dim()];
        for c in 0..rhs.ncols() {
            for i in 0..self.dim() {
                col[i] = rhs[(i, c)];
            }
            self.solve_in_place(&mut col);
            for i in 0..self.dim() {
                out[(i, c)] = col[i];
            }
        }
        Ok(out)
    }
}

impl Ldl<f64> {
    /// `y = K⁻¹ x` where `A = K Kᵀ`, `K = Pᵀ L D^{1/2}`.
    pub(crate) fn half_solve(&self, x: &[f64]) -> Vec<f64> {
        let fwd = self.sym.perm.forward();
        let mut y: Vec<f64> = (0..self.dim()).map(|k| x[fwd[k]]).collect();
        self.forward_l(&mut y);
        for (yi, di) in y.iter_mut().zip(&self.d) {
            *yi /= di.sqrt();
        }
        y
    }

    /// `x = K⁻ᵀ y`.
    pub(crate) fn half_solve_transpose(&self, y: &[f64]) -> Vec<f64> {
        let fwd = self.sym.perm.forward();
        let mut z: Vec<f64> = y.iter().zip(&self.d).map(|(v, d)| v / d.sqrt()).collect();
        self.backward_lt(&mut z);
        let mut x = vec![0.0; self.dim()];
        for k in 0..self.dim() {
            x[fwd[k]] = z[k];
        }
        x
    }
}

/// Factorization of an SPD matrix supporting repeated solves.
#[derive(Debug, Clone)]
pub struct SpdFactor {
    inner: Ldl<f64>,
}

/// Factors an SPD matrix; fails with [`SparseError::NotPositiveDefinite`] when a
/// pivot drops to `1e-14 · max diag` or below.
pub fn spd_factorize(a: &SymSparse) -> Result<SpdFactor, SparseError> {
    let sym = Symbolic::analyse(a);
    let vals = a.values();
    Ldl::numeric(sym, a, |p| vals[p], |d, tol| d > tol && d.is_finite())
        .map(|inner| SpdFactor { inner })
        .map_err(|f| SparseError::NotPositiveDefinite {
            pivot: f.index,
            value: f.value,
        })
}

impl SpdFactor {
    pub fn dim(&self) -> usize {
        self.inner.dim()
    }

    /// Elimination order the factor was computed with.
    pub fn permutation(&self) -> &Permutation {
        self.inner.permutation()
    }

    pub fn solve(&self, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>, SparseError> {
        self.inner.solve_matrix(rhs)
    }

    pub fn solve_vec(&self, b: &[f64]) -> Result<Vec<f64>, SparseError> {
        if b.len() != self.dim() {
            return Err(SparseError::DimensionMismatch {
                expected: self.dim(),
                found: b.len(),
            });
        }
        let mut x = b.to_vec();
        self.inner.solve_in_place(&mut x);
        Ok(x)
    }

    pub(crate) fn ldl(&self) -> &Ldl<f64> {
        &self.inner
    }
}

/// Solves each column of `rhs` against the factored matrix.
pub fn spd_solve(f: &SpdFactor, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>, SparseError> {
    f.solve(rhs)
}

/// Factors the pencil `G + s C` for a (possibly complex) shift `s`.
///
/// The only requirement is that no pivot vanishes; a pivot with modulus at or
/// below `1e-14 · max|diag|` is reported as [`SparseError::Singular`].
pub fn factor_pencil<T: Scalar>(g: &SymSparse, c: &SymSparse, s: T) -> Result<Ldl<T>, SparseError> {
    if g.dim() != c.dim() {
        return Err(SparseError::DimensionMismatch {
            expected: g.dim(),
            found: c.dim(),
        });
    }
    let pattern = g.add_scaled(c, 0.0)?;
    let gv: Vec<T> = (0..pattern.dim())
        .flat_map(|i| pattern.row(i).map(move |(j, _)| (i, j)))
        .map(|(i, j)| T::from_real(g.get(i, j)) + s * T::from_real(c.get(i, j)))
        .collect();
    let sym = Symbolic::analyse(&pattern);
    Ldl::numeric(
        sym,
        &pattern,
        |p| gv[p],
        |d, tol| {
            let m = d.modulus();
            m > tol && m.is_finite()
        },
    )
    .map_err(|f| SparseError::Singular {
        pivot: f.index,
        value: f.value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::SymBuilder;

    fn mat(n: usize, entries: &[(usize, usize, f64)]) -> SymSparse {
        let mut b = SymBuilder::new(n);
        for &(i, j, v) in entries {
            b.add(i, j, v);
        }
        b.build().unwrap()
    }

    #[test]
    fn scaled_identity_solve() {
        let f = spd_factorize(&SymSparse::scaled_identity(3, 2.0)).unwrap();
        assert_eq!(f.solve_vec(&[1.0, 1.0, 1.0]).unwrap(), vec![0.5, 0.5, 0.5]);
    }

    #[test]
    fn two_by_two_hand_inverse() {
        let a = mat(2, &[(0, 0, 2.0), (1, 1, 2.0), (0, 1, -1.0)]);
        let x = spd_factorize(&a).unwrap().solve_vec(&[1.0, 0.0]).unwrap();
        assert!((x[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((x[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn singular_matrix_is_not_spd() {
        let a = mat(2, &[(0, 0, 1.0), (1, 1, 1.0), (0, 1, 1.0)]);
        assert!(matches!(
            spd_factorize(&a),
            Err(SparseError::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn identity_factor_leaves_rhs() {
        let f = spd_factorize(&SymSparse::identity(4)).unwrap();
        let rhs = DMatrix::from_fn(4, 3, |i, j| (i * 3 + j) as f64 - 2.5);
        assert_eq!(f.solve(&rhs).unwrap(), rhs);
    }

    #[test]
    fn dimension_mismatch() {
        let f = spd_factorize(&SymSparse::identity(3)).unwrap();
        assert!(f.solve(&DMatrix::zeros(2, 1)).is_err());
    }

    #[test]
    fn half_solves_compose_to_inverse() {
        let a = mat(
            3,
            &[
                (0, 0, 4.0),
                (1, 1, 3.0),
                (2, 2, 2.0),
                (0, 1, -1.0),
                (1, 2, -0.5),
            ],
        );
        let f = spd_factorize(&a).unwrap();
        let b = [1.0, -2.0, 0.5];
        let x = f.ldl().half_solve_transpose(&f.ldl().half_solve(&b));
        let direct = f.solve_vec(&b).unwrap();
        for (u, v) in x.iter().zip(&direct) {
            assert!((u - v).abs() < 1e-14);
        }
    }

    #[test]
    fn complex_pencil_solve() {
        let g = mat(2, &[(0, 0, 1.0), (1, 1, 2.0), (0, 1, -1.0)]);
        let c = mat(2, &[(1, 1, 1.0)]);
        let s = Complex64::new(0.0, 1.0);
        let f = factor_pencil(&g, &c, s).unwrap();
        let mut b = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        f.solve_in_place(&mut b);
        // H(s) = (2+s)/(1+s)
        let h = (Complex64::new(2.0, 0.0) + s) / (Complex64::new(1.0, 0.0) + s);
        assert!((b[0] - h).norm() < 1e-15);
    }
}
