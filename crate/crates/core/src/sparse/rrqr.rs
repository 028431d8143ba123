//! Householder QR, optionally with column pivoting and a rank-revealing stop.

use nalgebra::DMatrix;

use super::Permutation;

/// Result of a (rank-revealing) QR factorization `M P = Q [R_top; R22]`.
#[derive(Debug, Clone)]
pub struct Rrqr {
    /// Orthonormal columns, `rows(M) × rank`.
    pub q: DMatrix<f64>,
    /// Upper trapezoidal `rank × cols(M)`, columns in pivoted order.
    pub r_top: DMatrix<f64>,
    pub perm: Permutation,
    pub rank: usize,
}

impl Rrqr {
    /// `R_top Pᵀ`: the retained rows in the original column order, so that
    /// `M ≈ Q · coupling()`.
    pub fn coupling(&self) -> DMatrix<f64> {
        let mut b = DMatrix::zeros(self.r_top.nrows(), self.r_top.ncols());
        for (j, &orig) in self.perm.forward().iter().enumerate() {
            b.set_column(orig, &self.r_top.column(j));
        }
        b
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum QrRule {
    /// No pivoting; every column is processed.
    Plain,
    /// Column pivoting, stopping once `‖R22‖₂ ≤ delta · ‖R11‖₂`.
    RankRevealing { delta: f64 },
}

const POWER_ITERATIONS: usize = 20;

/// Rank-revealing QR with truncation rule `‖R22‖₂ ≤ delta ‖R11‖₂`.
pub fn rrqr(m: &DMatrix<f64>, delta: f64) -> Rrqr {
    constrained_qr(
        &DMatrix::zeros(m.nrows(), 0),
        m,
        QrRule::RankRevealing { delta },
    )
}

/// Plain Householder QR (no pivoting); `rank = min(rows, cols)`.
pub fn householder_qr(m: &DMatrix<f64>) -> Rrqr {
    constrained_qr(&DMatrix::zeros(m.nrows(), 0), m, QrRule::Plain)
}

struct Reflectors {
    vs: Vec<(usize, Vec<f64>, f64)>,
}

impl Reflectors {
    /// Applies `H_0 H_1 … H_{h-1}` to `x` (i.e. forms `Q x`).
    fn apply_q(&self, x: &mut [f64]) {
        for (start, v, beta) in self.vs.iter().rev() {
            apply_reflector(x, *start, v, *beta);
        }
    }

    fn q_columns(&self, m: usize, cols: std::ops::Range<usize>) -> DMatrix<f64> {
        let mut q = DMatrix::zeros(m, cols.len());
        let mut e = vec![0.0; m];
        for (c, j) in cols.enumerate() {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            self.apply_q(&mut e);
            for i in 0..m {
                q[(i, c)] = e[i];
            }
        }
        q
    }
}

fn apply_reflector(x: &mut [f64], start: usize, v: &[f64], beta: f64) {
    if beta == 0.0 {
        return;
    }
    let dot: f64 = v.iter().zip(&x[start..]).map(|(a, b)| a * b).sum();
    let f = beta * dot;
    for (xi, vi) in x[start..].iter_mut().zip(v) {
        *xi -= f * vi;
    }
}

fn column_norm(w: &DMatrix<f64>, col: usize, from: usize) -> f64 {
    w.column(col).rows_range(from..).norm()
}

/// Lower bound on `‖block‖₂` by power iteration on `blockᵀ block`.
fn spectral_norm_estimate(block: &DMatrix<f64>) -> f64 {
    if block.is_empty() {
        return 0.0;
    }
    let (best, best_norm) = (0..block.ncols())
        .map(|j| (j, block.column(j).norm()))
        .fold((0, 0.0), |acc, c| if c.1 > acc.1 { c } else { acc });
    if best_norm == 0.0 {
        return 0.0;
    }
    let mut x = nalgebra::DVector::zeros(block.ncols());
    x[best] = 1.0;
    let mut est = best_norm;
    for _ in 0..POWER_ITERATIONS {
        let y = block * &x;
        let z = block.transpose() * y;
        let zn = z.norm();
        if zn == 0.0 {
            break;
        }
        est = est.max(zn.sqrt());
        x = z / zn;
    }
    est
}

/// Householder QR of `[prefix | k]` where `prefix` has orthonormal columns
/// that are never pivoted. The returned `q` spans the part of `k`'s column
/// space orthogonal to `prefix`, and its columns are orthogonal to `prefix`.
/// `r_top` holds the rows of `R` belonging to `k`.
pub(crate) fn constrained_qr(prefix: &DMatrix<f64>, k: &DMatrix<f64>, rule: QrRule) -> Rrqr {
    let m = k.nrows();
    let r = prefix.ncols();
    let c = k.ncols();
    let mut w = DMatrix::zeros(m, r + c);
    w.columns_mut(0, r).copy_from(prefix);
    w.columns_mut(r, c).copy_from(k);
    let mut order: Vec<usize> = (0..c).collect();
    let mut refl = Reflectors { vs: Vec::new() };

    let householder_step = |w: &mut DMatrix<f64>, j: usize, refl: &mut Reflectors| {
        let x: Vec<f64> = w.column(j).rows_range(j..).iter().copied().collect();
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let (v, beta) = if norm == 0.0 {
            (vec![0.0; x.len()], 0.0)
        } else {
            let alpha = if x[0] >= 0.0 { -norm } else { norm };
            let mut v = x.clone();
            v[0] -= alpha;
            let vv: f64 = v.iter().map(|a| a * a).sum();
            (v, if vv == 0.0 { 0.0 } else { 2.0 / vv })
        };
        for col in j..w.ncols() {
            let mut cv: Vec<f64> = w.column(col).iter().copied().collect();
            apply_reflector(&mut cv, j, &v, beta);
            w.set_column(col, &nalgebra::DVector::from_vec(cv));
        }
        for i in (j + 1)..w.nrows() {
            w[(i, j)] = 0.0;
        }
        refl.vs.push((j, v, beta));
    };

    for j in 0..r.min(m) {
        householder_step(&mut w, j, &mut refl);
    }

    let max_steps = c.min(m.saturating_sub(r));
    let mut rank = 0;
    for t in 0..max_steps {
        let j = r + t;
        if let QrRule::RankRevealing { delta } = rule {
            let (piv, max_norm) = (j..r + c)
                .map(|col| (col, column_norm(&w, col, j)))
                .fold((j, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if max_norm == 0.0 {
                break;
            }
            if t > 0 {
                let r11 = spectral_norm_estimate(&w.view((r, r), (t, t)).into_owned());
                if max_norm <= delta * r11 {
                    let r22 = w.view((j, j), (m - j, r + c - j)).into_owned();
                    if spectral_norm_estimate(&r22) <= delta * r11 {
                        break;
                    }
                }
            }
            if piv != j {
                w.swap_columns(piv, j);
                order.swap(piv - r, t);
            }
        }
        householder_step(&mut w, j, &mut refl);
        rank = t + 1;
    }

    let q = refl.q_columns(m, r..r + rank);
    let r_top = w.view((r, r), (rank, c)).into_owned();
    Rrqr {
        q,
        r_top,
        perm: Permutation::from_forward(order).expect("column order is a permutation"),
        rank,
    }
}

/// Orthonormal basis of the complement of `span(e)` (`e` orthonormal columns).
pub(crate) fn orthonormal_complement(e: &DMatrix<f64>) -> DMatrix<f64> {
    let m = e.nrows();
    let r = e.ncols();
    let mut w = e.clone();
    let mut refl = Reflectors { vs: Vec::new() };
    for j in 0..r.min(m) {
        let x: Vec<f64> = w.column(j).rows_range(j..).iter().copied().collect();
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let alpha = if x[0] >= 0.0 { -norm } else { norm };
        let mut v = x;
        v[0] -= alpha;
        let vv: f64 = v.iter().map(|a| a * a).sum();
        let beta = if vv == 0.0 { 0.0 } else { 2.0 / vv };
        for col in j..r {
            let mut cv: Vec<f64> = w.column(col).iter().copied().collect();
            apply_reflector(&mut cv, j, &v, beta);
            w.set_column(col, &nalgebra::DVector::from_vec(cv));
        }
        refl.vs.push((j, v, beta));
    }
    refl.q_columns(m, r..m)
}
