use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;

use crate::sparse::{
    min_degree_order, spd_factorize, symmetrize, SparseError, SymBuilder, SymSparse,
};

use super::ReductionError;

/// How a stage's retained coordinates embed into the full state.
#[derive(Debug, Clone, PartialEq)]
pub enum StageTransform {
    /// Node elimination on the original system: the eliminated voltages are
    /// `multipliers · x_retained`, with `multipliers = −A_I⁻¹ A_C`.
    Elimination {
        retained: Vec<usize>,
        eliminated: Vec<usize>,
        multipliers: DMatrix<f64>,
    },
    /// Later stage: basis of the retained block in the coordinates of the
    /// stage-1 interior (the `eliminated` nodes, in that order).
    Projection { basis: DMatrix<f64> },
}

/// One stage of the cascade.
#[derive(Debug, Clone, PartialEq)]
pub struct StageResult {
    /// 1-based stage index.
    pub k: usize,
    pub point: f64,
    pub gp: SymSparse,
    pub cp: SymSparse,
    /// `B^(k)`, `p_k × p_{k−1}`: the `Ĉ` coupling to the previous block
    /// (absent for the first stage).
    pub coupling_in: Option<DMatrix<f64>>,
    /// Capacitive coupling `Ĉ_C` from this stage's retained block into what
    /// is left of the interior (`interior × p_k`).
    pub coupling_out: DMatrix<f64>,
    pub transform: StageTransform,
    /// `‖Ĝ_C + s Ĉ_C‖_F` relative to `(‖G‖_F + s‖C‖_F)·max(1, ‖X‖_F)`.
    pub decoupling_residual: f64,
}

impl StageResult {
    pub fn p_k(&self) -> usize {
        self.gp.dim()
    }
}

pub(super) struct Elimination {
    pub gp: DMatrix<f64>,
    pub cp: DMatrix<f64>,
    pub x: DMatrix<f64>,
    pub coupling: DMatrix<f64>,
    pub residual: f64,
}

pub(super) fn map_spd(
    stage: usize,
    nodes: &[usize],
) -> impl Fn(SparseError) -> ReductionError + '_ {
    move |e| match e {
        SparseError::NotPositiveDefinite { pivot, value } => ReductionError::NotPositiveDefinite {
            stage,
            node: nodes.get(pivot).copied().unwrap_or(pivot),
            value,
        },
        other => other.into(),
    }
}

/// Exact elimination of `interior` from `(G, C)` at `s`, keeping `retained`.
pub(super) fn eliminate(
    g: &SymSparse,
    c: &SymSparse,
    s: f64,
    retained: &[usize],
    interior: &[usize],
    stage: usize,
) -> Result<Elimination, ReductionError> {
    let p = retained.len();
    let gpp = g.block(retained, retained);
    let cpp = c.block(retained, retained);
    if interior.is_empty() {
        return Ok(Elimination {
            gp: gpp,
            cp: cpp,
            x: DMatrix::zeros(0, p),
            coupling: DMatrix::zeros(0, p),
            residual: 0.0,
        });
    }
    let gi = g.submatrix(interior);
    let ci = c.submatrix(interior);
    let gc = g.block(interior, retained);
    let cc = c.block(interior, retained);
    let ai = gi.add_scaled(&ci, s)?;
    let f = spd_factorize(&ai).map_err(map_spd(stage, interior))?;
    let x = -f.solve(&(&gc + &cc * s))?;
    let g_c = &gc + gi.mul_dense(&x);
    let c_c = &cc + ci.mul_dense(&x);
    let mut gp = &gpp + gc.tr_mul(&x) + x.tr_mul(&g_c);
    let mut cp = &cpp + cc.tr_mul(&x) + x.tr_mul(&c_c);
    symmetrize(&mut gp);
    symmetrize(&mut cp);
    let scale = (g.frobenius_norm() + s * c.frobenius_norm()) * x.norm().max(1.0);
    let abs = (&g_c + &c_c * s).norm();
    Ok(Elimination {
        gp,
        cp,
        x,
        coupling: c_c,
        residual: relative(abs, scale),
    })
}

pub(super) fn relative(abs: f64, scale: f64) -> f64 {
    if abs == 0.0 {
        0.0
    } else {
        abs / scale
    }
}

fn check_args(g: &SymSparse, c: &SymSparse, p: usize, s: f64) -> Result<(), ReductionError> {
    if g.dim() != c.dim() {
        return Err(SparseError::DimensionMismatch {
            expected: g.dim(),
            found: c.dim(),
        }
        .into());
    }
    if p > g.dim() {
        return Err(ReductionError::OrderTooLarge {
            requested: p,
            available: g.dim(),
        });
    }
    if !(s.is_finite() && s >= 0.0) {
        return Err(ReductionError::InvalidPoint(s));
    }
    Ok(())
}

/// Eliminates every internal node at `s`, keeping the leading `p` ports.
/// The result decouples ports from the interior: `Ĝ_C + s Ĉ_C = 0`.
pub fn full_sip_stage(
    g: &SymSparse,
    c: &SymSparse,
    p: usize,
    s: f64,
) -> Result<StageResult, ReductionError> {
    check_args(g, c, p, s)?;
    let retained: Vec<usize> = (0..p).collect();
    let interior: Vec<usize> = (p..g.dim()).collect();
    let e = eliminate(g, c, s, &retained, &interior, 1)?;
    Ok(StageResult {
        k: 1,
        point: s,
        gp: SymSparse::from_dense_lower(&e.gp)?,
        cp: SymSparse::from_dense_lower(&e.cp)?,
        coupling_in: None,
        coupling_out: e.coupling,
        transform: StageTransform::Elimination {
            retained,
            eliminated: interior,
            multipliers: e.x,
        },
        decoupling_residual: e.residual,
    })
}

/// Working copy of a symmetric matrix as per-row maps (both triangles).
struct Rows(Vec<BTreeMap<usize, f64>>);

impl Rows {
    fn from(m: &SymSparse) -> Self {
        Rows((0..m.dim()).map(|i| m.row(i).collect()).collect())
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        self.0[i].get(&j).copied().unwrap_or(0.0)
    }

    fn add(&mut self, i: usize, j: usize, v: f64) {
        *self.0[i].entry(j).or_insert(0.0) += v;
    }
}

/// Node-by-node elimination at `s` in constrained minimum-degree order with
/// a fill budget.
///
/// Each step pivots one internal node `n` out with the rank-one congruence
/// `a = (g_n + s c_n) / (g_nn + s c_nn)`:
/// `G ← G − a gᵀ − g aᵀ + g_nn a aᵀ`, and likewise for `C`. Elimination
/// stops when `nnz(Ĝ + Ĉ) > eta · k` for the current dimension `k`, or when
/// the next pivot would push the count above `eta · (k − 1)`; hence the
/// returned block always satisfies `nnz ≤ eta · p₁` unless the input
/// already violates the budget. Ports are never eliminated.
///
/// Retained nodes are returned ports first, then the surviving internal
/// nodes in their pending elimination order.
pub fn sparse_sip(
    g: &SymSparse,
    c: &SymSparse,
    p: usize,
    s: f64,
    eta: f64,
) -> Result<StageResult, ReductionError> {
    check_args(g, c, p, s)?;
    if !(eta >= 1.0) {
        return Err(ReductionError::InvalidOptions(format!(
            "eta = {eta} must be ≥ 1"
        )));
    }
    let n = g.dim();
    let pattern = g.add_scaled(c, 1.0)?;
    let eligible: Vec<bool> = (0..n).map(|i| i >= p).collect();
    let order = min_degree_order(&pattern, &eligible);

    let mut gm = Rows::from(g);
    let mut cm = Rows::from(c);
    let mut pat: Vec<BTreeSet<usize>> = (0..n)
        .map(|i| pattern.row(i).map(|(j, _)| j).collect())
        .collect();
    let mut nnz: usize = pat.iter().map(BTreeSet::len).sum();
    let tol = crate::sparse::PIVOT_TOL * pattern_diag_max(g, c, s);

    let mut k = n;
    let mut done = 0;
    for &v in &order {
        if nnz as f64 > eta * k as f64 {
            break;
        }
        let nbrs: Vec<usize> = pat[v].iter().copied().filter(|&u| u != v).collect();
        let fill: usize = nbrs
            .iter()
            .enumerate()
            .map(|(a, &x)| {
                nbrs[a + 1..]
                    .iter()
                    .filter(|&&y| !pat[x].contains(&y))
                    .count()
            })
            .sum::<usize>()
            * 2
            + nbrs.iter().filter(|&&x| !pat[x].contains(&x)).count();
        let after = nnz - 2 * nbrs.len() - usize::from(pat[v].contains(&v)) + fill;
        if after as f64 > eta * (k - 1) as f64 {
            break;
        }
        let (gnn, cnn) = (gm.get(v, v), cm.get(v, v));
        let ann = gnn + s * cnn;
        if !(ann > tol) {
            return Err(ReductionError::NotPositiveDefinite {
                stage: 1,
                node: v,
                value: ann,
            });
        }
        let gv: Vec<f64> = nbrs.iter().map(|&x| gm.get(v, x)).collect();
        let cv: Vec<f64> = nbrs.iter().map(|&x| cm.get(v, x)).collect();
        let a: Vec<f64> = gv.iter().zip(&cv).map(|(g, c)| (g + s * c) / ann).collect();
        for (i, &x) in nbrs.iter().enumerate() {
            for (j, &y) in nbrs.iter().enumerate().skip(i) {
                let dg = -a[i] * gv[j] - gv[i] * a[j] + gnn * a[i] * a[j];
                let dc = -a[i] * cv[j] - cv[i] * a[j] + cnn * a[i] * a[j];
                gm.add(x, y, dg);
                cm.add(x, y, dc);
                if i != j {
                    gm.add(y, x, dg);
                    cm.add(y, x, dc);
                }
            }
        }
        for &x in &nbrs {
            gm.0[x].remove(&v);
            cm.0[x].remove(&v);
            pat[x].remove(&v);
            for &y in &nbrs {
                pat[x].insert(y);
            }
        }
        gm.0[v].clear();
        cm.0[v].clear();
        pat[v].clear();
        nnz = after;
        k -= 1;
        done += 1;
    }
    debug_assert_eq!(nnz, pat.iter().map(BTreeSet::len).sum::<usize>());

    let eliminated: Vec<usize> = order[..done].to_vec();
    let mut retained: Vec<usize> = (0..p).collect();
    retained.extend_from_slice(&order[done..]);
    let mut pos = vec![usize::MAX; n];
    for (k, &i) in retained.iter().enumerate() {
        pos[i] = k;
    }
    let mut gb = SymBuilder::new(retained.len());
    let mut cb = SymBuilder::new(retained.len());
    for (r, &i) in retained.iter().enumerate() {
        for (&j, &v) in &gm.0[i] {
            if pos[j] <= r {
                gb.add(r, pos[j], v);
            }
        }
        for (&j, &v) in &cm.0[i] {
            if pos[j] <= r {
                cb.add(r, pos[j], v);
            }
        }
    }

    // Multipliers and outgoing coupling from a factor of the eliminated block;
    // the reduced blocks above come from the rank-one updates.
    let e = eliminate(g, c, s, &retained, &eliminated, 1)?;
    Ok(StageResult {
        k: 1,
        point: s,
        gp: gb.build()?,
        cp: cb.build()?,
        coupling_in: None,
        coupling_out: e.coupling,
        transform: StageTransform::Elimination {
            retained,
            eliminated,
            multipliers: e.x,
        },
        decoupling_residual: e.residual,
    })
}

fn pattern_diag_max(g: &SymSparse, c: &SymSparse, s: f64) -> f64 {
    g.diagonal()
        .iter()
        .zip(c.diagonal())
        .fold(0.0_f64, |m, (a, b)| m.max((a + s * b).abs()))
}
