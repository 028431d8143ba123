use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::netlist::MnaSystem;
use crate::sparse::{
    constrained_qr, orthonormal_complement, rrqr, spd_factorize, symmetrize, QrRule, SpdFactor,
    SymBuilder, SymSparse,
};
use crate::LinearSystem;

use super::sip::{map_spd, relative};
use super::{
    full_sip_stage, sparse_sip, ExpansionSchedule, Method, ReducedSystem, ReductionError,
    ReductionOptions, StageResult, StageTransform,
};

/// Row space of a coupling block as revealed by RRQR.
#[derive(Debug, Clone)]
pub struct Deflation {
    /// Orthonormal basis of the retained column space.
    pub q: DMatrix<f64>,
    /// `rank × cols` coupling in the original column order: `Cc ≈ q · coupling`.
    pub coupling: DMatrix<f64>,
    pub rank: usize,
}

/// Truncates the coupling `cc` to its numerical rank under
/// `‖R22‖₂ ≤ delta ‖R11‖₂`.
pub fn deflate_coupling(cc: &DMatrix<f64>, delta: f64) -> Deflation {
    let f = rrqr(cc, delta);
    Deflation {
        coupling: f.coupling(),
        q: f.q,
        rank: f.rank,
    }
}

/// Every stage of a multipoint reduction plus what is needed to rebuild the
/// full change of basis.
#[derive(Debug, Clone)]
pub struct Cascade {
    pub stages: Vec<StageResult>,
    port_names: Vec<String>,
    dim: usize,
    /// Orthonormal span of all retained directions of stages ≥ 2, in the
    /// coordinates of the stage-1 interior.
    span: DMatrix<f64>,
}

impl Cascade {
    pub fn block_sizes(&self) -> Vec<usize> {
        self.stages.iter().map(StageResult::p_k).collect()
    }

    /// Expansion points of the stages actually built (a schedule is cut short
    /// once the coupling vanishes or the interior is exhausted).
    pub fn points(&self) -> Vec<f64> {
        self.stages.iter().map(|s| s.point).collect()
    }

    /// Assembles the reduced block-tridiagonal pencil.
    pub fn assemble(&self, method: Method) -> Result<ReducedSystem, ReductionError> {
        assemble_stages(&self.stages, self.port_names.clone(), method)
    }

    /// The full nonsingular change of basis `T` (original node order), with
    /// columns ordered as the reduced blocks followed by an orthonormal basis
    /// of the discarded interior. `Tᵀ(G + sC)T` has the same port transfer
    /// function as the original system.
    pub fn full_transform(&self) -> DMatrix<f64> {
        let n = self.dim;
        let mut t = DMatrix::zeros(n, n);
        let StageTransform::Elimination {
            retained,
            eliminated,
            multipliers,
        } = &self.stages[0].transform
        else {
            unreachable!("stage 1 is always an elimination")
        };
        for (j, &r) in retained.iter().enumerate() {
            t[(r, j)] = 1.0;
            for (q, &e) in eliminated.iter().enumerate() {
                t[(e, j)] = multipliers[(q, j)];
            }
        }
        let mut col = retained.len();
        let rest = orthonormal_complement(&self.span);
        let bases = self.stages[1..]
            .iter()
            .map(|st| match &st.transform {
                StageTransform::Projection { basis } => basis,
                StageTransform::Elimination { .. } => unreachable!("later stages are projections"),
            })
            .chain(std::iter::once(&rest));
        for basis in bases {
            for c in 0..basis.ncols() {
                for (q, &e) in eliminated.iter().enumerate() {
                    t[(e, col)] = basis[(q, c)];
                }
                col += 1;
            }
        }
        debug_assert_eq!(col, n);
        t
    }
}

/// Assembles the block-tridiagonal pencil: diagonal blocks `Ĝ_p^(k)`,
/// `Ĉ_p^(k)`; below-diagonal blocks `B^(k)` in `Ĉ` and `−s_{k−1} B^(k)`
/// in `Ĝ`.
pub(super) fn assemble_stages(
    stages: &[StageResult],
    port_names: Vec<String>,
    method: Method,
) -> Result<ReducedSystem, ReductionError> {
    let sizes = stages.iter().map(StageResult::p_k).collect::<Vec<_>>();
    let n: usize = sizes.iter().sum();
    let mut offsets = vec![0];
    for s in &sizes {
        offsets.push(offsets.last().unwrap() + s);
    }
    let (mut gb, mut cb) = (SymBuilder::new(n), SymBuilder::new(n));
    for (k, st) in stages.iter().enumerate() {
        let o = offsets[k];
        for (i, j, v) in st.gp.lower_triplets() {
            gb.add(o + i, o + j, v);
        }
        for (i, j, v) in st.cp.lower_triplets() {
            cb.add(o + i, o + j, v);
        }
        if let Some(b) = &st.coupling_in {
            let s_prev = stages[k - 1].point;
            let oc = offsets[k - 1];
            for j in 0..b.ncols() {
                for i in 0..b.nrows() {
                    let v = b[(i, j)];
                    if v != 0.0 {
                        cb.add(o + i, oc + j, v);
                        let gv = -s_prev * v;
                        if gv != 0.0 {
                            gb.add(o + i, oc + j, gv);
                        }
                    }
                }
            }
        }
    }
    ReducedSystem::new(
        method,
        gb.build_pruned()?,
        cb.build_pruned()?,
        None,
        sizes,
        stages.iter().map(|s| s.point).collect(),
        port_names,
    )
}

/// Runs the multipoint cascade on `sys`.
///
/// Stage 1 eliminates at `s₁` (node by node under the fill budget when
/// sparsity control is on, otherwise exactly). Each later stage `k` takes the
/// coupling `Ĉ_C^(k−1)` left by the previous stage, orthogonalizes it against
/// the directions already retained (truncating by RRQR when deflation is on),
/// and eliminates the rest of the interior at `s_k`, keeping exactly those
/// directions as the new block.
///
/// Later stages are represented implicitly: the stage-1 interior `(G_I, C_I)`
/// stays sparse, and stage `k` with retained span `E = [U, Y]` (orthonormal)
/// uses `V = A⁻¹E (EᵀA⁻¹E)⁻¹ [0; I]` with `A = G_I + s_k C_I`. This `V`
/// satisfies `UᵀV = 0`, `YᵀV = I` and `AV ∈ span(E)`, i.e. it is the
/// elimination of the orthogonal complement of `E` at `s_k` written in the
/// original interior coordinates.
pub fn smp_cascade(
    sys: &MnaSystem,
    schedule: &ExpansionSchedule,
    opts: &ReductionOptions,
) -> Result<Cascade, ReductionError> {
    opts.validate()?;
    let (g, c, p) = (sys.g(), sys.c(), sys.ports());
    let points = schedule.points();
    let first = if opts.sparsity_control {
        sparse_sip(g, c, p, points[0], opts.eta)?
    } else {
        full_sip_stage(g, c, p, points[0])?
    };
    log::debug!("stage 1 at s = {}: p1 = {}", points[0], first.p_k());
    let StageTransform::Elimination { eliminated, .. } = &first.transform else {
        unreachable!("stage 1 is always an elimination")
    };
    let eliminated = eliminated.clone();
    let gi = g.submatrix(&eliminated);
    let ci = c.submatrix(&eliminated);
    let ni = eliminated.len();
    let mut span = DMatrix::zeros(ni, 0);
    let mut factors: HashMap<u64, SpdFactor> = HashMap::new();
    let mut stages = vec![first];

    for (idx, &s) in points.iter().enumerate().skip(1) {
        let k = idx + 1;
        let coupling = &stages.last().unwrap().coupling_out;
        if span.ncols() >= ni || coupling.ncols() == 0 {
            break;
        }
        let rule = if opts.deflation {
            QrRule::RankRevealing { delta: opts.delta }
        } else {
            QrRule::Plain
        };
        let qr = constrained_qr(&span, coupling, rule);
        if qr.rank == 0 {
            log::debug!("stage {k}: coupling vanished, stopping");
            break;
        }
        let b = qr.coupling();
        let (r, pk) = (span.ncols(), qr.rank);
        let mut e = DMatrix::zeros(ni, r + pk);
        e.columns_mut(0, r).copy_from(&span);
        e.columns_mut(r, pk).copy_from(&qr.q);

        let f = match factors.entry(s.to_bits()) {
            std::collections::hash_map::Entry::Occupied(o) => o.into_mut(),
            std::collections::hash_map::Entry::Vacant(v) => {
                let a = gi.add_scaled(&ci, s)?;
                v.insert(spd_factorize(&a).map_err(map_spd(k, &eliminated))?)
            }
        };
        let z = f.solve(&e)?;
        let mut m = e.tr_mul(&z);
        symmetrize(&mut m);
        let mut sel = DMatrix::zeros(r + pk, pk);
        sel.view_mut((r, 0), (pk, pk)).fill_with_identity();
        let lambda = m
            .cholesky()
            .ok_or(ReductionError::Breakdown { stage: k })?
            .solve(&sel);
        let v = &z * lambda;

        let gv = gi.mul_dense(&v);
        let cv = ci.mul_dense(&v);
        let mut gp = v.tr_mul(&gv);
        let mut cp = v.tr_mul(&cv);
        symmetrize(&mut gp);
        symmetrize(&mut cp);
        let av = &gv + &cv * s;
        let res = &av - &e * e.tr_mul(&av);
        let scale = (gi.frobenius_norm() + s * ci.frobenius_norm()) * v.norm().max(1.0);
        let coupling_out = &cv - &e * e.tr_mul(&cv);
        log::debug!("stage {k} at s = {s}: p{k} = {pk}");
        stages.push(StageResult {
            k,
            point: s,
            gp: SymSparse::from_dense_lower(&gp)?,
            cp: SymSparse::from_dense_lower(&cp)?,
            coupling_in: Some(b),
            coupling_out,
            transform: StageTransform::Projection { basis: v },
            decoupling_residual: relative(res.norm(), scale),
        });
        span = e;
    }
    Ok(Cascade {
        stages,
        port_names: sys.port_names().to_vec(),
        dim: sys.dim(),
        span,
    })
}

/// Multipoint moment-matching reduction over `schedule`.
pub fn smp_reduce(
    sys: &MnaSystem,
    schedule: &ExpansionSchedule,
    opts: &ReductionOptions,
) -> Result<ReducedSystem, ReductionError> {
    smp_cascade(sys, schedule, opts)?.assemble(Method::Smp)
}

/// Single-point elimination at `s0`: the one-block special case, matching
/// `H` and its first derivative at `s0`.
pub fn sip_reduce(
    sys: &MnaSystem,
    s0: f64,
    opts: &ReductionOptions,
) -> Result<ReducedSystem, ReductionError> {
    smp_cascade(sys, &ExpansionSchedule::new(vec![s0])?, opts)?.assemble(Method::Sip)
}
