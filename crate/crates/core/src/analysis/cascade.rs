use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::netlist::MnaSystem;
use crate::reduction::{smp_cascade, Cascade, ExpansionSchedule, Method, ReductionOptions};
use crate::LinearSystem;

use super::{eval_transfer, spectral_norm, AnalysisError};

/// Exactness diagnostics of a multipoint cascade.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeDiagnostics {
    pub block_sizes: Vec<usize>,
    /// Per stage: `‖Ĝ_C + s_k Ĉ_C‖_F`, relative (see [`crate::reduction::StageResult`]).
    pub decoupling_residuals: Vec<f64>,
    /// Max relative transfer error of the fully transformed, untruncated
    /// system against the original, over the check frequencies.
    pub pre_truncation_error: f64,
    /// Relative Frobenius mismatch between the leading block of the
    /// transformed pencil and the assembled reduced pencil. Zero up to
    /// roundoff unless the coupling was truncated.
    pub leading_block_error: f64,
    /// Max relative mismatch between the bottom-up stage recurrence and a
    /// direct evaluation of the reduced model.
    pub recurrence_error: f64,
    /// Check frequencies (Hz, imaginary axis).
    pub frequencies: Vec<f64>,
}

fn check_frequencies() -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    (0..10)
        .map(|_| 10f64.powf(rng.random_range(0.0..13.0)))
        .collect()
}

fn complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|v| Complex64::new(v, 0.0))
}

fn dense_transfer(
    g: &DMatrix<f64>,
    c: &DMatrix<f64>,
    b: &DMatrix<f64>,
    s: Complex64,
) -> Result<DMatrix<Complex64>, AnalysisError> {
    let a = complex(g) + complex(c) * s;
    let bc = complex(b);
    let x = a
        .lu()
        .solve(&bc)
        .ok_or(AnalysisError::SingularAtPoint { re: s.re, im: s.im })?;
    Ok(bc.transpose() * x)
}

/// `H^(i) = B^(i)ᵀ (Ĝ_p^(i) + sĈ_p^(i) − (s − s_i)² H^(i+1))⁻¹ B^(i)`,
/// evaluated from the last stage up; `B^(1)` selects the ports.
fn recurrence(
    cascade: &Cascade,
    p: usize,
    s: Complex64,
) -> Result<DMatrix<Complex64>, AnalysisError> {
    let mut below: Option<DMatrix<Complex64>> = None;
    for st in cascade.stages.iter().rev() {
        let mut m = complex(&st.gp.to_dense()) + complex(&st.cp.to_dense()) * s;
        if let Some(h) = &below {
            let d = s - st.point;
            m -= h * (d * d);
        }
        let b = match &st.coupling_in {
            Some(b) => complex(b),
            None => DMatrix::from_fn(st.p_k(), p, |i, j| {
                Complex64::new(f64::from(u8::from(i == j)), 0.0)
            }),
        };
        let x = m
            .lu()
            .solve(&b)
            .ok_or(AnalysisError::SingularAtPoint { re: s.re, im: s.im })?;
        below = Some(b.transpose() * x);
    }
    Ok(below.expect("cascade has at least one stage"))
}

fn rel(a: &DMatrix<Complex64>, reference: &DMatrix<Complex64>) -> f64 {
    let den = spectral_norm(reference);
    let num = spectral_norm(&(a - reference));
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Runs the multipoint reduction and checks that it is exact where it
/// should be: stage decoupling, equivalence of the untruncated transformed
/// system, block consistency with the assembled model, and the stage
/// recurrence.
pub fn verify_cascade(
    sys: &MnaSystem,
    schedule: &ExpansionSchedule,
    opts: &ReductionOptions,
) -> Result<CascadeDiagnostics, AnalysisError> {
    let cascade = smp_cascade(sys, schedule, opts)?;
    let reduced = cascade.assemble(Method::Smp)?;
    let p = sys.ports();
    let t = cascade.full_transform();
    let gt = t.tr_mul(&sys.g().mul_dense(&t));
    let ct = t.tr_mul(&sys.c().mul_dense(&t));
    let bt = t.rows(0, p).transpose();

    let d = reduced.dim();
    let block_err = |full: &DMatrix<f64>, red: &DMatrix<f64>| {
        let diff = (full.view((0, 0), (d, d)) - red).norm();
        if diff == 0.0 {
            0.0
        } else {
            diff / red.norm()
        }
    };
    let leading_block_error =
        block_err(&gt, &reduced.g().to_dense()).max(block_err(&ct, &reduced.c().to_dense()));

    let frequencies = check_frequencies();
    let (mut pre, mut recur) = (0.0_f64, 0.0_f64);
    for &f in &frequencies {
        let s = Complex64::new(0.0, 2.0 * std::f64::consts::PI * f);
        let h = eval_transfer(sys, s)?;
        pre = pre.max(rel(&dense_transfer(&gt, &ct, &bt, s)?, &h));
        let hr = eval_transfer(&reduced, s)?;
        recur = recur.max(rel(&recurrence(&cascade, p, s)?, &hr));
    }
    Ok(CascadeDiagnostics {
        block_sizes: cascade.block_sizes(),
        decoupling_residuals: cascade
            .stages
            .iter()
            .map(|s| s.decoupling_residual)
            .collect(),
        pre_truncation_error: pre,
        leading_block_error,
        recurrence_error: recur,
        frequencies,
    })
}
