use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::LinearSystem;

use super::{eval_transfer, AnalysisError, Axis, FrequencyGrid};

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<Complex64>) -> f64 {
    match m.shape() {
        (0, _) | (_, 0) => 0.0,
        (1, 1) => m[(0, 0)].norm(),
        _ => m.clone().singular_values().max(),
    }
}

/// `E_R` (real axis, `s = f`) and `E_C` (imaginary axis, `s = 2πjf`) at one
/// frequency. `None` marks an undefined value: a singular pencil or
/// `‖H‖₂ = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorPoint {
    pub f: f64,
    pub e_r: Option<f64>,
    pub e_c: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorSummary {
    pub max_e_r: f64,
    pub mean_e_r: f64,
    pub max_e_c: f64,
    pub mean_e_c: f64,
    pub undefined: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorReport {
    pub points: Vec<ErrorPoint>,
}

fn stats(v: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut max, mut sum, mut n) = (0.0_f64, 0.0, 0usize);
    for x in v {
        max = max.max(x);
        sum += x;
        n += 1;
    }
    (max, if n == 0 { 0.0 } else { sum / n as f64 })
}

impl ErrorReport {
    pub fn summary(&self) -> ErrorSummary {
        let (max_e_r, mean_e_r) = stats(self.points.iter().filter_map(|p| p.e_r));
        let (max_e_c, mean_e_c) = stats(self.points.iter().filter_map(|p| p.e_c));
        let undefined = self
            .points
            .iter()
            .map(|p| usize::from(p.e_r.is_none()) + usize::from(p.e_c.is_none()))
            .sum();
        ErrorSummary {
            max_e_r,
            mean_e_r,
            max_e_c,
            mean_e_c,
            undefined,
        }
    }

    /// Largest `E_C` over frequencies in `[lo, hi]`.
    pub fn max_e_c_in(&self, lo: f64, hi: f64) -> f64 {
        stats(
            self.points
                .iter()
                .filter(|p| p.f >= lo && p.f <= hi)
                .filter_map(|p| p.e_c),
        )
        .0
    }
}

fn relative_at<A, B>(orig: &A, red: &B, s: Complex64) -> Result<Option<f64>, AnalysisError>
where
    A: LinearSystem + ?Sized,
    B: LinearSystem + ?Sized,
{
    let (h, hr) = match (eval_transfer(orig, s), eval_transfer(red, s)) {
        (Ok(h), Ok(hr)) => (h, hr),
        (Err(AnalysisError::SingularAtPoint { .. }), _)
        | (_, Err(AnalysisError::SingularAtPoint { .. })) => return Ok(None),
        (Err(e), _) | (_, Err(e)) => return Err(e),
    };
    let den = spectral_norm(&h);
    if den == 0.0 {
        return Ok(None);
    }
    Ok(Some(spectral_norm(&(h - hr)) / den))
}

/// `E(f) = ‖H − Ĥ‖₂ / ‖H‖₂` on both axes at every grid frequency.
pub fn relative_errors<A, B>(
    orig: &A,
    red: &B,
    grid: &FrequencyGrid,
) -> Result<ErrorReport, AnalysisError>
where
    A: LinearSystem + Sync + ?Sized,
    B: LinearSystem + Sync + ?Sized,
{
    if orig.port_count() != red.port_count() {
        return Err(AnalysisError::PortMismatch {
            left: orig.port_count(),
            right: red.port_count(),
        });
    }
    let points = grid
        .points()
        .par_iter()
        .map(|&f| {
            Ok(ErrorPoint {
                f,
                e_r: relative_at(orig, red, Axis::Real.s_at(f))?,
                e_c: relative_at(orig, red, Axis::Imaginary.s_at(f))?,
            })
        })
        .collect::<Result<Vec<_>, AnalysisError>>()?;
    Ok(ErrorReport { points })
}

/// Writes `f,axis,metric,value` rows (`nan` for undefined points).
pub fn write_error_csv<W: Write>(report: &ErrorReport, mut w: W) -> std::io::Result<()> {
    writeln!(w, "f,axis,metric,value")?;
    let show = |v: Option<f64>| v.map_or_else(|| "nan".to_string(), |x| x.to_string());
    for p in &report.points {
        writeln!(w, "{},real,E_R,{}", p.f, show(p.e_r))?;
        writeln!(w, "{},imag,E_C,{}", p.f, show(p.e_c))?;
    }
    Ok(())
}
