use std::io::{BufRead, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::LinearSystem;

use super::{eval_transfer, AnalysisError, Axis, FrequencyGrid};

/// Transfer matrix at one grid point; `h` is `None` where `G + sC` is singular.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferSample {
    pub f: f64,
    pub axis: Axis,
    pub ports: usize,
    pub h: Option<DMatrix<Complex64>>,
}

fn sample<S: LinearSystem + ?Sized>(
    sys: &S,
    f: f64,
    axis: Axis,
) -> Result<TransferSample, AnalysisError> {
    let h = match eval_transfer(sys, axis.s_at(f)) {
        Ok(h) => Some(h),
        Err(AnalysisError::SingularAtPoint { .. }) => {
            log::warn!("singular at f = {f} ({} axis)", axis.name());
            None
        }
        Err(e) => return Err(e),
    };
    Ok(TransferSample {
        f,
        axis,
        ports: sys.port_count(),
        h,
    })
}

/// Evaluates `H` at every grid point, in grid order. Singular points are
/// recorded (`h = None`) and the sweep continues.
pub fn sweep<S: LinearSystem + ?Sized>(
    sys: &S,
    grid: &FrequencyGrid,
    axis: Axis,
) -> Result<Vec<TransferSample>, AnalysisError> {
    grid.points()
        .iter()
        .map(|&f| sample(sys, f, axis))
        .collect()
}

/// [`sweep`] with grid points evaluated concurrently; the output is identical.
pub fn sweep_parallel<S: LinearSystem + Sync + ?Sized>(
    sys: &S,
    grid: &FrequencyGrid,
    axis: Axis,
) -> Result<Vec<TransferSample>, AnalysisError> {
    grid.points()
        .par_iter()
        .map(|&f| sample(sys, f, axis))
        .collect()
}

/// Writes `f,i,j,re,im` rows, grid point by grid point. Singular points get
/// one row per `(i, j)` with `nan` values.
pub fn write_sweep_csv<W: Write>(samples: &[TransferSample], mut w: W) -> std::io::Result<()> {
    writeln!(w, "f,i,j,re,im")?;
    for s in samples {
        for i in 0..s.ports {
            for j in 0..s.ports {
                match &s.h {
                    Some(h) => writeln!(w, "{},{i},{j},{},{}", s.f, h[(i, j)].re, h[(i, j)].im)?,
                    None => writeln!(w, "{},{i},{j},nan,nan", s.f)?,
                }
            }
        }
    }
    Ok(())
}

/// One parsed row of a sweep CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub f: f64,
    pub i: usize,
    pub j: usize,
    pub h: Complex64,
}

pub fn read_sweep_csv<R: BufRead>(r: R) -> Result<Vec<SweepRow>, AnalysisError> {
    let mut rows = Vec::new();
    for (idx, line) in r.lines().enumerate() {
        let line = line?;
        if idx == 0 {
            if line.trim() != "f,i,j,re,im" {
                return Err(AnalysisError::Csv {
                    line: 1,
                    reason: format!("unexpected header {line:?}"),
                });
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let bad = |reason: &str| AnalysisError::Csv {
            line: idx + 1,
            reason: reason.to_string(),
        };
        let cols: Vec<&str> = line.split(',').collect();
        let [f, i, j, re, im] = cols[..] else {
            return Err(bad("expected 5 fields"));
        };
        rows.push(SweepRow {
            f: f.parse().map_err(|_| bad("bad f"))?,
            i: i.parse().map_err(|_| bad("bad i"))?,
            j: j.parse().map_err(|_| bad("bad j"))?,
            h: Complex64::new(
                re.parse().map_err(|_| bad("bad re"))?,
                im.parse().map_err(|_| bad("bad im"))?,
            ),
        });
    }
    Ok(rows)
}
