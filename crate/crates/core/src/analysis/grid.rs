use std::f64::consts::PI;

use num_complex::Complex64;

use super::AnalysisError;

/// Which axis of the complex plane a frequency `f` maps to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    /// `s = f`.
    Real,
    /// `s = 2πj·f`.
    Imaginary,
}

impl Axis {
    pub fn s_at(self, f: f64) -> Complex64 {
        match self {
            Axis::Real => Complex64::new(f, 0.0),
            Axis::Imaginary => Complex64::new(0.0, 2.0 * PI * f),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Axis::Real => "real",
            Axis::Imaginary => "imag",
        }
    }
}

impl std::str::FromStr for Axis {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "real" => Ok(Axis::Real),
            "imag" | "imaginary" => Ok(Axis::Imaginary),
            other => Err(format!("unknown axis {other}")),
        }
    }
}

/// Sorted, nonnegative frequencies in Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    points: Vec<f64>,
}

impl Default for FrequencyGrid {
    /// `f = 0` plus 100 log-spaced points over `[1, 1e13]` Hz.
    fn default() -> Self {
        Self::log_spaced(1.0, 1e13, 100)
            .expect("default grid is valid")
            .with_dc()
    }
}

impl FrequencyGrid {
    pub fn new(mut points: Vec<f64>) -> Result<Self, AnalysisError> {
        if let Some(bad) = points.iter().find(|f| !(f.is_finite() && **f >= 0.0)) {
            return Err(AnalysisError::InvalidGrid(format!(
                "frequency {bad} is not finite and nonnegative"
            )));
        }
        points.sort_by(f64::total_cmp);
        points.dedup();
        Ok(Self { points })
    }

    /// `n` points spaced evenly in `log f` from `lo` to `hi` inclusive.
    pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Result<Self, AnalysisError> {
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) || n == 0 {
            return Err(AnalysisError::InvalidGrid(format!(
                "need 0 < lo ≤ hi and n ≥ 1, got {lo}:{hi}:{n}"
            )));
        }
        let (a, b) = (lo.log10(), hi.log10());
        let points = (0..n)
            .map(|i| {
                if i == 0 {
                    lo
                } else if i + 1 == n {
                    hi
                } else {
                    10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64)
                }
            })
            .collect();
        Self::new(points)
    }

    /// Adds `f = 0`.
    pub fn with_dc(mut self) -> Self {
        if self.points.first() != Some(&0.0) {
            self.points.insert(0, 0.0);
        }
        self
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

impl std::str::FromStr for FrequencyGrid {
    type Err = String;
    /// Parses `lo:hi:n` (log-spaced, no DC point).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let [lo, hi, n] = parts[..] else {
            return Err(format!("expected lo:hi:n, got {s:?}"));
        };
        let lo: f64 = lo.trim().parse().map_err(|e| format!("bad lo: {e}"))?;
        let hi: f64 = hi.trim().parse().map_err(|e| format!("bad hi: {e}"))?;
        let n: usize = n.trim().parse().map_err(|e| format!("bad n: {e}"))?;
        FrequencyGrid::log_spaced(lo, hi, n).map_err(|e| e.to_string())
    }
}
