use nalgebra::DMatrix;

use crate::sparse::SymSparse;

/// Input/output matrix `B` of a descriptor system.
#[derive(Debug, Clone, Copy)]
pub enum InputMap<'a> {
    /// `B = [I_p; 0]`: the first `p` states are the ports.
    Leading(usize),
    /// Explicit `n × p` matrix.
    Dense(&'a DMatrix<f64>),
}

impl InputMap<'_> {
    pub fn ports(&self) -> usize {
        match self {
            InputMap::Leading(p) => *p,
            InputMap::Dense(b) => b.ncols(),
        }
    }

    pub fn to_dense(&self, n: usize) -> DMatrix<f64> {
        match self {
            InputMap::Leading(p) => DMatrix::from_fn(n, *p, |i, j| if i == j { 1.0 } else { 0.0 }),
            InputMap::Dense(b) => (*b).clone(),
        }
    }
}

/// A symmetric RC descriptor system `(G + sC) x = B u`, `y = Bᵀ x`.
pub trait LinearSystem {
    fn g(&self) -> &SymSparse;
    fn c(&self) -> &SymSparse;
    fn input(&self) -> InputMap<'_>;

    fn dim(&self) -> usize {
        self.g().dim()
    }

    fn port_count(&self) -> usize {
        self.input().ports()
    }
}
