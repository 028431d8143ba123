use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::sparse::SymSparse;
use crate::{InputMap, LinearSystem};

use super::ReductionError;

/// Reduction method that produced a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Smp,
    Sip,
    Turbomor,
    Prima,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Smp => "smp",
            Method::Sip => "sip",
            Method::Turbomor => "turbomor",
            Method::Prima => "prima",
        })
    }
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "smp" => Ok(Method::Smp),
            "sip" => Ok(Method::Sip),
            "turbomor" => Ok(Method::Turbomor),
            "prima" => Ok(Method::Prima),
            other => Err(format!("unknown method {other}")),
        }
    }
}

/// Reduced pencil `(Ĝ, Ĉ)` with its block structure.
///
/// Port-preserving methods keep the external ports as the leading rows
/// (`B̂ = [I_p; 0]`); projection methods carry an explicit dense `B̂`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedSystem {
    method: Method,
    g: SymSparse,
    c: SymSparse,
    b: Option<DMatrix<f64>>,
    ports: usize,
    block_sizes: Vec<usize>,
    points: Vec<f64>,
    port_names: Vec<String>,
}

impl ReducedSystem {
    pub fn new(
        method: Method,
        g: SymSparse,
        c: SymSparse,
        b: Option<DMatrix<f64>>,
        block_sizes: Vec<usize>,
        points: Vec<f64>,
        port_names: Vec<String>,
    ) -> Result<Self, ReductionError> {
        let n = g.dim();
        let bad = |m: String| Err(ReductionError::InvalidModel(m));
        if c.dim() != n {
            return bad(format!("G is {n}×{n} but C is {0}×{0}", c.dim()));
        }
        if block_sizes.iter().sum::<usize>() != n {
            return bad(format!("block sizes {block_sizes:?} do not sum to {n}"));
        }
        let ports = port_names.len();
        match &b {
            Some(b) if b.nrows() != n || b.ncols() != ports => {
                return bad(format!(
                    "B is {}×{}, expected {n}×{ports}",
                    b.nrows(),
                    b.ncols()
                ))
            }
            None if ports > n => return bad(format!("{ports} ports exceed dimension {n}")),
            _ => {}
        }
        Ok(Self {
            method,
            g,
            c,
            b,
            ports,
            block_sizes,
            points,
            port_names,
        })
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    /// Expansion points the model was built at.
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn port_names(&self) -> &[String] {
        &self.port_names
    }

    /// Explicit `B̂`, if the ports are not simply the leading rows.
    pub fn input_matrix(&self) -> Option<&DMatrix<f64>> {
        self.b.as_ref()
    }

    /// Structural nonzeros of `Ĝ + Ĉ`.
    pub fn nnz(&self) -> usize {
        SymSparse::union_nnz(&self.g, &self.c)
    }
}

impl LinearSystem for ReducedSystem {
    fn g(&self) -> &SymSparse {
        &self.g
    }
    fn c(&self) -> &SymSparse {
        &self.c
    }
    fn input(&self) -> InputMap<'_> {
        match &self.b {
            Some(b) => InputMap::Dense(b),
            None => InputMap::Leading(self.ports),
        }
    }
}
