//! Netlist parsing, MNA assembly, synthetic circuits and file formats.

mod files;
mod mna;
mod parse;
mod synth;

pub use files::{
    load_reduced, load_sparse_triplets, read_triplets, save_reduced, save_triplets, write_triplets,
    LoadedSystem, PortSource, ReducedMetadata, TripletFile,
};
pub use mna::{assemble_mna, MnaSystem};
pub use parse::{parse_netlist, parse_value, write_netlist};
pub use synth::{gen_synthetic, SyntheticSpec, Topology};

use crate::sparse::SparseError;

/// Name of the reference node.
pub const GROUND: &str = "0";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ElementKind {
    Resistor,
    Capacitor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub name: String,
    pub kind: ElementKind,
    pub a: String,
    pub b: String,
    /// Ohms for resistors, farads for capacitors.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Netlist {
    pub elements: Vec<Element>,
    /// Port node names; their order defines the columns of `B`.
    pub ports: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum NetlistError {
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("port node {0} does not appear in any element")]
    UnknownNodeInPorts(String),
    #[error("line {line}: element value {value} must be positive")]
    NonpositiveValue { line: usize, value: f64 },
    #[error("port node {0} has no incident element")]
    IsolatedPortNode(String),
    #[error("G has dimension {g} but C has dimension {c}")]
    DimensionMismatch { g: usize, c: usize },
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error("invalid system: {0}")]
    InvalidSystem(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {reason}")]
    Format {
        path: String,
        line: usize,
        reason: String,
    },
    #[error(transparent)]
    Sparse(#[from] SparseError),
}
