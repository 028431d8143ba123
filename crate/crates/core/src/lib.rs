//! Model order reduction for many-port RC networks.
//!
//! The crate reduces the MNA pencil `(G, C)` of an RC network with `p`
//! ports to a small block-tridiagonal pencil that matches moments of the
//! port transfer function `H(s) = Bᵀ(G + sC)⁻¹B` at several real expansion
//! points. Elimination at the first point is sparse (a node-by-node Schur
//! complement with a fill budget); later points add small dense blocks whose
//! size is cut by rank-revealing QR of the coupling.
//!
//! Modules, bottom up:
//!
//! - [`sparse`]: symmetric sparse storage, minimum-degree ordering, LDLᵀ,
//!   Schur complements and RRQR.
//! - [`netlist`]: netlist parsing, MNA assembly, synthetic circuits and the
//!   triplet / reduced-model file formats.
//! - [`reduction`]: single-point elimination, the multipoint reducer and the
//!   TurboMOR / PRIMA baselines.
//! - [`analysis`]: transfer functions, moments, error metrics, sweeps and
//!   the cascade verifier.
//!
//! ```
//! use rcmor::netlist::{assemble_mna, parse_netlist};
//! use rcmor::reduction::{smp_reduce, ExpansionSchedule, ReductionOptions};
//! use rcmor::analysis::moments;
//!
//! let nl = parse_netlist("R1 1 2 1\nR2 2 0 1\nC1 2 0 1\n.ports 1\n").unwrap();
//! let sys = assemble_mna(&nl).unwrap();
//! let opts = ReductionOptions { sparsity_control: false, ..Default::default() };
//! let red = smp_reduce(&sys, &ExpansionSchedule::new(vec![0.0, 0.0]).unwrap(), &opts).unwrap();
//! let (m, mh) = (moments(&sys, 0.0, 4).unwrap(), moments(&red, 0.0, 4).unwrap());
//! for k in 0..4 {
//!     assert!((m.terms[k][(0, 0)] - mh.terms[k][(0, 0)]).abs() < 1e-9);
//! }
//! ```

pub mod analysis;
pub mod netlist;
pub mod reduction;
pub mod sparse;

mod system;

pub use system::{InputMap, LinearSystem};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/mna.md")]
    mod mna {}
    #[doc = include_str!("../../../book/src/elimination.md")]
    mod elimination {}
    #[doc = include_str!("../../../book/src/multipoint.md")]
    mod multipoint {}
    #[doc = include_str!("../../../book/src/sparsity-deflation.md")]
    mod sparsity_deflation {}
    #[doc = include_str!("../../../book/src/baselines.md")]
    mod baselines {}
    #[doc = include_str!("../../../book/src/analysis.md")]
    mod analysis {}
}
