//! Dense reference implementations shared by the integration tests.

#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rcmor::netlist::{assemble_mna, gen_synthetic, MnaSystem, SyntheticSpec, Topology};
use rcmor::LinearSystem;

pub fn dense_b<S: LinearSystem + ?Sized>(sys: &S) -> DMatrix<f64> {
    sys.input().to_dense(sys.dim())
}

/// `M_k = (−1)^k Bᵀ(A⁻¹C)^k A⁻¹B` by dense LU, `A = G + s0·C`.
pub fn dense_moments<S: LinearSystem + ?Sized>(
    sys: &S,
    s0: f64,
    count: usize,
) -> Vec<DMatrix<f64>> {
    let g = sys.g().to_dense();
    let c = sys.c().to_dense();
    let b = dense_b(sys);
    let lu = (&g + &c * s0).lu();
    let mut v = lu.solve(&b).expect("A is nonsingular");
    let mut out = Vec::new();
    for k in 0..count {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        out.push(b.transpose() * &v * sign);
        v = lu.solve(&(&c * &v)).expect("A is nonsingular");
    }
    out
}

/// Leading moments of `red` matching `orig`'s (dense oracle, relative
/// Frobenius tolerance `tol`).
pub fn dense_match_order<A, B>(orig: &A, red: &B, s0: f64, count: usize, tol: f64) -> usize
where
    A: LinearSystem + ?Sized,
    B: LinearSystem + ?Sized,
{
    let a = dense_moments(orig, s0, count);
    let b = dense_moments(red, s0, count);
    a.iter()
        .zip(&b)
        .take_while(|(x, y)| (*x - *y).norm() <= tol * x.norm())
        .count()
}

pub fn dense_transfer<S: LinearSystem + ?Sized>(sys: &S, s: Complex64) -> DMatrix<Complex64> {
    let to_c = |m: &DMatrix<f64>| m.map(|v| Complex64::new(v, 0.0));
    let a = to_c(&sys.g().to_dense()) + to_c(&sys.c().to_dense()) * s;
    let b = to_c(&dense_b(sys));
    let x = a.lu().solve(&b).expect("G + sC is nonsingular");
    b.transpose() * x
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigenvalues().min()
}

pub fn spectral(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        0.0
    } else {
        m.clone().singular_values().max()
    }
}

/// The worked example: port —1Ω— x —1Ω— ground, 1F from x to ground.
pub fn worked_example() -> MnaSystem {
    let nl = rcmor::netlist::parse_netlist("R1 p x 1\nR2 x 0 1\nC1 x 0 1\n.ports p\n").unwrap();
    assemble_mna(&nl).unwrap()
}

/// Random circuits with `n ∈ [20, 80]`, `p ∈ [2, 4]`, cycling topologies.
pub fn suite(count: usize) -> Vec<(String, MnaSystem)> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    (0..count)
        .map(|i| {
            let topo = [Topology::Mesh, Topology::Ladder, Topology::Tree][i % 3];
            let n = rng.random_range(20..=80);
            let p = rng.random_range(2..=4);
            let seed = rng.random::<u64>();
            let spec = SyntheticSpec::new(topo, n, p, seed);
            let sys = assemble_mna(&gen_synthetic(&spec).unwrap()).unwrap();
            (format!("{topo:?}(n={n}, p={p}, seed={seed})"), sys)
        })
        .collect()
}
