mod common;

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use rcmor::analysis::*;
use rcmor::netlist::{
    assemble_mna, gen_synthetic, parse_netlist, MnaSystem, SyntheticSpec, Topology,
};
use rcmor::reduction::{smp_reduce, ExpansionSchedule, ReductionOptions};

use common::{dense_moments, dense_transfer, suite, worked_example};

fn circuit(topo: Topology, n: usize, p: usize, seed: u64) -> MnaSystem {
    assemble_mna(&gen_synthetic(&SyntheticSpec::new(topo, n, p, seed)).unwrap()).unwrap()
}

fn sip0(sys: &MnaSystem) -> rcmor::reduction::ReducedSystem {
    let opts = ReductionOptions {
        sparsity_control: false,
        ..Default::default()
    };
    smp_reduce(sys, &ExpansionSchedule::new(vec![0.0]).unwrap(), &opts).unwrap()
}

#[test]
fn worked_example_transfer() {
    let sys = worked_example();
    assert!((eval_transfer_real(&sys, 0.0).unwrap()[(0, 0)] - 2.0).abs() < 1e-15);
    assert!((eval_transfer_real(&sys, 1.0).unwrap()[(0, 0)] - 1.5).abs() < 1e-15);
    for w in [0.1, 1.0, 7.0, 1e3] {
        let s = Complex64::new(0.0, w);
        let h = eval_transfer(&sys, s).unwrap()[(0, 0)];
        let want = (s + 2.0) / (s + 1.0);
        assert!((h - want).norm() < 1e-14 * want.norm());
    }
}

#[test]
fn worked_example_moments() {
    let sys = worked_example();
    let m = moments(&sys, 0.0, 3).unwrap();
    let got: Vec<f64> = m.terms.iter().map(|t| t[(0, 0)]).collect();
    for (g, w) in got.iter().zip([2.0, -1.0, 1.0]) {
        assert!((g - w).abs() < 1e-14);
    }
    let red = sip0(&sys);
    let mr = moments(&red, 0.0, 3).unwrap();
    let got: Vec<f64> = mr.terms.iter().map(|t| t[(0, 0)]).collect();
    for (g, w) in got.iter().zip([2.0, -1.0, 0.5]) {
        assert!((g - w).abs() < 1e-14);
    }
    assert_eq!(match_order(&m, &mr, 1e-6), 2);
}

#[test]
fn moments_agree_with_dense_oracle_and_are_symmetric() {
    for (name, sys) in suite(9) {
        for s0 in [0.0, 1e9] {
            let m = moments(&sys, s0, 5).unwrap();
            let d = dense_moments(&sys, s0, 5);
            for (a, b) in m.terms.iter().zip(&d) {
                assert!((a - b).norm() <= 1e-9 * b.norm(), "{name}");
                assert!((a - a.transpose()).norm() <= 1e-10 * a.norm(), "{name}");
            }
        }
    }
}

#[test]
fn one_ninth_error() {
    let sys = worked_example();
    let red = sip0(&sys);
    let grid = FrequencyGrid::new(vec![1.0]).unwrap();
    let report = relative_errors(&sys, &red, &grid).unwrap();
    let e = report.points[0].e_r.unwrap();
    assert!((e - 1.0 / 9.0).abs() < 1e-15, "{e}");
}

#[test]
fn scalar_errors_are_plain_relative_errors() {
    let sys = circuit(Topology::Ladder, 30, 1, 4);
    let red = sip0(&sys);
    let grid = FrequencyGrid::log_spaced(1e3, 1e12, 10).unwrap();
    let report = relative_errors(&sys, &red, &grid).unwrap();
    for pt in &report.points {
        let h = eval_transfer_real(&sys, pt.f).unwrap()[(0, 0)];
        let hr = eval_transfer_real(&red, pt.f).unwrap()[(0, 0)];
        assert_eq!(pt.e_r.unwrap(), (h - hr).abs() / h.abs());
        let s = Complex64::new(0.0, 2.0 * std::f64::consts::PI * pt.f);
        let h = eval_transfer(&sys, s).unwrap()[(0, 0)];
        let hr = eval_transfer(&red, s).unwrap()[(0, 0)];
        assert!((pt.e_c.unwrap() - (h - hr).norm() / h.norm()).abs() <= 1e-15);
    }
}

#[test]
fn self_comparison_is_exact() {
    let sys = circuit(Topology::Mesh, 50, 3, 5);
    let report = relative_errors(&sys, &sys, &FrequencyGrid::default()).unwrap();
    let s = report.summary();
    assert_eq!((s.max_e_r, s.max_e_c, s.undefined), (0.0, 0.0, 0));
}

#[test]
fn port_mismatch() {
    let a = circuit(Topology::Mesh, 30, 2, 1);
    let b = circuit(Topology::Mesh, 30, 3, 1);
    assert!(matches!(
        relative_errors(&a, &b, &FrequencyGrid::default()),
        Err(AnalysisError::PortMismatch { .. })
    ));
}

#[test]
fn spectral_norm_matches_svd() {
    let m = DMatrix::from_fn(3, 3, |i, j| {
        Complex64::new((i + 2 * j) as f64, i as f64 - j as f64)
    });
    let want = m.clone().singular_values().max();
    assert!((spectral_norm(&m) - want).abs() < 1e-12 * want);
    let one = DMatrix::from_element(1, 1, Complex64::new(3.0, -4.0));
    assert_eq!(spectral_norm(&one), 5.0);
}

#[test]
fn expansion_points_are_accurate_on_the_real_axis() {
    for (name, sys) in suite(9) {
        let pts = [0.0, 1e6, 1e9];
        let red = smp_reduce(
            &sys,
            &ExpansionSchedule::new(pts.to_vec()).unwrap(),
            &ReductionOptions::default(),
        )
        .unwrap();
        // E_R is evaluated at s = f; f = 0 is the DC point.
        let report =
            relative_errors(&sys, &red, &FrequencyGrid::new(pts.to_vec()).unwrap()).unwrap();
        for p in &report.points {
            assert!(
                p.e_r.unwrap() <= 1e-8,
                "{name} at {}: {:e}",
                p.f,
                p.e_r.unwrap()
            );
        }
    }
}

#[test]
fn sweep_examples() {
    let sys = worked_example();
    let s = sweep(
        &sys,
        &FrequencyGrid::new(vec![0.0]).unwrap(),
        Axis::Imaginary,
    )
    .unwrap();
    assert_eq!(s[0].h.as_ref().unwrap()[(0, 0)], Complex64::new(2.0, 0.0));
    assert_eq!(FrequencyGrid::default().len(), 101);
    assert_eq!(FrequencyGrid::default().points()[0], 0.0);
}

#[test]
fn singular_points_are_flagged() {
    // Capacitor only: G = 0, singular at DC.
    let sys = assemble_mna(&parse_netlist("C1 a 0 1p\n.ports a\n").unwrap()).unwrap();
    assert!(matches!(
        eval_transfer(&sys, Complex64::new(0.0, 0.0)),
        Err(AnalysisError::SingularAtPoint { .. })
    ));
    assert!(matches!(
        moments(&sys, 0.0, 2),
        Err(AnalysisError::SingularAtPoint { .. })
    ));
    let samples = sweep(&sys, &FrequencyGrid::default(), Axis::Imaginary).unwrap();
    assert!(samples[0].h.is_none());
    assert!(samples[1..].iter().all(|s| s.h.is_some()));
    let mut csv = Vec::new();
    write_sweep_csv(&samples, &mut csv).unwrap();
    let rows = read_sweep_csv(csv.as_slice()).unwrap();
    assert_eq!(rows.len(), 101);
    assert!(rows[0].h.re.is_nan() && rows[0].h.im.is_nan());
}

#[test]
fn sweep_csv_round_trip() {
    let sys = circuit(Topology::Mesh, 40, 2, 7);
    let grid = FrequencyGrid::default();
    let samples = sweep_parallel(&sys, &grid, Axis::Imaginary).unwrap();
    let mut csv = Vec::new();
    write_sweep_csv(&samples, &mut csv).unwrap();
    assert!(csv.starts_with(b"f,i,j,re,im\n"));
    let rows = read_sweep_csv(csv.as_slice()).unwrap();
    assert_eq!(rows.len(), 101 * 4);
    for (k, row) in rows.iter().enumerate() {
        let s = &samples[k / 4];
        let h = s.h.as_ref().unwrap()[(row.i, row.j)];
        assert_eq!((row.f, row.h.re, row.h.im), (s.f, h.re, h.im));
    }
}

#[test]
fn parallel_sweep_is_byte_identical() {
    let sys = circuit(Topology::Tree, 60, 3, 2);
    let grid = FrequencyGrid::default();
    for axis in [Axis::Real, Axis::Imaginary] {
        let (mut a, mut b) = (Vec::new(), Vec::new());
        write_sweep_csv(&sweep(&sys, &grid, axis).unwrap(), &mut a).unwrap();
        write_sweep_csv(&sweep_parallel(&sys, &grid, axis).unwrap(), &mut b).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn error_csv_layout() {
    let sys = worked_example();
    let red = sip0(&sys);
    let report = relative_errors(&sys, &red, &FrequencyGrid::new(vec![0.0, 1.0]).unwrap()).unwrap();
    let mut out = Vec::new();
    write_error_csv(&report, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("f,axis,metric,value"));
    assert_eq!(lines.count(), 4);
}

#[test]
fn grid_parsing() {
    let g: FrequencyGrid = "1:1e3:4".parse().unwrap();
    let want = [1.0, 10.0, 100.0, 1000.0];
    for (a, b) in g.points().iter().zip(want) {
        assert!((a - b).abs() < 1e-12 * b);
    }
    assert!("1:0:4".parse::<FrequencyGrid>().is_err());
    assert_eq!("imag".parse::<Axis>().unwrap(), Axis::Imaginary);
}

#[test]
fn single_stage_recurrence_is_direct_evaluation() {
    let sys = circuit(Topology::Mesh, 40, 3, 1);
    let d = verify_cascade(
        &sys,
        &ExpansionSchedule::new(vec![0.0]).unwrap(),
        &ReductionOptions::default(),
    )
    .unwrap();
    assert_eq!(d.block_sizes.len(), 1);
    assert!(d.recurrence_error < 1e-12);
    assert!(d.pre_truncation_error < 1e-10);
    assert!(d.leading_block_error < 1e-12);
}

#[test]
fn transfer_agrees_with_dense_solve() {
    for (name, sys) in suite(6) {
        for w in [0.0, 1e4, 1e9, 1e12] {
            let s = Complex64::new(0.0, w);
            let h = eval_transfer(&sys, s).unwrap();
            let d = dense_transfer(&sys, s);
            assert!((&h - &d).norm() <= 1e-9 * d.norm(), "{name} at {w}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn taylor_consistency(seed in any::<u64>(), topo in 0usize..3, s0 in prop::sample::select(vec![0.0, 1e3, 1e6])) {
        let topo = [Topology::Ladder, Topology::Mesh, Topology::Tree][topo];
        let sys = circuit(topo, 25, 2, seed);
        let m = moments(&sys, s0, 4).unwrap();
        // Central difference with the step tied to a ratio-test estimate of
        // the radius of convergence about s0, so that neither truncation
        // nor cancellation dominates.
        let radius = m.terms.windows(2).map(|w| w[0].norm() / w[1].norm()).fold(f64::INFINITY, f64::min);
        let h = 1e-3 * radius;
        let hp = eval_transfer_real(&sys, s0 + h).unwrap();
        let hm = eval_transfer_real(&sys, s0 - h).unwrap();
        let fd = (hp - hm) / (2.0 * h);
        prop_assert!((&fd - &m.terms[1]).norm() <= 1e-4 * m.terms[1].norm());
    }

    #[test]
    fn reciprocity(seed in any::<u64>(), s in prop::sample::select(vec![0.0, 1.0, 1e6, 1e12])) {
        let sys = circuit(Topology::Mesh, 40, 4, seed);
        let h = eval_transfer_real(&sys, s).unwrap();
        prop_assert!((&h - h.transpose()).norm() <= 1e-12 * h.norm());
    }
}
