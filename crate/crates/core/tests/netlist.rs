mod common;

use std::collections::HashMap;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rcmor::analysis::eval_transfer;
use rcmor::netlist::*;
use rcmor::reduction::{prima_reduce, smp_reduce, ExpansionSchedule, ReductionOptions};
use rcmor::sparse::{spd_factorize, SymBuilder, SymSparse};
use rcmor::LinearSystem;

use common::worked_example;

fn mesh(n: usize, p: usize, seed: u64) -> Netlist {
    gen_synthetic(&SyntheticSpec::new(Topology::Mesh, n, p, seed)).unwrap()
}

#[test]
fn parses_minimal_netlist() {
    let nl = parse_netlist("R1 1 0 100\nC1 1 0 1e-12\n.ports 1\n.end").unwrap();
    assert_eq!(nl.ports, vec!["1".to_string()]);
    assert_eq!(nl.elements.len(), 2);
    assert_eq!(nl.elements[0].kind, ElementKind::Resistor);
    assert_eq!(nl.elements[1].kind, ElementKind::Capacitor);
    let sys = assemble_mna(&nl).unwrap();
    assert_eq!(sys.dim(), 1);
}

#[test]
fn missing_ports_directive() {
    assert!(matches!(
        parse_netlist("R1 1 0 100\n"),
        Err(NetlistError::Syntax { .. })
    ));
}

#[test]
fn si_suffixes() {
    for (text, want) in [
        ("1k", 1e3),
        ("1p", 1e-12),
        ("2.5MEG", 2.5e6),
        ("3f", 3e-15),
        ("4u", 4e-6),
        ("10m", 1e-2),
        ("1G", 1e9),
        ("7n", 7e-9),
        ("1e-12", 1e-12),
    ] {
        let got = parse_value(text).unwrap();
        assert!((got - want).abs() <= 1e-15 * want, "{text}: {got}");
    }
    assert_eq!(parse_value("abc"), None);
}

#[test]
fn parse_errors() {
    assert!(matches!(
        parse_netlist("R1 1 0 -5\n.ports 1\n"),
        Err(NetlistError::NonpositiveValue { .. })
    ));
    assert!(matches!(
        parse_netlist("R1 1 0 5\n.ports 2\n"),
        Err(NetlistError::UnknownNodeInPorts(_))
    ));
    assert!(matches!(
        parse_netlist("L1 1 0 5\n.ports 1\n"),
        Err(NetlistError::Syntax { .. })
    ));
}

#[test]
fn single_resistor_stamp() {
    let sys = assemble_mna(&parse_netlist("R1 a 0 100\n.ports a\n").unwrap()).unwrap();
    assert_eq!(sys.g().to_dense()[(0, 0)], 0.01);
    assert_eq!(sys.c().to_dense()[(0, 0)], 0.0);
}

#[test]
fn worked_example_stamps() {
    let sys = worked_example();
    assert_eq!(sys.g().to_dense(), nalgebra::dmatrix![1.0, -1.0; -1.0, 2.0]);
    assert_eq!(sys.c().to_dense(), nalgebra::dmatrix![0.0, 0.0; 0.0, 1.0]);
    assert_eq!(sys.port_names(), ["p"]);
}

#[test]
fn isolated_port() {
    // A port named by the directive but absent from every element line is
    // an unknown node; one that only touches itself has no incident element.
    assert!(assemble_mna(&Netlist {
        elements: vec![Element {
            name: "R1".into(),
            kind: ElementKind::Resistor,
            a: "x".into(),
            b: "0".into(),
            value: 1.0,
        }],
        ports: vec!["y".into()],
    })
    .is_err());
}

#[test]
fn generated_circuits_are_m_matrices() {
    for topo in [Topology::Ladder, Topology::Mesh, Topology::Tree] {
        let sys =
            assemble_mna(&gen_synthetic(&SyntheticSpec::new(topo, 60, 3, 5)).unwrap()).unwrap();
        for m in [sys.g(), sys.c()] {
            assert!(m.is_exactly_symmetric());
            for (i, j, v) in m.triplets() {
                if i == j {
                    assert!(v >= 0.0);
                } else {
                    assert!(v <= 0.0);
                }
            }
        }
    }
}

#[test]
fn generator_examples() {
    let a = gen_synthetic(&SyntheticSpec::new(Topology::Ladder, 4, 1, 7)).unwrap();
    let b = gen_synthetic(&SyntheticSpec::new(Topology::Ladder, 4, 1, 7)).unwrap();
    assert_eq!(write_netlist(&a), write_netlist(&b));

    let sys = assemble_mna(&mesh(100, 8, 1)).unwrap();
    spd_factorize(sys.g()).unwrap();

    let n = 50;
    let tree = assemble_mna(&gen_synthetic(&SyntheticSpec::new(Topology::Tree, n, 3, 9)).unwrap())
        .unwrap();
    assert_eq!(tree.g().nnz(), 2 * (n - 1) + n);

    assert!(gen_synthetic(&SyntheticSpec::new(Topology::Mesh, 5, 6, 0)).is_err());
}

#[test]
fn generated_pencils_are_positive_definite() {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    use rand::Rng;
    for i in 0..100 {
        let topo = [Topology::Ladder, Topology::Mesh, Topology::Tree][i % 3];
        let n = rng.random_range(2..120);
        let p = rng.random_range(1..=n.min(6));
        let sys =
            assemble_mna(&gen_synthetic(&SyntheticSpec::new(topo, n, p, rng.random())).unwrap())
                .unwrap();
        for s in [0.0, 1e3, 1e9, 1e13] {
            spd_factorize(&sys.g().add_scaled(sys.c(), s).unwrap()).unwrap();
        }
    }
}

#[test]
fn netlist_text_round_trip() {
    let nl = mesh(40, 3, 2);
    assert_eq!(parse_netlist(&write_netlist(&nl)).unwrap(), nl);
}

/// Renames every non-ground node through a random bijection.
fn relabel(nl: &Netlist, seed: u64) -> Netlist {
    let mut names: Vec<String> = nl
        .elements
        .iter()
        .flat_map(|e| [e.a.clone(), e.b.clone()])
        .filter(|n| n != GROUND)
        .collect();
    names.sort();
    names.dedup();
    let mut shuffled = names.clone();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let map: HashMap<&String, String> = names
        .iter()
        .zip(shuffled.iter().map(|s| format!("n{s}")))
        .collect();
    let rename = |x: &String| map.get(x).cloned().unwrap_or_else(|| x.clone());
    Netlist {
        elements: nl
            .elements
            .iter()
            .map(|e| Element {
                a: rename(&e.a),
                b: rename(&e.b),
                ..e.clone()
            })
            .collect(),
        ports: nl.ports.iter().map(rename).collect(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn element_order_does_not_matter(seed in any::<u64>()) {
        let nl = mesh(30, 2, 4);
        let mut shuffled = nl.clone();
        shuffled.elements.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(assemble_mna(&nl).unwrap(), assemble_mna(&shuffled).unwrap());
    }

    #[test]
    fn transfer_invariant_under_relabeling(seed in any::<u64>(), topo in 0usize..3) {
        let topo = [Topology::Ladder, Topology::Mesh, Topology::Tree][topo];
        let nl = gen_synthetic(&SyntheticSpec::new(topo, 35, 3, seed)).unwrap();
        let a = assemble_mna(&nl).unwrap();
        let b = assemble_mna(&relabel(&nl, seed ^ 0xabc)).unwrap();
        // Different labels give a different pivot order, so agreement is
        // limited by conditioning: 1e-12 or ~κ(G)·ε, whichever is larger.
        let sv = a.g().to_dense().singular_values();
        let tol = (10.0 * f64::EPSILON * sv.max() / sv.min()).max(1e-12);
        for k in 0..10 {
            let s = Complex64::new(0.0, 10f64.powf(k as f64 * 1.3));
            let (ha, hb) = (eval_transfer(&a, s).unwrap(), eval_transfer(&b, s).unwrap());
            prop_assert!((&ha - &hb).norm() <= tol * ha.norm());
        }
    }

    #[test]
    fn triplets_round_trip_bit_exact(entries in prop::collection::vec((0usize..12, 0usize..12, -1e6f64..1e6), 1..40)) {
        let mut b = SymBuilder::new(12);
        for (i, j, v) in entries {
            b.add(i, j, v);
        }
        let m = b.build().unwrap();
        let mut buf = Vec::new();
        write_triplets(&m, &mut buf).unwrap();
        let file = read_triplets(buf.as_slice(), "mem").unwrap();
        let mut rb = SymBuilder::new(file.rows);
        for &(i, j, v) in &file.entries {
            if i >= j {
                rb.add(i, j, v);
            }
        }
        prop_assert_eq!(rb.build().unwrap(), m);
    }
}

#[test]
fn saved_triplets_reload_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let sys = assemble_mna(&mesh(50, 3, 8)).unwrap();
    let (gp, cp) = (dir.path().join("g.mtx"), dir.path().join("c.mtx"));
    save_triplets(&gp, sys.g()).unwrap();
    save_triplets(&cp, sys.c()).unwrap();
    let loaded = load_sparse_triplets(&gp, &cp, &PortSource::First(3)).unwrap();
    assert!(loaded.warnings.is_empty());
    assert_eq!(loaded.system.g(), sys.g());
    assert_eq!(loaded.system.c(), sys.c());
    assert_eq!(loaded.system.ports(), 3);
}

#[test]
fn ports_file_reorders_ports_first() {
    let dir = tempfile::tempdir().unwrap();
    let sys = worked_example();
    let (gp, cp, pp) = (
        dir.path().join("g.mtx"),
        dir.path().join("c.mtx"),
        dir.path().join("ports"),
    );
    save_triplets(&gp, sys.g()).unwrap();
    save_triplets(&cp, sys.c()).unwrap();
    std::fs::write(&pp, "# index name\n1 x\n").unwrap();
    let loaded = load_sparse_triplets(&gp, &cp, &PortSource::File(pp))
        .unwrap()
        .system;
    assert_eq!(loaded.port_names(), ["x"]);
    assert_eq!(
        loaded.g().to_dense(),
        nalgebra::dmatrix![2.0, -1.0; -1.0, 1.0]
    );
}

#[test]
fn dimension_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let (gp, cp) = (dir.path().join("g.mtx"), dir.path().join("c.mtx"));
    save_triplets(&gp, &SymSparse::identity(3)).unwrap();
    save_triplets(&cp, &SymSparse::identity(2)).unwrap();
    assert!(matches!(
        load_sparse_triplets(&gp, &cp, &PortSource::First(1)),
        Err(NetlistError::DimensionMismatch { g: 3, c: 2 })
    ));
}

#[test]
fn asymmetric_pair_is_averaged_with_warning() {
    let dir = tempfile::tempdir().unwrap();
    let (gp, cp) = (dir.path().join("g.mtx"), dir.path().join("c.mtx"));
    std::fs::write(&gp, "2 4\n0 0 2\n1 1 2\n0 1 -1\n1 0 -1.000001\n").unwrap();
    std::fs::write(&cp, "2 2\n0 0 1\n1 1 1\n").unwrap();
    let loaded = load_sparse_triplets(&gp, &cp, &PortSource::First(1)).unwrap();
    assert_eq!(loaded.warnings.len(), 1);
    let g = loaded.system.g();
    assert!((g.get(0, 1) + 1.0000005).abs() < 1e-15);
    assert_eq!(g.get(0, 1), g.get(1, 0));
}

#[test]
fn reduced_model_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let sys = assemble_mna(&mesh(80, 4, 3)).unwrap();
    let smp = smp_reduce(
        &sys,
        &ExpansionSchedule::new(vec![0.0, 1e9]).unwrap(),
        &ReductionOptions::default(),
    )
    .unwrap();
    let prima = prima_reduce(&sys, 2, 0.0).unwrap();
    for (name, model) in [("smp.json", smp), ("prima.json", prima)] {
        let path = dir.path().join(name);
        save_reduced(&model, &path).unwrap();
        let back = load_reduced(&path).unwrap();
        let meta: ReducedMetadata =
            serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(meta.blocks.iter().sum::<usize>(), back.dim());
        assert_eq!(back.block_sizes(), model.block_sizes());
        assert_eq!(back.points(), model.points());
        assert_eq!(back.port_names(), model.port_names());
        for k in 0..5 {
            let s = Complex64::new(0.0, 10f64.powi(2 * k + 3));
            let (a, b) = (
                eval_transfer(&model, s).unwrap(),
                eval_transfer(&back, s).unwrap(),
            );
            assert!((&a - &b).norm() <= 1e-15 * a.norm());
        }
    }
}

#[test]
fn empty_model_path() {
    let sys = worked_example();
    let red = smp_reduce(
        &sys,
        &ExpansionSchedule::new(vec![0.0]).unwrap(),
        &ReductionOptions::default(),
    )
    .unwrap();
    assert!(matches!(
        save_reduced(&red, std::path::Path::new("")),
        Err(NetlistError::Io { .. })
    ));
}
