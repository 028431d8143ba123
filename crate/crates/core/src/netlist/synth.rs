use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Element, ElementKind, Netlist, NetlistError, GROUND};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Topology {
    /// RC chain with a capacitor to ground at every node.
    Ladder,
    /// Near-square resistive grid with grounded and random coupling capacitors.
    Mesh,
    /// Random resistive tree rooted at a grounded node.
    Tree,
}

impl std::str::FromStr for Topology {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ladder" => Ok(Topology::Ladder),
            "mesh" => Ok(Topology::Mesh),
            "tree" => Ok(Topology::Tree),
            other => Err(format!("unknown topology {other}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub topology: Topology,
    pub n: usize,
    pub p: usize,
    pub seed: u64,
    /// Resistance range in ohms, sampled log-uniformly.
    pub r_range: (f64, f64),
    /// Capacitance range in farads, sampled log-uniformly.
    pub c_range: (f64, f64),
}

impl SyntheticSpec {
    pub fn new(topology: Topology, n: usize, p: usize, seed: u64) -> Self {
        Self {
            topology,
            n,
            p,
            seed,
            r_range: (1.0, 1e4),
            c_range: (1e-15, 1e-12),
        }
    }

    fn validate(&self) -> Result<(), NetlistError> {
        let bad = |m: String| Err(NetlistError::InvalidSpec(m));
        if self.n == 0 || self.p == 0 {
            return bad("need at least one node and one port".into());
        }
        if self.p > self.n {
            return bad(format!("{} ports exceed {} nodes", self.p, self.n));
        }
        for (lo, hi) in [self.r_range, self.c_range] {
            if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                return bad(format!("range [{lo}, {hi}] must be positive and ordered"));
            }
        }
        Ok(())
    }
}

struct Builder {
    rng: ChaCha8Rng,
    spec: SyntheticSpec,
    elements: Vec<Element>,
}

impl Builder {
    fn log_uniform(&mut self, (lo, hi): (f64, f64)) -> f64 {
        if lo == hi {
            return lo;
        }
        self.rng.random_range(lo.ln()..hi.ln()).exp()
    }

    fn push(&mut self, kind: ElementKind, a: Option<usize>, b: Option<usize>) {
        let (prefix, range) = match kind {
            ElementKind::Resistor => ('R', self.spec.r_range),
            ElementKind::Capacitor => ('C', self.spec.c_range),
        };
        let value = self.log_uniform(range);
        let name = |k: Option<usize>| k.map_or(GROUND.to_string(), |k| (k + 1).to_string());
        let count = self.elements.iter().filter(|e| e.kind == kind).count() + 1;
        self.elements.push(Element {
            name: format!("{prefix}{count}"),
            kind,
            a: name(a),
            b: name(b),
            value,
        });
    }
}

/// Generates a deterministic synthetic RC network. Every node has a resistive
/// path to ground, so `G + sC` is positive definite for `s ≥ 0`.
pub fn gen_synthetic(spec: &SyntheticSpec) -> Result<Netlist, NetlistError> {
    spec.validate()?;
    let n = spec.n;
    let mut b = Builder {
        rng: ChaCha8Rng::seed_from_u64(spec.seed),
        spec: spec.clone(),
        elements: Vec::new(),
    };
    use ElementKind::{Capacitor as C, Resistor as R};
    let ports: Vec<usize> = match spec.topology {
        Topology::Ladder => {
            for k in 0..n - 1 {
                b.push(R, Some(k), Some(k + 1));
            }
            for k in 0..n {
                b.push(C, Some(k), None);
            }
            b.push(R, Some(n - 1), None);
            // Evenly spread along the chain, starting at the driving end.
            (0..spec.p)
                .map(|i| {
                    if spec.p == 1 {
                        0
                    } else {
                        (i * (n - 1) + (spec.p - 1) / 2) / (spec.p - 1)
                    }
                })
                .collect()
        }
        Topology::Mesh => {
            let w = (n as f64).sqrt().ceil() as usize;
            for k in 0..n {
                if (k + 1) % w != 0 && k + 1 < n {
                    b.push(R, Some(k), Some(k + 1));
                }
                if k + w < n {
                    b.push(R, Some(k), Some(k + w));
                }
            }
            for k in 0..n {
                b.push(C, Some(k), None);
            }
            for _ in 0..n / 10 {
                let i = b.rng.random_range(0..n);
                let j = b.rng.random_range(0..n);
                if i != j {
                    b.push(C, Some(i), Some(j));
                }
            }
            b.push(R, Some(0), None);
            if n > 1 {
                b.push(R, Some(n - 1), None);
            }
            sample_ports(&mut b.rng, n, spec.p)
        }
        Topology::Tree => {
            for k in 1..n {
                let parent = b.rng.random_range(0..k);
                b.push(R, Some(parent), Some(k));
            }
            for k in 0..n {
                b.push(C, Some(k), None);
            }
            b.push(R, Some(0), None);
            sample_ports(&mut b.rng, n, spec.p)
        }
    };
    Ok(Netlist {
        elements: b.elements,
        ports: ports.into_iter().map(|k| (k + 1).to_string()).collect(),
    })
}

fn sample_ports(rng: &mut ChaCha8Rng, n: usize, p: usize) -> Vec<usize> {
    let mut idx = rand::seq::index::sample(rng, n, p).into_vec();
    idx.sort_unstable();
    idx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::assemble_mna;
    use crate::sparse::spd_factorize;
    use crate::LinearSystem;

    #[test]
    fn deterministic() {
        let spec = SyntheticSpec::new(Topology::Ladder, 4, 1, 7);
        assert_eq!(gen_synthetic(&spec).unwrap(), gen_synthetic(&spec).unwrap());
        let other = SyntheticSpec {
            seed: 8,
            ..spec.clone()
        };
        assert_ne!(
            gen_synthetic(&spec).unwrap(),
            gen_synthetic(&other).unwrap()
        );
    }

    #[test]
    fn mesh_is_spd() {
        let nl = gen_synthetic(&SyntheticSpec::new(Topology::Mesh, 100, 8, 1)).unwrap();
        let sys = assemble_mna(&nl).unwrap();
        assert_eq!(sys.dim(), 100);
        assert_eq!(sys.ports(), 8);
        spd_factorize(sys.g()).unwrap();
    }

    #[test]
    fn tree_edge_count() {
        let n = 50;
        let nl = gen_synthetic(&SyntheticSpec::new(Topology::Tree, n, 3, 5)).unwrap();
        let sys = assemble_mna(&nl).unwrap();
        assert_eq!(sys.g().nnz(), 2 * (n - 1) + n);
    }

    #[test]
    fn ladder_ports_distinct() {
        for n in 1..12 {
            for p in 1..=n {
                let nl = gen_synthetic(&SyntheticSpec::new(Topology::Ladder, n, p, 0)).unwrap();
                let mut ports = nl.ports.clone();
                ports.sort();
                ports.dedup();
                assert_eq!(ports.len(), p, "n={n} p={p}");
            }
        }
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(gen_synthetic(&SyntheticSpec::new(Topology::Mesh, 3, 4, 0)).is_err());
        let spec = SyntheticSpec {
            r_range: (0.0, 1.0),
            ..SyntheticSpec::new(Topology::Mesh, 3, 1, 0)
        };
        assert!(gen_synthetic(&spec).is_err());
    }
}
