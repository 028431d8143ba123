use std::collections::HashMap;

use crate::sparse::{Permutation, SymBuilder, SymSparse};
use crate::{InputMap, LinearSystem};

use super::{ElementKind, Netlist, NetlistError, GROUND};

/// Grounded MNA pencil of an RC network with the ports ordered first.
#[derive(Debug, Clone, PartialEq)]
pub struct MnaSystem {
    g: SymSparse,
    c: SymSparse,
    ports: usize,
    node_names: Vec<String>,
}

impl MnaSystem {
    pub fn new(
        g: SymSparse,
        c: SymSparse,
        ports: usize,
        node_names: Vec<String>,
    ) -> Result<Self, NetlistError> {
        if g.dim() != c.dim() {
            return Err(NetlistError::DimensionMismatch {
                g: g.dim(),
                c: c.dim(),
            });
        }
        if ports > g.dim() || node_names.len() != g.dim() {
            return Err(NetlistError::InvalidSystem(format!(
                "{} ports and {} names for dimension {}",
                ports,
                node_names.len(),
                g.dim()
            )));
        }
        Ok(Self {
            g,
            c,
            ports,
            node_names,
        })
    }

    pub fn ports(&self) -> usize {
        self.ports
    }

    pub fn node_names(&self) -> &[String] {
        &self.node_names
    }

    pub fn port_names(&self) -> &[String] {
        &self.node_names[..self.ports]
    }

    /// Relabels the internal nodes; `perm` acts on `0..dim-ports`.
    pub fn permute_interior(&self, perm: &Permutation) -> Result<Self, NetlistError> {
        let p = self.ports;
        let mut fwd: Vec<usize> = (0..p).collect();
        fwd.extend(perm.forward().iter().map(|&i| i + p));
        let full = Permutation::from_forward(fwd)?;
        Ok(Self {
            g: self.g.permute(&full)?,
            c: self.c.permute(&full)?,
            ports: p,
            node_names: full
                .forward()
                .iter()
                .map(|&i| self.node_names[i].clone())
                .collect(),
        })
    }
}

impl LinearSystem for MnaSystem {
    fn g(&self) -> &SymSparse {
        &self.g
    }
    fn c(&self) -> &SymSparse {
        &self.c
    }
    fn input(&self) -> InputMap<'_> {
        InputMap::Leading(self.ports)
    }
}

fn natural_key(name: &str) -> (u8, u64, &str) {
    match name.parse::<u64>() {
        Ok(v) => (0, v, ""),
        Err(_) => (1, 0, name),
    }
}

/// Stamps the netlist into `(G, C)` with the ground row dropped and the
/// ports first (in `.ports` order). Internal nodes follow in natural name
/// order, and elements are stamped in a canonical order, so the result does
/// not depend on the order of netlist lines.
pub fn assemble_mna(nl: &Netlist) -> Result<MnaSystem, NetlistError> {
    let mut names: Vec<String> = nl.ports.clone();
    let mut index: HashMap<&str, usize> = nl
        .ports
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();
    let mut interior: Vec<&str> = nl
        .elements
        .iter()
        .flat_map(|e| [e.a.as_str(), e.b.as_str()])
        .filter(|n| *n != GROUND && !index.contains_key(n))
        .collect();
    interior.sort_by_key(|n| natural_key(n));
    interior.dedup();
    for n in interior {
        index.insert(n, names.len());
        names.push(n.to_string());
    }
    let node = |name: &str| (name != GROUND).then(|| index[name]);

    let mut stamps: Vec<(ElementKind, Option<usize>, Option<usize>, f64)> = nl
        .elements
        .iter()
        .map(|e| {
            let (a, b) = (node(&e.a), node(&e.b));
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            (e.kind, lo, hi, e.value)
        })
        .collect();
    stamps.sort_by(|x, y| {
        (x.0 as u8, x.1, x.2, x.3.to_bits()).cmp(&(y.0 as u8, y.1, y.2, y.3.to_bits()))
    });

    let n = names.len();
    let (mut g, mut c) = (SymBuilder::new(n), SymBuilder::new(n));
    for (kind, a, b, value) in stamps {
        if a == b {
            continue;
        }
        let (target, w) = match kind {
            ElementKind::Resistor => (&mut g, 1.0 / value),
            ElementKind::Capacitor => (&mut c, value),
        };
        if let Some(i) = a {
            target.add(i, i, w);
        }
        if let Some(j) = b {
            target.add(j, j, w);
        }
        if let (Some(i), Some(j)) = (a, b) {
            target.add(i, j, -w);
        }
    }
    let (g, c) = (g.build()?, c.build()?);
    if let Some(k) =
        (0..nl.ports.len()).find(|&k| g.row(k).next().is_none() && c.row(k).next().is_none())
    {
        return Err(NetlistError::IsolatedPortNode(nl.ports[k].clone()));
    }
    MnaSystem::new(g, c, nl.ports.len(), names)
}
