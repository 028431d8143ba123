use std::collections::BTreeSet;

use super::{SparseError, SymSparse};

/// A bijection on `0..len`.
///
/// `forward()[k]` is the original index placed at position `k`;
/// `inverse()[i]` is the position of original index `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    forward: Vec<usize>,
    inverse: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Self {
            forward: (0..n).collect(),
            inverse: (0..n).collect(),
        }
    }

    pub fn from_forward(forward: Vec<usize>) -> Result<Self, SparseError> {
        let n = forward.len();
        let mut inverse = vec![usize::MAX; n];
        for (k, &i) in forward.iter().enumerate() {
            if i >= n || inverse[i] != usize::MAX {
                return Err(SparseError::InvalidPermutation);
            }
            inverse[i] = k;
        }
        Ok(Self { forward, inverse })
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    pub fn forward(&self) -> &[usize] {
        &self.forward
    }

    pub fn inverse(&self) -> &[usize] {
        &self.inverse
    }
}

/// Minimum-degree elimination order of the graph of `m`.
///
/// Ties go to the lowest original index, so the output is a pure function of
/// the sparsity pattern.
pub fn amd_order(m: &SymSparse) -> Permutation {
    let order = min_degree_order(m, &vec![true; m.dim()]);
    Permutation::from_forward(order).expect("minimum degree visits every node once")
}

/// Minimum-degree order restricted to the `eligible` nodes.
///
/// Ineligible nodes stay in the graph (their degree counts toward their
/// neighbours) but are never chosen as pivots. Returns only eligible nodes,
/// in elimination order.
pub(crate) fn min_degree_order(m: &SymSparse, eligible: &[bool]) -> Vec<usize> {
    let n = m.dim();
    let mut adj: Vec<BTreeSet<usize>> = (0..n)
        .map(|i| m.row(i).map(|(j, _)| j).filter(|&j| j != i).collect())
        .collect();
    let mut queue: BTreeSet<(usize, usize)> = (0..n)
        .filter(|&i| eligible[i])
        .map(|i| (adj[i].len(), i))
        .collect();
    let mut order = Vec::with_capacity(queue.len());
    while let Some((_, v)) = queue.pop_first() {
        order.push(v);
        let nbrs: Vec<usize> = std::mem::take(&mut adj[v]).into_iter().collect();
        for &u in &nbrs {
            let before = adj[u].len();
            adj[u].remove(&v);
            for &w in &nbrs {
                if w != u {
                    adj[u].insert(w);
                }
            }
            if eligible[u] && adj[u].len() != before {
                queue.remove(&(before, u));
                queue.insert((adj[u].len(), u));
            }
        }
    }
    order
}
