use std::collections::BTreeMap;

use nalgebra::DMatrix;

use super::{Permutation, SparseError};

/// Symmetric sparse matrix.
///
/// Both triangles are stored in compressed-row form so that row `i` lists
/// every stored `(i, j)`. Matrices are only ever built through
/// [`SymBuilder`] or from a dense lower triangle, so `value(i, j)` and
/// `value(j, i)` are the same `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymSparse {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

/// Accumulates contributions to unordered index pairs.
///
/// `add(i, j, v)` with `i != j` contributes `v` to both `(i, j)` and
/// `(j, i)`, which is exactly how a two-terminal element stamps.
#[derive(Debug, Clone)]
pub struct SymBuilder {
    dim: usize,
    entries: BTreeMap<(usize, usize), f64>,
    bad: Option<SparseError>,
}

impl SymBuilder {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            entries: BTreeMap::new(),
            bad: None,
        }
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) -> &mut Self {
        if self.bad.is_some() {
            return self;
        }
        if i >= self.dim || j >= self.dim {
            self.bad = Some(SparseError::IndexOutOfBounds {
                row: i,
                col: j,
                dim: self.dim,
            });
            return self;
        }
        if !v.is_finite() {
            self.bad = Some(SparseError::NonFinite { row: i, col: j });
            return self;
        }
        let key = if i >= j { (i, j) } else { (j, i) };
        *self.entries.entry(key).or_insert(0.0) += v;
        self
    }

    /// Builds the matrix, keeping every touched pair (even if it summed to zero).
    pub fn build(self) -> Result<SymSparse, SparseError> {
        if let Some(e) = self.bad {
            return Err(e);
        }
        Ok(SymSparse::from_lower_map(self.dim, &self.entries, false))
    }

    /// Builds the matrix, dropping pairs whose accumulated value is exactly zero.
    pub fn build_pruned(self) -> Result<SymSparse, SparseError> {
        if let Some(e) = self.bad {
            return Err(e);
        }
        Ok(SymSparse::from_lower_map(self.dim, &self.entries, true))
    }
}

impl SymSparse {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            row_ptr: vec![0; dim + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::scaled_identity(dim, 1.0)
    }

    pub fn scaled_identity(dim: usize, v: f64) -> Self {
        Self {
            dim,
            row_ptr: (0..=dim).collect(),
            col_idx: (0..dim).collect(),
            values: vec![v; dim],
        }
    }

    fn from_lower_map(dim: usize, lower: &BTreeMap<(usize, usize), f64>, prune: bool) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); dim];
        for (&(i, j), &v) in lower {
            if prune && v == 0.0 {
                continue;
            }
            rows[i].push((j, v));
            if i != j {
                rows[j].push((i, v));
            }
        }
        Self::from_rows(dim, rows)
    }

    fn from_rows(dim: usize, mut rows: Vec<Vec<(usize, f64)>>) -> Self {
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let nnz = rows.iter().map(Vec::len).sum();
        let mut col_idx = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        row_ptr.push(0);
        for row in rows.iter_mut() {
            row.sort_unstable_by_key(|&(j, _)| j);
            for &(j, v) in row.iter() {
                col_idx.push(j);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            dim,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Symmetric matrix from the lower triangle of a dense square matrix;
    /// exact zeros are not stored.
    pub fn from_dense_lower(m: &DMatrix<f64>) -> Result<Self, SparseError> {
        if m.nrows() != m.ncols() {
            return Err(SparseError::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        let mut b = SymBuilder::new(m.nrows());
        for j in 0..m.ncols() {
            for i in j..m.nrows() {
                let v = m[(i, j)];
                if v != 0.0 {
                    b.add(i, j, v);
                }
            }
        }
        b.build()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Stored entries counting both triangles.
    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub(crate) fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub(crate) fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub(crate) fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[range.clone()].binary_search(&j) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    /// Iterates the lower triangle (including the diagonal) as `(i, j, v)`, `i >= j`.
    pub fn lower_triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dim).flat_map(move |i| {
            self.row(i)
                .take_while(move |&(j, _)| j <= i)
                .map(move |(j, v)| (i, j, v))
        })
    }

    /// Iterates every stored entry, both triangles.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dim).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (i, j, v) in self.triplets() {
            m[(i, j)] = v;
        }
        m
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs_diagonal(&self) -> f64 {
        self.diagonal().iter().fold(0.0_f64, |m, d| m.max(d.abs()))
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    pub fn mul_dense(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(x.nrows(), self.dim, "dimension mismatch in mul_dense");
        let mut y = DMatrix::zeros(self.dim, x.ncols());
        for c in 0..x.ncols() {
            for i in 0..self.dim {
                let mut acc = 0.0;
                for (j, v) in self.row(i) {
                    acc += v * x[(j, c)];
                }
                y[(i, c)] = acc;
            }
        }
        y
    }

    /// `self + s * other`, over the union of both patterns.
    pub fn add_scaled(&self, other: &SymSparse, s: f64) -> Result<SymSparse, SparseError> {
        if self.dim != other.dim {
            return Err(SparseError::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let mut b = SymBuilder::new(self.dim);
        for (i, j, v) in self.lower_triplets() {
            b.add(i, j, v);
        }
        for (i, j, v) in other.lower_triplets() {
            b.add(i, j, s * v);
        }
        b.build()
    }

    /// `P M Pᵀ`: entry `(k, l)` of the result is entry
    /// `(perm.forward()[k], perm.forward()[l])` of `self`.
    pub fn permute(&self, perm: &Permutation) -> Result<SymSparse, SparseError> {
        if perm.len() != self.dim {
            return Err(SparseError::DimensionMismatch {
                expected: self.dim,
                found: perm.len(),
            });
        }
        let inv = perm.inverse();
        let rows = (0..self.dim)
            .map(|k| {
                self.row(perm.forward()[k])
                    .map(|(j, v)| (inv[j], v))
                    .collect()
            })
            .collect();
        Ok(Self::from_rows(self.dim, rows))
    }

    /// Principal submatrix on `idx` (in that order).
    pub fn submatrix(&self, idx: &[usize]) -> SymSparse {
        let mut pos = vec![usize::MAX; self.dim];
        for (k, &i) in idx.iter().enumerate() {
            pos[i] = k;
        }
        let rows = idx
            .iter()
            .map(|&i| {
                self.row(i)
                    .filter(|&(j, _)| pos[j] != usize::MAX)
                    .map(|(j, v)| (pos[j], v))
                    .collect()
            })
            .collect();
        Self::from_rows(idx.len(), rows)
    }

    /// Dense `rows × cols` block (any index lists).
    pub fn block(&self, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
        let mut pos = vec![usize::MAX; self.dim];
        for (k, &j) in cols.iter().enumerate() {
            pos[j] = k;
        }
        let mut m = DMatrix::zeros(rows.len(), cols.len());
        for (r, &i) in rows.iter().enumerate() {
            for (j, v) in self.row(i) {
                if pos[j] != usize::MAX {
                    m[(r, pos[j])] = v;
                }
            }
        }
        m
    }

    /// Number of structurally nonzero positions in `a + b` (both triangles).
    pub fn union_nnz(a: &SymSparse, b: &SymSparse) -> usize {
        assert_eq!(a.dim, b.dim);
        (0..a.dim)
            .map(|i| {
                let (mut x, mut y) = (
                    a.row(i).map(|e| e.0).peekable(),
                    b.row(i).map(|e| e.0).peekable(),
                );
                let mut n = 0;
                loop {
                    match (x.peek(), y.peek()) {
                        (None, None) => break,
                        (Some(_), None) => {
                            x.next();
                        }
                        (None, Some(_)) => {
                            y.next();
                        }
                        (Some(&p), Some(&q)) => {
                            if p <= q {
                                x.next();
                            }
                            if q <= p {
                                y.next();
                            }
                        }
                    }
                    n += 1;
                }
                n
            })
            .sum()
    }

    pub fn is_exactly_symmetric(&self) -> bool {
        self.triplets().all(|(i, j, v)| self.get(j, i) == v)
    }
}

/// Symmetrizes a dense matrix in place by averaging mirrored entries.
pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builder_mirrors_off_diagonal() {
        let mut b = SymBuilder::new(3);
        b.add(0, 0, 2.0)
            .add(0, 1, -1.0)
            .add(2, 1, -0.5)
            .add(1, 0, -1.0);
        let m = b.build().unwrap();
        assert_eq!(m.get(0, 1), -2.0);
        assert_eq!(m.get(1, 0), -2.0);
        assert_eq!(m.get(1, 2), -0.5);
        assert_eq!(m.nnz(), 5);
        assert!(m.is_exactly_symmetric());
    }

    #[test]
    fn builder_rejects_bad_entries() {
        let mut b = SymBuilder::new(2);
        b.add(2, 0, 1.0);
        assert!(matches!(
            b.build(),
            Err(SparseError::IndexOutOfBounds { .. })
        ));
        let mut b = SymBuilder::new(2);
        b.add(1, 0, f64::NAN);
        assert!(matches!(b.build(), Err(SparseError::NonFinite { .. })));
    }

    #[test]
    fn permute_and_submatrix() {
        let mut b = SymBuilder::new(3);
        b.add(0, 0, 1.0)
            .add(1, 1, 2.0)
            .add(2, 2, 3.0)
            .add(0, 2, 5.0);
        let m = b.build().unwrap();
        let p = Permutation::from_forward(vec![2, 0, 1]).unwrap();
        let pm = m.permute(&p).unwrap();
        assert_eq!(pm.get(0, 0), 3.0);
        assert_eq!(pm.get(0, 1), 5.0);
        assert_eq!(pm.get(2, 2), 2.0);
        let s = m.submatrix(&[2, 0]);
        assert_eq!(
            s.to_dense(),
            DMatrix::from_row_slice(2, 2, &[3.0, 5.0, 5.0, 1.0])
        );
    }

    #[test]
    fn union_nnz_counts_overlap_once() {
        let mut a = SymBuilder::new(2);
        a.add(0, 0, 1.0).add(1, 0, -1.0);
        let mut b = SymBuilder::new(2);
        b.add(1, 1, 1.0).add(1, 0, 3.0);
        assert_eq!(
            SymSparse::union_nnz(&a.build().unwrap(), &b.build().unwrap()),
            4
        );
    }
}
