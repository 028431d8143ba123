use nalgebra::DMatrix;

use super::{spd_factorize, sym::symmetrize, SparseError, SymSparse};

/// Multipliers of an exact port elimination.
///
/// With the leading `ports` indices retained, `multipliers = −A_I⁻¹ A_C`
/// (interior × ports). The congruence `W = [I 0; X I]` built from them
/// decouples ports from interior for the eliminated matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EliminationRecord {
    pub ports: usize,
    pub multipliers: DMatrix<f64>,
}

impl EliminationRecord {
    pub fn dim(&self) -> usize {
        self.ports + self.multipliers.nrows()
    }

    pub fn transform(&self) -> CongruenceTransform {
        let n = self.dim();
        let mut w = DMatrix::identity(n, n);
        w.view_mut((self.ports, 0), (n - self.ports, self.ports))
            .copy_from(&self.multipliers);
        CongruenceTransform { w }
    }
}

/// Port Schur complement `A_p − A_Cᵀ A_I⁻¹ A_C` of the leading `p × p` block.
pub fn schur_port_block(
    a: &SymSparse,
    p: usize,
) -> Result<(DMatrix<f64>, EliminationRecord), SparseError> {
    let n = a.dim();
    if p > n {
        return Err(SparseError::DimensionMismatch {
            expected: n,
            found: p,
        });
    }
    let ports: Vec<usize> = (0..p).collect();
    let interior: Vec<usize> = (p..n).collect();
    let mut ap = a.block(&ports, &ports);
    if interior.is_empty() {
        return Ok((
            ap,
            EliminationRecord {
                ports: p,
                multipliers: DMatrix::zeros(0, p),
            },
        ));
    }
    let ai = a.submatrix(&interior);
    let ac = a.block(&interior, &ports);
    let f = spd_factorize(&ai).map_err(|e| match e {
        SparseError::NotPositiveDefinite { pivot, value } => SparseError::NotPositiveDefinite {
            pivot: pivot + p,
            value,
        },
        other => other,
    })?;
    let x = -f.solve(&ac)?;
    ap += ac.transpose() * &x;
    symmetrize(&mut ap);
    Ok((
        ap,
        EliminationRecord {
            ports: p,
            multipliers: x,
        },
    ))
}

/// Dense congruence `M ↦ Wᵀ M W`.
#[derive(Debug, Clone, PartialEq)]
pub struct CongruenceTransform {
    w: DMatrix<f64>,
}

impl CongruenceTransform {
    pub fn identity(n: usize) -> Self {
        Self {
            w: DMatrix::identity(n, n),
        }
    }

    pub fn from_dense(w: DMatrix<f64>) -> Self {
        Self { w }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn rows(&self) -> usize {
        self.w.nrows()
    }
}

/// `Wᵀ M W`, assembled from its lower triangle so the result is exactly symmetric.
pub fn congruence_transform(
    w: &CongruenceTransform,
    m: &SymSparse,
) -> Result<SymSparse, SparseError> {
    if w.rows() != m.dim() {
        return Err(SparseError::DimensionMismatch {
            expected: m.dim(),
            found: w.rows(),
        });
    }
    let mw = m.mul_dense(&w.w);
    let out = w.w.transpose() * mw;
    SymSparse::from_dense_lower(&out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::SymBuilder;

    #[test]
    fn hand_schur_complement() {
        let mut b = SymBuilder::new(2);
        b.add(0, 0, 1.0).add(1, 1, 2.0).add(0, 1, -1.0);
        let (s, rec) = schur_port_block(&b.build().unwrap(), 1).unwrap();
        assert!((s[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((rec.multipliers[(0, 0)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn no_interior_returns_port_block() {
        let mut b = SymBuilder::new(2);
        b.add(0, 0, 3.0).add(1, 1, 2.0).add(0, 1, -1.0);
        let a = b.build().unwrap();
        let (s, _) = schur_port_block(&a, 2).unwrap();
        assert_eq!(s, a.to_dense());
    }

    #[test]
    fn decoupled_blocks_untouched() {
        let mut b = SymBuilder::new(3);
        b.add(0, 0, 3.0)
            .add(1, 1, 2.0)
            .add(2, 2, 5.0)
            .add(1, 2, -1.0);
        let (s, rec) = schur_port_block(&b.build().unwrap(), 1).unwrap();
        assert_eq!(s[(0, 0)], 3.0);
        assert!(rec.multipliers.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn identity_congruence_is_noop() {
        let mut b = SymBuilder::new(3);
        b.add(0, 0, 3.0)
            .add(1, 1, 2.0)
            .add(2, 2, 5.0)
            .add(0, 2, -1.5);
        let m = b.build().unwrap();
        let out = congruence_transform(&CongruenceTransform::identity(3), &m).unwrap();
        assert_eq!(out, m);
    }

    #[test]
    fn mismatched_transform() {
        assert!(
            congruence_transform(&CongruenceTransform::identity(2), &SymSparse::identity(3))
                .is_err()
        );
    }
}
