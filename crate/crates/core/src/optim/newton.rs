use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative floor applied to eigenvalue magnitudes.
pub const EIGEN_FLOOR: f64 = 1e-8;

/// `|H| = Q |Lambda| Q^T` with magnitudes floored at `EIGEN_FLOOR * max |lambda|`.
#[derive(Debug, Clone)]
pub struct AbsHessian {
    vectors: DMatrix<f64>,
    magnitudes: DVector<f64>,
    negative: Vec<bool>,
}

impl AbsHessian {
    pub fn new(h: &DMatrix<f64>) -> Result<Self> {
        if h.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("Hessian"));
        }
        let sym = (h + h.transpose()) * 0.5;
        let eig = sym.try_symmetric_eigen(1e-15, 10_000).ok_or(Error::EigenFailure)?;
        let max = eig.eigenvalues.iter().fold(0.0f64, |m, l| m.max(l.abs()));
        let floor = if max > 0.0 { EIGEN_FLOOR * max } else { 1.0 };
        let magnitudes = eig.eigenvalues.map(|l| l.abs().max(floor));
        let negative = eig.eigenvalues.iter().map(|l| *l < 0.0).collect();
        Ok(Self { vectors: eig.eigenvectors, magnitudes, negative })
    }

    /// `|H|^{-1} g`.
    pub fn solve(&self, g: &DVector<f64>) -> DVector<f64> {
        let c = self.vectors.tr_mul(g);
        let scaled = c.component_div(&self.magnitudes);
        &self.vectors * scaled
    }

    /// `|H|^{-1}` as a matrix.
    pub fn inverse(&self) -> DMatrix<f64> {
        let d = DMatrix::from_diagonal(&self.magnitudes.map(|m| 1.0 / m));
        &self.vectors * d * self.vectors.transpose()
    }

    /// `|Q_-^T g| / |g|`, the share of the gradient in negative-curvature directions.
    pub fn negative_fraction(&self, g: &DVector<f64>) -> f64 {
        let norm = g.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let c = self.vectors.tr_mul(g);
        let neg: f64 = c.iter().zip(&self.negative).filter(|(_, n)| **n).map(|(v, _)| v * v).sum();
        neg.sqrt() / norm
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn saddle_direction() {
        // f = x1^2 - x2^2 at (1, 1)
        let h = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, -2.0]);
        let g = DVector::from_vec(vec![2.0, -2.0]);
        let a = AbsHessian::new(&h).unwrap();
        let p = a.solve(&g);
        assert!((p[0] - 1.0).abs() < 1e-14 && (p[1] + 1.0).abs() < 1e-14);
        assert!((a.negative_fraction(&g) - 0.5f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn floors_tiny_eigenvalues() {
        let h = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let a = AbsHessian::new(&h).unwrap();
        let p = a.solve(&DVector::from_vec(vec![0.0, 1.0]));
        assert!((p[1] - 1e8).abs() < 1e-3);
    }
}
