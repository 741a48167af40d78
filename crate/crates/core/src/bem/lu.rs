use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense LU factorization with partial pivoting, `P A = L U`.
///
/// Solves with `A` and with `A^T` share one factorization.
#[derive(Debug, Clone)]
pub struct LuFactors {
    n: usize,
    // row-major packed L (unit diagonal, strictly lower) and U
    lu: Vec<Complex64>,
    perm: Vec<usize>,
}

impl LuFactors {
    pub fn new(a: &DMatrix<Complex64>) -> Result<Self> {
        let n = a.nrows();
        assert_eq!(n, a.ncols(), "matrix must be square");
        let mut lu = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                lu[i * n + j] = a[(i, j)];
            }
        }
        let norm = lu.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        if !norm.is_finite() {
            return Err(Error::NonFinite("system matrix"));
        }
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[i * n + k].norm()))
                .fold((k, -1.0), |best, c| if c.1 > best.1 { c } else { best });
            if pmax <= 1e-14 * norm || norm == 0.0 {
                return Err(Error::SingularSystem { pivot: pmax, norm });
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let inv = 1.0 / lu[k * n + k];
            let (top, bottom) = lu.split_at_mut((k + 1) * n);
            let pivot_row = &top[k * n..(k + 1) * n];
            for row in bottom.chunks_exact_mut(n) {
                let f = row[k] * inv;
                row[k] = f;
                if f == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in k + 1..n {
                    row[j] -= f * pivot_row[j];
                }
            }
        }
        Ok(Self { n, lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &DVector<Complex64>) -> DVector<Complex64> {
        let n = self.n;
        let mut x: Vec<Complex64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = &self.lu[i * n..i * n + i];
            let s: Complex64 = row.iter().zip(&x[..i]).map(|(l, v)| l * v).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = &self.lu[i * n + i + 1..(i + 1) * n];
            let s: Complex64 = row.iter().zip(&x[i + 1..]).map(|(u, v)| u * v).sum();
            x[i] = (x[i] - s) / self.lu[i * n + i];
        }
        DVector::from_vec(x)
    }

    /// Solves `A^T x = b`.
    pub fn solve_transpose(&self, b: &DVector<Complex64>) -> DVector<Complex64> {
        let n = self.n;
        // U^T z = b, then L^T w = z, then x = P^T w
        let mut z: Vec<Complex64> = b.iter().copied().collect();
        for i in 0..n {
            z[i] /= self.lu[i * n + i];
            let zi = z[i];
            for j in i + 1..n {
                z[j] -= self.lu[i * n + j] * zi;
            }
        }
        for i in (0..n).rev() {
            let zi = z[i];
            for j in 0..i {
                z[j] -= self.lu[i * n + j] * zi;
            }
        }
        let mut x = vec![Complex64::new(0.0, 0.0); n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = z[i];
        }
        DVector::from_vec(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize) -> DMatrix<Complex64> {
        DMatrix::from_fn(n, n, |i, j| {
            let t = (i * 7 + j * 3) as f64;
            Complex64::new((t * 0.37).sin(), (t * 0.11).cos()) + if i == j { Complex64::new(0.5, 0.0) } else { Complex64::new(0.0, 0.0) }
        })
    }

    #[test]
    fn solves_and_transpose_solves() {
        let a = sample(9);
        let b = DVector::from_fn(9, |i, _| Complex64::new(i as f64, 1.0 - i as f64));
        let lu = LuFactors::new(&a).unwrap();
        let x = lu.solve(&b);
        assert!((&a * &x - &b).norm() < 1e-12 * b.norm());
        let y = lu.solve_transpose(&b);
        assert!((a.transpose() * &y - &b).norm() < 1e-12 * b.norm());
    }

    #[test]
    fn singular_matrix_is_reported() {
        let r = LuFactors::new(&DMatrix::from_element(3, 3, Complex64::new(1.0, 0.0)));
        assert!(matches!(r, Err(Error::SingularSystem { .. })));
    }
}
