//! Quadrature rules on the unit interval.

use nalgebra::{DMatrix, SymmetricEigen};
use std::f64::consts::PI;

/// Gauss-Legendre rule on `[0, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "quadrature order must be positive");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..(n + 1) / 2 {
            let mut t = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, t);
                dp = d;
                let dt = p / d;
                t -= dt;
                if dt.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, t);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - t * t) * dp * dp);
            nodes[i] = 0.5 * (1.0 - t);
            nodes[n - 1 - i] = 0.5 * (1.0 + t);
            weights[i] = 0.5 * w;
            weights[n - 1 - i] = 0.5 * w;
        }
        Self { nodes, weights }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

// P_n(t) and P_n'(t) by the three-term recurrence
fn legendre(n: usize, t: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, t);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * t * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (t * p1 - p0) / (t * t - 1.0);
    (p1, d)
}

/// Gauss rule for the weight `-ln(u)` on `[0, 1]`.
///
/// Built from modified moments against monic shifted Legendre polynomials,
/// which keeps the construction well conditioned.
#[derive(Debug, Clone)]
pub struct GaussLog {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLog {
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "quadrature order must be positive");
        let m = 2 * n;
        let a = vec![0.5; m];
        let b: Vec<f64> = (0..m)
            .map(|k| {
                let k = k as f64;
                k * k / (4.0 * (4.0 * k * k - 1.0))
            })
            .collect();
        let mut moments = vec![1.0; m];
        let mut fact_ratio = 1.0; // (k!)^2 / (2k)!
        for (k, mom) in moments.iter_mut().enumerate().skip(1) {
            let kf = k as f64;
            fact_ratio *= kf * kf / ((2.0 * kf - 1.0) * (2.0 * kf));
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            *mom = sign * fact_ratio / (kf * (kf + 1.0));
        }

        let mut alpha = vec![0.0; n];
        let mut beta = vec![0.0; n];
        let mut sig_prev = vec![0.0; m + 1];
        let mut sig = moments.clone();
        sig.push(0.0);
        alpha[0] = a[0] + moments[1] / moments[0];
        beta[0] = moments[0];
        for k in 1..n {
            let mut next = vec![0.0; m + 1];
            for l in k..(m - k) {
                next[l] = sig[l + 1] - (alpha[k - 1] - a[l]) * sig[l] - beta[k - 1] * sig_prev[l]
                    + b[l] * sig[l - 1];
            }
            alpha[k] = a[k] + next[k + 1] / next[k] - sig[k] / sig[k - 1];
            beta[k] = next[k] / sig[k - 1];
            sig_prev = sig;
            sig = next;
        }

        let mut jac = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            jac[(i, i)] = alpha[i];
            if i + 1 < n {
                let off = beta[i + 1].sqrt();
                jac[(i, i + 1)] = off;
                jac[(i + 1, i)] = off;
            }
        }
        let eig = SymmetricEigen::new(jac);
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|i| (eig.eigenvalues[i], beta[0] * eig.eigenvectors[(0, i)].powi(2)))
            .collect();
        pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
        Self {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
        }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_polynomials() {
        for n in 1..=12 {
            let r = GaussLegendre::new(n);
            for j in 0..2 * n {
                let s: f64 = r.nodes().iter().zip(r.weights()).map(|(x, w)| w * x.powi(j as i32)).sum();
                assert!((s - 1.0 / (j as f64 + 1.0)).abs() < 1e-14, "n={n} j={j}");
            }
        }
    }

    #[test]
    fn log_rule_integrates_moments() {
        for n in 1..=14 {
            let r = GaussLog::new(n);
            for j in 0..2 * n {
                let s: f64 = r.nodes().iter().zip(r.weights()).map(|(x, w)| w * x.powi(j as i32)).sum();
                let exact = 1.0 / ((j as f64 + 1.0) * (j as f64 + 1.0));
                assert!((s - exact).abs() < 1e-13, "n={n} j={j}: {s} vs {exact}");
            }
            assert!(r.nodes().iter().all(|&x| x > 0.0 && x < 1.0));
        }
    }
}
