//! Periodic grating profiles given by truncated Fourier series.
//!
//! The surface is the graph `y(x) = sum_l A_l sin(2 pi l x / L) + B_l cos(2 pi l x / L)`
//! with `l = 1..=N` and period `L`. Optimization variables are stored in the
//! interleaved order `[A_1, B_1, A_2, B_2, ...]`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Largest peak-to-peak height, in periods, accepted by the optimizers.
pub const ADMISSIBLE_HEIGHT: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct GratingProfile {
    period: f64,
    sin: Vec<f64>,
    cos: Vec<f64>,
}

/// Height and its first two derivatives at one abscissa.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfilePoint {
    pub y: f64,
    pub dy: f64,
    pub ddy: f64,
}

impl ProfilePoint {
    /// Arc-length element `sqrt(1 + y'^2)`.
    pub fn jacobian(&self) -> f64 {
        (1.0 + self.dy * self.dy).sqrt()
    }

    /// Upward unit normal `(-y', 1) / J`.
    pub fn normal(&self) -> [f64; 2] {
        let j = self.jacobian();
        [-self.dy / j, 1.0 / j]
    }

    /// Unit tangent `(1, y') / J`.
    pub fn tangent(&self) -> [f64; 2] {
        let j = self.jacobian();
        [1.0 / j, self.dy / j]
    }

    /// Signed curvature `y'' / (1 + y'^2)^{3/2}`.
    pub fn curvature(&self) -> f64 {
        let j = self.jacobian();
        self.ddy / (j * j * j)
    }
}

impl GratingProfile {
    pub fn new(period: f64, sin: Vec<f64>, cos: Vec<f64>) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidParameter(format!("period must be positive, got {period}")));
        }
        if sin.len() != cos.len() {
            return Err(Error::ShapeMismatch { sin: sin.len(), cos: cos.len() });
        }
        if sin.iter().chain(cos.iter()).any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("profile coefficients"));
        }
        Ok(Self { period, sin, cos })
    }

    /// The flat mirror `y = 0`.
    pub fn flat(period: f64) -> Self {
        Self { period, sin: Vec::new(), cos: Vec::new() }
    }

    /// Builds a profile from interleaved variables `[A_1, B_1, ...]`.
    pub fn from_variables(period: f64, vars: &[f64]) -> Result<Self> {
        if vars.len() % 2 != 0 {
            return Err(Error::ShapeMismatch { sin: (vars.len() + 1) / 2, cos: vars.len() / 2 });
        }
        let sin = vars.iter().step_by(2).copied().collect();
        let cos = vars.iter().skip(1).step_by(2).copied().collect();
        Self::new(period, sin, cos)
    }

    pub fn variables(&self) -> Vec<f64> {
        self.sin.iter().zip(&self.cos).flat_map(|(a, b)| [*a, *b]).collect()
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Number of Fourier modes `N`.
    pub fn modes(&self) -> usize {
        self.sin.len()
    }

    pub fn sin_coefficients(&self) -> &[f64] {
        &self.sin
    }

    pub fn cos_coefficients(&self) -> &[f64] {
        &self.cos
    }

    pub fn eval(&self, x: f64) -> ProfilePoint {
        let w = 2.0 * PI / self.period;
        let (s1, c1) = (w * x).sin_cos();
        let (mut s, mut c) = (s1, c1);
        let mut p = ProfilePoint { y: 0.0, dy: 0.0, ddy: 0.0 };
        for l in 0..self.sin.len() {
            let (a, b) = (self.sin[l], self.cos[l]);
            let wl = w * (l + 1) as f64;
            p.y += a * s + b * c;
            p.dy += wl * (a * c - b * s);
            p.ddy -= wl * wl * (a * s + b * c);
            let next_s = s * c1 + c * s1;
            c = c * c1 - s * s1;
            s = next_s;
        }
        p
    }

    pub fn height(&self, x: f64) -> f64 {
        self.eval(x).y
    }

    pub fn curvature(&self, x: f64) -> f64 {
        self.eval(x).curvature()
    }

    /// Value at `x` of the basis function multiplying variable `var`.
    pub fn basis(&self, var: usize, x: f64) -> f64 {
        let l = (var / 2 + 1) as f64;
        let t = 2.0 * PI * l * x / self.period;
        if var % 2 == 0 {
            t.sin()
        } else {
            t.cos()
        }
    }

    /// Derivative in `x` of [`Self::basis`].
    pub fn basis_derivative(&self, var: usize, x: f64) -> f64 {
        let l = (var / 2 + 1) as f64;
        let w = 2.0 * PI * l / self.period;
        let t = w * x;
        if var % 2 == 0 {
            w * t.cos()
        } else {
            -w * t.sin()
        }
    }

    /// Arc length of one period, by composite Gauss-Legendre quadrature.
    pub fn arc_length(&self) -> f64 {
        let panels = 32 * (self.modes() + 1);
        let rule = crate::quadrature::GaussLegendre::new(8);
        let h = self.period / panels as f64;
        let mut total = 0.0;
        for p in 0..panels {
            let x0 = p as f64 * h;
            for (t, w) in rule.nodes().iter().zip(rule.weights()) {
                total += h * w * self.eval(x0 + h * t).jacobian();
            }
        }
        total
    }

    /// Maximum minus minimum of `y` over one period.
    pub fn peak_to_peak(&self) -> f64 {
        if self.sin.iter().chain(&self.cos).all(|c| *c == 0.0) {
            return 0.0;
        }
        let samples = 64 * (self.modes() + 1);
        let h = self.period / samples as f64;
        let ys: Vec<f64> = (0..samples).map(|i| self.height(i as f64 * h)).collect();
        let refine = |i: usize, sign: f64| {
            // golden-section on the bracket around the best sample
            let (mut a, mut b) = ((i as f64 - 1.0) * h, (i as f64 + 1.0) * h);
            let g = 0.5 * (5f64.sqrt() - 1.0);
            for _ in 0..60 {
                let c = b - g * (b - a);
                let d = a + g * (b - a);
                if sign * self.height(c) > sign * self.height(d) {
                    b = d;
                } else {
                    a = c;
                }
            }
            self.height(0.5 * (a + b))
        };
        let imax = (0..samples).max_by(|&i, &j| ys[i].total_cmp(&ys[j])).unwrap();
        let imin = (0..samples).min_by(|&i, &j| ys[i].total_cmp(&ys[j])).unwrap();
        let hi = refine(imax, 1.0).max(ys[imax]);
        let lo = refine(imin, -1.0).min(ys[imin]);
        hi - lo
    }

    pub fn is_admissible(&self) -> bool {
        self.peak_to_peak() <= ADMISSIBLE_HEIGHT * self.period
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_profile_is_trivial() {
        let p = GratingProfile::flat(1.0);
        assert_eq!(p.height(0.3), 0.0);
        assert_eq!(p.curvature(0.7), 0.0);
        assert!((p.arc_length() - 1.0).abs() < 1e-14);
        assert_eq!(p.peak_to_peak(), 0.0);
    }

    #[test]
    fn mismatched_arrays_are_rejected() {
        let err = GratingProfile::new(1.0, vec![0.1], vec![]).unwrap_err();
        assert_eq!(err, Error::ShapeMismatch { sin: 1, cos: 0 });
    }

    #[test]
    fn variables_round_trip() {
        let p = GratingProfile::new(1.0, vec![0.1, 0.2], vec![0.3, 0.4]).unwrap();
        assert_eq!(p.variables(), vec![0.1, 0.3, 0.2, 0.4]);
        assert_eq!(GratingProfile::from_variables(1.0, &p.variables()).unwrap(), p);
    }

    #[test]
    fn single_sine_values() {
        let a = 0.05;
        let p = GratingProfile::new(1.0, vec![a], vec![0.0]).unwrap();
        assert!((p.height(0.25) - a).abs() < 1e-15);
        let expect = -a * 4.0 * PI * PI;
        assert!((p.curvature(0.25) - expect).abs() < 1e-12);
        assert!((p.peak_to_peak() - 2.0 * a).abs() < 1e-12);
    }

    #[test]
    fn derivatives_match_differences() {
        let p = GratingProfile::new(1.3, vec![0.05, -0.02, 0.01], vec![0.03, 0.04, -0.01]).unwrap();
        let h = 1e-5;
        for &x in &[0.1, 0.47, 1.1] {
            let d = (p.height(x + h) - p.height(x - h)) / (2.0 * h);
            let dd = (p.eval(x + h).dy - p.eval(x - h).dy) / (2.0 * h);
            assert!((d - p.eval(x).dy).abs() < 1e-8);
            assert!((dd - p.eval(x).ddy).abs() < 1e-6);
        }
    }

    #[test]
    fn basis_matches_variables() {
        let vars = [0.02, -0.01, 0.03, 0.015];
        let p = GratingProfile::from_variables(1.0, &vars).unwrap();
        let x = 0.37;
        let y: f64 = (0..4).map(|v| vars[v] * p.basis(v, x)).sum();
        let dy: f64 = (0..4).map(|v| vars[v] * p.basis_derivative(v, x)).sum();
        assert!((y - p.height(x)).abs() < 1e-15);
        assert!((dy - p.eval(x).dy).abs() < 1e-14);
    }
}
