//! Direct evaluation of the quasi-periodic Green's function.
//!
//! Far from the surface (`|Y| >= L / 2`) the Rayleigh series converges
//! geometrically and is summed directly. Closer in, the Ewald splitting into a
//! Gaussian-damped spectral sum and a rapidly decaying image sum is used.

use std::f64::consts::PI;

use errorfunctions::ComplexErrorFunctions;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::special::exp_int_sequence;

const SPATIAL_CUTOFF: f64 = 64.0;
const Q_TERMS: usize = 40;

/// A one-dimensional lattice of phased point sources.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lattice {
    k: f64,
    kx0: f64,
    period: f64,
    split: f64,
}

impl Lattice {
    pub fn new(k: f64, kx0: f64, period: f64) -> Self {
        let split = (PI.sqrt() / period).max(0.25 * k);
        Self { k, kx0, period, split }
    }

    pub fn wavenumber(&self) -> f64 {
        self.k
    }

    pub fn kx0(&self) -> f64 {
        self.kx0
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// `G(X, Y)` for separation `(X, Y) = r - r'`.
    pub fn greens(&self, x: f64, y: f64) -> Result<Complex64> {
        let y = y.abs();
        let m = (x / self.period).round();
        if y < 1e-14 * self.period && (x - m * self.period).abs() < 1e-14 * self.period {
            return Err(Error::EvaluationAtSource);
        }
        if y >= 0.5 * self.period {
            Ok(self.spectral(x, y))
        } else {
            Ok(self.ewald_spectral(x, y) + self.ewald_spatial(x, y))
        }
    }

    fn beta(&self, n: i64) -> f64 {
        self.kx0 + 2.0 * PI * n as f64 / self.period
    }

    // sqrt(beta^2 - k^2) with the outgoing branch
    fn gamma(&self, beta: f64) -> Complex64 {
        let d = beta * beta - self.k * self.k;
        if d >= 0.0 {
            Complex64::new(d.sqrt(), 0.0)
        } else {
            Complex64::new(0.0, -(-d).sqrt())
        }
    }

    fn centre(&self) -> i64 {
        (-self.kx0 * self.period / (2.0 * PI)).round() as i64
    }

    fn spectral(&self, x: f64, y: f64) -> Complex64 {
        let mut sum = Complex64::new(0.0, 0.0);
        let c = self.centre();
        let term = |n: i64| {
            let b = self.beta(n);
            let g = self.gamma(b);
            Complex64::new(-g.re * y, b * x - g.im * y).exp() / g
        };
        sum += term(c);
        for j in 1..2000 {
            let t = term(c + j) + term(c - j);
            sum += t;
            let decay = (-(2.0 * PI * j as f64 / self.period - self.k - self.kx0.abs()).max(0.0) * y).exp();
            if j > 2 && t.norm() < 1e-18 * sum.norm() && decay < 1e-17 {
                break;
            }
        }
        sum / (2.0 * self.period)
    }

    fn ewald_spectral(&self, x: f64, y: f64) -> Complex64 {
        let e = self.split;
        let c = self.centre();
        let term = |n: i64| {
            let b = self.beta(n);
            let g = self.gamma(b);
            let gauss = (-(g * g) / (4.0 * e * e) - y * y * e * e).exp();
            let zp = g / (2.0 * e) + y * e;
            let zm = g / (2.0 * e) - y * e;
            let plus = gauss * (Complex64::i() * zp).w();
            let minus = if zm.re >= 0.0 {
                gauss * (Complex64::i() * zm).w()
            } else {
                2.0 * (-g * y).exp() - gauss * (-Complex64::i() * zm).w()
            };
            Complex64::from_polar(1.0, b * x) * (plus + minus) / g
        };
        let mut sum = term(c);
        for j in 1..2000 {
            let t = term(c + j) + term(c - j);
            sum += t;
            if j > 2 && t.norm() < 1e-18 * sum.norm().max(1e-300) {
                let b = (2.0 * PI * j as f64 / self.period).abs() - self.k - self.kx0.abs();
                if b > 0.0 && (b * b / (4.0 * e * e)) > 40.0 {
                    break;
                }
            }
        }
        sum / (4.0 * self.period)
    }

    fn ewald_spatial(&self, x: f64, y: f64) -> Complex64 {
        let e = self.split;
        let a = (self.k / (2.0 * e)).powi(2);
        let reach = SPATIAL_CUTOFF.sqrt() / e;
        let m_lo = ((x - reach) / self.period).floor() as i64;
        let m_hi = ((x + reach) / self.period).ceil() as i64;
        let mut en = [0.0; Q_TERMS];
        let mut sum = Complex64::new(0.0, 0.0);
        for m in m_lo..=m_hi {
            let dx = x - m as f64 * self.period;
            let s = (dx * dx + y * y) * e * e;
            if s > SPATIAL_CUTOFF {
                continue;
            }
            exp_int_sequence(s, &mut en);
            let mut acc = 0.0;
            let mut coef = 1.0;
            for (q, eq) in en.iter().enumerate() {
                if q > 0 {
                    coef *= a / q as f64;
                }
                let t = coef * eq;
                acc += t;
                if q > 2 && t.abs() < 1e-18 * acc.abs() {
                    break;
                }
            }
            sum += Complex64::from_polar(acc, self.kx0 * m as f64 * self.period);
        }
        sum / (4.0 * PI)
    }
}
