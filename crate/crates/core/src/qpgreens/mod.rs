//! Quasi-periodic Green's function, Rayleigh modes and the incident wave.
//!
//! `G(r, r')` solves `(Laplace + k^2) G = -sum_m e^{i kx m L} delta(r - r' - m L e_x)`
//! and radiates outward above and below the source.

mod ewald;
mod table;

use std::f64::consts::PI;

use num_complex::Complex64;

pub use ewald::Lattice;
pub use table::KernelTable;

use crate::error::{Error, Result};

/// Relative distance from grazing below which a mode is treated as anomalous.
pub const DEFAULT_ANOMALY_TOL: f64 = 1e-6;

/// Plane wave `E0 exp(i (kx x - ky y))` arriving from above.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncidentWave {
    pub wavenumber: f64,
    pub angle: f64,
    pub amplitude: f64,
    pub impedance: f64,
}

impl IncidentWave {
    pub fn new(wavenumber: f64, angle: f64) -> Result<Self> {
        Self::with_amplitude(wavenumber, angle, 1.0, 1.0)
    }

    pub fn with_amplitude(wavenumber: f64, angle: f64, amplitude: f64, impedance: f64) -> Result<Self> {
        if !(wavenumber.is_finite() && wavenumber > 0.0) {
            return Err(Error::InvalidParameter(format!("wavenumber must be positive, got {wavenumber}")));
        }
        if !(angle.is_finite() && angle.abs() < 0.5 * PI) {
            return Err(Error::InvalidParameter(format!("incidence angle must lie in (-pi/2, pi/2), got {angle}")));
        }
        if !(amplitude.is_finite() && amplitude > 0.0) {
            return Err(Error::InvalidParameter(format!("amplitude must be positive, got {amplitude}")));
        }
        if !(impedance.is_finite() && impedance > 0.0) {
            return Err(Error::InvalidParameter(format!("impedance must be positive, got {impedance}")));
        }
        Ok(Self { wavenumber, angle, amplitude, impedance })
    }

    pub fn kx(&self) -> f64 {
        self.wavenumber * self.angle.sin()
    }

    pub fn ky(&self) -> f64 {
        self.wavenumber * self.angle.cos()
    }

    /// The incident field at `(x, y)`.
    pub fn field(&self, x: f64, y: f64) -> Complex64 {
        self.amplitude * Complex64::from_polar(1.0, self.kx() * x - self.ky() * y)
    }
}

/// Bloch wavenumbers of the Rayleigh orders together with the propagating set.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeTable {
    wavenumber: f64,
    period: f64,
    kx0: f64,
    truncation: usize,
    propagating: Vec<i64>,
}

impl ModeTable {
    /// Modes for `wave` on a grating of the given period. Fails when any order
    /// is within `anomaly_tol` (relative to `k^2`) of grazing.
    pub fn new(wave: &IncidentWave, period: f64, truncation: usize, anomaly_tol: f64) -> Result<Self> {
        Self::from_bloch(wave.wavenumber, wave.kx(), period, truncation, anomaly_tol)
    }

    pub fn from_bloch(wavenumber: f64, kx0: f64, period: f64, truncation: usize, anomaly_tol: f64) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidParameter(format!("period must be positive, got {period}")));
        }
        let k = wavenumber;
        let step = 2.0 * PI / period;
        let lo = ((-k - kx0) / step).floor() as i64 - 1;
        let hi = ((k - kx0) / step).ceil() as i64 + 1;
        let mut propagating = Vec::new();
        for n in lo..=hi {
            let kxn = kx0 + step * n as f64;
            let gap = k * k - kxn * kxn;
            if gap.abs() <= anomaly_tol * k * k {
                return Err(Error::Anomaly { mode: n });
            }
            if gap > 0.0 {
                propagating.push(n);
            }
        }
        Ok(Self { wavenumber, period, kx0, truncation, propagating })
    }

    pub fn wavenumber(&self) -> f64 {
        self.wavenumber
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Number of evanescent orders retained on each side of the propagating set.
    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn kx0(&self) -> f64 {
        self.kx0
    }

    pub fn kx(&self, n: i64) -> f64 {
        self.kx0 + 2.0 * PI * n as f64 / self.period
    }

    /// `sqrt(k^2 - kx_n^2)`, positive real or positive imaginary.
    pub fn ky(&self, n: i64) -> Complex64 {
        let kxn = self.kx(n);
        let gap = self.wavenumber * self.wavenumber - kxn * kxn;
        if gap >= 0.0 {
            Complex64::new(gap.sqrt(), 0.0)
        } else {
            Complex64::new(0.0, (-gap).sqrt())
        }
    }

    pub fn is_propagating(&self, n: i64) -> bool {
        self.propagating.contains(&n)
    }

    pub fn propagating(&self) -> &[i64] {
        &self.propagating
    }

    /// Orders `n_min - M ..= n_max + M` around the propagating set.
    pub fn retained(&self) -> Vec<i64> {
        let m = self.truncation as i64;
        let lo = self.propagating.first().copied().unwrap_or(0) - m;
        let hi = self.propagating.last().copied().unwrap_or(0) + m;
        (lo..=hi).collect()
    }

    /// Modes of the adjoint problem, whose Bloch wavenumber is `-kx`.
    pub fn adjoint(&self) -> Self {
        let mut propagating: Vec<i64> = self.propagating.iter().map(|n| -n).collect();
        propagating.sort_unstable();
        Self { kx0: -self.kx0, propagating, ..self.clone() }
    }

    pub fn lattice(&self) -> Lattice {
        Lattice::new(self.wavenumber, self.kx0, self.period)
    }
}

/// `G(r, r_src)`, accurate to about 1e-12 relative.
pub fn greens(modes: &ModeTable, r: [f64; 2], r_src: [f64; 2]) -> Result<Complex64> {
    modes.lattice().greens(r[0] - r_src[0], r[1] - r_src[1])
}

/// Adjoint kernel `G_adj(r, r') = G(r', r)`.
pub fn greens_adjoint(modes: &ModeTable, r: [f64; 2], r_src: [f64; 2]) -> Result<Complex64> {
    modes.adjoint().lattice().greens(r[0] - r_src[0], r[1] - r_src[1])
}

/// Raw Rayleigh series truncated to `|n| <= terms`, for verification only.
pub fn spectral_sum(modes: &ModeTable, r: [f64; 2], r_src: [f64; 2], terms: i64) -> Complex64 {
    let (x, y) = (r[0] - r_src[0], r[1] - r_src[1]);
    let mut sum = Complex64::new(0.0, 0.0);
    for n in -terms..=terms {
        let ky = modes.ky(n);
        let phase = Complex64::i() * (modes.kx(n) * x + ky * y.abs());
        sum += phase.exp() / ky;
    }
    sum * Complex64::new(0.0, 0.5 / modes.period())
}
