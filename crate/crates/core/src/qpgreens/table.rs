//! Tabulated periodic kernel for fast boundary-element assembly.
//!
//! On the reduced cell `[0, L)` the Green's function is split as
//! `G = G_reg + S_0 + S_1`, where `S_0` and `S_1` carry the logarithmic
//! singularities of the two nearest lattice sources. The analytic remainder
//! `G_reg` is sampled on a staggered grid (no node sits on a source) and
//! interpolated with tensor Lagrange stencils. Its bandwidth is set by `k`
//! alone, which is why the Bloch phase is applied after interpolation.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use super::Lattice;

const ORDER: usize = 12;
const HALF: usize = ORDER / 2;

#[derive(Debug, Clone)]
pub struct KernelTable {
    lattice: Lattice,
    h: f64,
    x_start: f64,
    nx: usize,
    ny: usize,
    ymax: f64,
    values: Vec<Complex64>,
    denom: [f64; ORDER],
}

fn lagrange_denominators() -> [f64; ORDER] {
    let mut d = [1.0; ORDER];
    for (j, dj) in d.iter_mut().enumerate() {
        for i in 0..ORDER {
            if i != j {
                *dj *= j as f64 - i as f64;
            }
        }
    }
    d
}

impl KernelTable {
    /// Tabulates `G_reg` for `|Y| <= ymax`.
    pub fn new(lattice: Lattice, ymax: f64) -> Self {
        let period = lattice.period();
        let k = lattice.wavenumber();
        let target = (0.25 / k).min(0.05 * period);
        let cells = (period / target).ceil() as usize;
        let h = period / cells as f64;
        let x_start = 0.5 * h - HALF as f64 * h;
        let nx = cells + ORDER;
        let ny = (ymax / h).ceil() as usize + HALF + 2;
        let kx0 = lattice.kx0();
        let rows: Vec<Vec<Complex64>> = (0..nx)
            .into_par_iter()
            .map(|i| {
                let x = x_start + i as f64 * h;
                (0..ny)
                    .map(|j| {
                        let y = (j as f64 + 0.5) * h;
                        let g = lattice.greens(x, y).expect("table nodes avoid the sources");
                        let phase = Complex64::from_polar(1.0, kx0 * x);
                        g - phase * singular_terms(k, kx0, period, x, y)
                    })
                    .collect()
            })
            .collect();
        let values = rows.into_iter().flatten().collect();
        Self {
            lattice,
            h,
            x_start,
            nx,
            ny,
            ymax: (ny - HALF - 2) as f64 * h,
            values,
            denom: lagrange_denominators(),
        }
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    /// Largest `|Y|` served from the table.
    pub fn ymax(&self) -> f64 {
        self.ymax
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    fn reduce(&self, x: f64) -> (i64, f64) {
        let period = self.lattice.period();
        let j = (x / period).floor();
        let mut xr = x - j * period;
        let mut j = j as i64;
        if xr >= period {
            xr -= period;
            j += 1;
        }
        (j, xr)
    }

    fn weights(&self, s: f64, w: &mut [f64; ORDER], dw: Option<&mut [f64; ORDER]>) {
        let mut pre = [1.0; ORDER + 1];
        let mut suf = [1.0; ORDER + 1];
        for i in 0..ORDER {
            pre[i + 1] = pre[i] * (s - i as f64);
            suf[ORDER - 1 - i] = suf[ORDER - i] * (s - (ORDER - 1 - i) as f64);
        }
        for j in 0..ORDER {
            w[j] = pre[j] * suf[j + 1] / self.denom[j];
        }
        if let Some(dw) = dw {
            let near_node = (0..ORDER).any(|i| (s - i as f64).abs() < 1e-8);
            for j in 0..ORDER {
                if near_node {
                    let mut acc = 0.0;
                    for l in (0..ORDER).filter(|&l| l != j) {
                        let mut p = 1.0;
                        for i in (0..ORDER).filter(|&i| i != j && i != l) {
                            p *= s - i as f64;
                        }
                        acc += p;
                    }
                    dw[j] = acc / self.denom[j];
                } else {
                    let sum: f64 = (0..ORDER).filter(|&i| i != j).map(|i| 1.0 / (s - i as f64)).sum();
                    dw[j] = w[j] * sum;
                }
            }
        }
    }

    // stencil rows and column indices for the reduced point
    fn stencil(&self, xr: f64, ay: f64) -> (usize, f64, [usize; ORDER], f64) {
        let tx = (xr - self.x_start) / self.h;
        let cx = tx.floor();
        let ix = (cx as usize + 1).saturating_sub(HALF).min(self.nx - ORDER);
        let sx = tx - ix as f64;
        let ty = ay / self.h - 0.5;
        let cy = ty.floor() as i64;
        let first = cy - HALF as i64 + 1;
        let mut cols = [0usize; ORDER];
        for (b, c) in cols.iter_mut().enumerate() {
            let j = first + b as i64;
            *c = if j < 0 { (-1 - j) as usize } else { j as usize };
        }
        let sy = ty - first as f64;
        (ix, sx, cols, sy)
    }

    fn regular(&self, xr: f64, ay: f64) -> Complex64 {
        let (ix, sx, cols, sy) = self.stencil(xr, ay);
        let mut wx = [0.0; ORDER];
        let mut wy = [0.0; ORDER];
        self.weights(sx, &mut wx, None);
        self.weights(sy, &mut wy, None);
        let mut acc = Complex64::new(0.0, 0.0);
        for (a, wa) in wx.iter().enumerate() {
            let row = &self.values[(ix + a) * self.ny..(ix + a + 1) * self.ny];
            let mut inner = Complex64::new(0.0, 0.0);
            for (b, wb) in wy.iter().enumerate() {
                inner += row[cols[b]] * *wb;
            }
            acc += inner * *wa;
        }
        acc
    }

    // value and (d/dX, d/d|Y|) of the interpolant
    fn regular_with_gradient(&self, xr: f64, ay: f64) -> [Complex64; 3] {
        let (ix, sx, cols, sy) = self.stencil(xr, ay);
        let mut wx = [0.0; ORDER];
        let mut wy = [0.0; ORDER];
        let mut dwx = [0.0; ORDER];
        let mut dwy = [0.0; ORDER];
        self.weights(sx, &mut wx, Some(&mut dwx));
        self.weights(sy, &mut wy, Some(&mut dwy));
        let mut out = [Complex64::new(0.0, 0.0); 3];
        for a in 0..ORDER {
            let row = &self.values[(ix + a) * self.ny..(ix + a + 1) * self.ny];
            let mut v = Complex64::new(0.0, 0.0);
            let mut dv = Complex64::new(0.0, 0.0);
            for b in 0..ORDER {
                v += row[cols[b]] * wy[b];
                dv += row[cols[b]] * dwy[b];
            }
            out[0] += v * wx[a];
            out[1] += v * dwx[a];
            out[2] += dv * wx[a];
        }
        out[1] /= self.h;
        out[2] /= self.h;
        out
    }

    fn direct(&self, x: f64, y: f64) -> Complex64 {
        let g = self.lattice.greens(x, y).expect("kernel evaluated at a source");
        Complex64::from_polar(1.0, -self.lattice.kx0() * x) * g
    }

    /// `K(X, Y) = exp(-i kx X) G(X, Y)`.
    pub fn kernel(&self, x: f64, y: f64) -> Complex64 {
        let ay = y.abs();
        if ay > self.ymax {
            return self.direct(x, y);
        }
        let (_, xr) = self.reduce(x);
        let lat = &self.lattice;
        let phase = Complex64::from_polar(1.0, -lat.kx0() * xr);
        phase * self.regular(xr, ay) + singular_terms(lat.wavenumber(), lat.kx0(), lat.period(), xr, ay)
    }

    /// `K` minus the logarithmic part generated by lattice image `image`,
    /// namely `-(1/2 pi) exp(-i kx d) J0(k R) ln R` with `d = X - image L`.
    pub fn kernel_without_image(&self, x: f64, y: f64, image: i64) -> Complex64 {
        let ay = y.abs();
        let lat = &self.lattice;
        let (k, kx0, period) = (lat.wavenumber(), lat.kx0(), lat.period());
        if ay > self.ymax {
            let d = x - image as f64 * period;
            return self.direct(x, y) - log_term(k, kx0, d, ay);
        }
        let (j, xr) = self.reduce(x);
        let mut v = Complex64::from_polar(1.0, -kx0 * xr) * self.regular(xr, ay);
        if image != j {
            v += log_term(k, kx0, xr, ay);
        }
        if image != j + 1 {
            v += log_term(k, kx0, xr - period, ay);
        }
        v
    }

    /// `exp(-i kx X) grad G(X, Y)`.
    pub fn kernel_gradient(&self, x: f64, y: f64) -> [Complex64; 2] {
        let ay = y.abs();
        let sign = if y < 0.0 { -1.0 } else { 1.0 };
        let lat = &self.lattice;
        let (k, kx0, period) = (lat.wavenumber(), lat.kx0(), lat.period());
        if ay > self.ymax {
            let eps = 1e-6 * period;
            let g = |dx: f64, dy: f64| {
                self.lattice.greens(x + dx, y + dy).expect("kernel evaluated at a source")
            };
            let phase = Complex64::from_polar(1.0, -kx0 * x);
            let gx = (g(eps, 0.0) - g(-eps, 0.0)) / (2.0 * eps);
            let gy = (g(0.0, eps) - g(0.0, -eps)) / (2.0 * eps);
            return [phase * gx, phase * gy];
        }
        let (_, xr) = self.reduce(x);
        let [_, dx, dy] = self.regular_with_gradient(xr, ay);
        let phase = Complex64::from_polar(1.0, -kx0 * xr);
        let mut gx = phase * dx;
        let mut gy = phase * dy * sign;
        for d in [xr, xr - period] {
            let r = (d * d + ay * ay).sqrt();
            let radial = (libm::j0(k * r) / r - k * libm::j1(k * r) * r.ln()) / r;
            let c = Complex64::from_polar(-radial / (2.0 * PI), -kx0 * d);
            gx += c * d;
            gy += c * y;
        }
        [gx, gy]
    }
}

/// `-(1/2 pi) exp(-i kx d) J0(k R) ln R` with `R = |(d, y)|`.
pub(crate) fn log_term(k: f64, kx0: f64, d: f64, y: f64) -> Complex64 {
    let r = (d * d + y * y).sqrt();
    Complex64::from_polar(-libm::j0(k * r) * r.ln() / (2.0 * PI), -kx0 * d)
}

fn singular_terms(k: f64, kx0: f64, period: f64, xr: f64, y: f64) -> Complex64 {
    log_term(k, kx0, xr, y) + log_term(k, kx0, xr - period, y)
}
