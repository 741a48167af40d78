//! Galerkin discretization in periodic form.
//!
//! Trial functions `exp(i kx x) phi_i(x)` and test functions `exp(-i kx x) phi_i(x)`
//! turn every integral into one over periodic quantities with the kernel
//! `K(X, Y) = exp(-i kx X) G(X, Y)`. The matrix computed here is the periodic
//! matrix `P`; the matrix in the quasi-periodic hat basis is `D P D^-1` with
//! `D = diag(exp(i kx x_i))`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use super::mesh::{BoundaryMesh, QuadPoint};
use crate::qpgreens::KernelTable;
use crate::quadrature::{GaussLegendre, GaussLog};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

struct Rules {
    gl: GaussLegendre,
    glog: GaussLog,
}

impl Rules {
    fn new(n: usize) -> Self {
        Self { gl: GaussLegendre::new(n), glog: GaussLog::new(n) }
    }
}

// geometry at a parameter value
#[derive(Clone, Copy)]
struct Geo {
    x: f64,
    y: f64,
    jac: f64,
}

fn geo(mesh: &BoundaryMesh, x: f64) -> Geo {
    let p = mesh.profile().eval(x);
    Geo { x, y: p.y, jac: p.jacobian() }
}

/// Periodic single-layer matrix `P`, scaled by `prefactor`.
pub fn single_layer(mesh: &BoundaryMesh, table: &KernelTable, prefactor: Complex64) -> DMatrix<Complex64> {
    let ne = mesh.elements();
    let q = mesh.points_per_element();
    let pts = mesh.points();
    let rules = Rules::new(mesh.options().singular_order);
    let blocks: Vec<Vec<Complex64>> = (0..ne)
        .into_par_iter()
        .map(|e| {
            let mut block = vec![ZERO; 2 * ne];
            let test = &pts[e * q..(e + 1) * q];
            for f in 0..ne {
                if is_near(e, f, ne) {
                    continue;
                }
                let [c0, c1] = mesh.element_nodes(f);
                for a in test {
                    let (mut s0, mut s1) = (ZERO, ZERO);
                    for b in &pts[f * q..(f + 1) * q] {
                        let k = table.kernel(a.x - b.x, a.y - b.y) * b.weight;
                        s0 += k * (1.0 - b.xi);
                        s1 += k * b.xi;
                    }
                    let (ta, tb) = ((1.0 - a.xi) * a.weight, a.xi * a.weight);
                    block[c0] += s0 * ta;
                    block[c1] += s1 * ta;
                    block[ne + c0] += s0 * tb;
                    block[ne + c1] += s1 * tb;
                }
            }
            for off in [-1i64, 0, 1] {
                let local = near_pair(mesh, table, &rules, e, off);
                let f = (e as i64 + off).rem_euclid(ne as i64) as usize;
                let [c0, c1] = mesh.element_nodes(f);
                block[c0] += local[0][0];
                block[c1] += local[0][1];
                block[ne + c0] += local[1][0];
                block[ne + c1] += local[1][1];
            }
            block
        })
        .collect();
    let mut p = DMatrix::<Complex64>::zeros(ne, ne);
    for (e, block) in blocks.iter().enumerate() {
        let [r0, r1] = mesh.element_nodes(e);
        for j in 0..ne {
            p[(r0, j)] += block[j];
            p[(r1, j)] += block[ne + j];
        }
    }
    p * prefactor
}

fn is_near(e: usize, f: usize, ne: usize) -> bool {
    let d = (e as i64 - f as i64).rem_euclid(ne as i64);
    d == 0 || d == 1 || d == ne as i64 - 1
}

// Integral of phi_a(s) phi_b(t) K over the test element e and the trial element
// e + off, in unwrapped coordinates. The kernel is split as F + L ln|d| with
// d = x - x' and both pieces smooth; the logarithm is handled by Duffy maps and
// Gauss rules with logarithmic weight.
fn near_pair(mesh: &BoundaryMesh, table: &KernelTable, rules: &Rules, e: usize, off: i64) -> [[Complex64; 2]; 2] {
    let h = mesh.element_length();
    let lat = table.lattice();
    let (k, kx0) = (lat.wavenumber(), lat.kx0());
    let ln_h = h.ln();
    let x0 = e as f64 * h;
    let x1 = (e as f64 + off as f64) * h;

    let log_coef = |g: &Geo, gp: &Geo, d: f64| -> (Complex64, f64) {
        let dy = g.y - gp.y;
        let r = (d * d + dy * dy).sqrt();
        let l = Complex64::from_polar(-libm::j0(k * r) / (2.0 * PI), -kx0 * d) * (g.jac * gp.jac * h * h);
        (l, dy)
    };
    // (F, L) at (s, t), including Jacobians and h^2
    let parts = |s: f64, t: f64| -> (Complex64, Complex64) {
        let g = geo(mesh, x0 + s * h);
        let gp = geo(mesh, x1 + t * h);
        let d = g.x - gp.x;
        let (l, dy) = log_coef(&g, &gp, d);
        let kw = table.kernel_without_image(d, dy, 0) * (g.jac * gp.jac * h * h);
        let ratio = dy / d;
        (kw + l * (0.5 * (ratio * ratio).ln_1p()), l)
    };
    let l_only = |s: f64, t: f64| -> Complex64 {
        let g = geo(mesh, x0 + s * h);
        let gp = geo(mesh, x1 + t * h);
        log_coef(&g, &gp, g.x - gp.x).0
    };

    let mut out = [[ZERO; 2]; 2];
    let mut add = |s: f64, t: f64, v: Complex64| {
        let ps = [1.0 - s, s];
        let pt = [1.0 - t, t];
        for a in 0..2 {
            for b in 0..2 {
                out[a][b] += v * (ps[a] * pt[b]);
            }
        }
    };
    let (gl, glog) = (&rules.gl, &rules.glog);

    if off == 0 {
        // |s - t| = u w on each triangle, with (s, t) = (u, u(1 - w)) or swapped
        for swap in [false, true] {
            let st = |u: f64, w: f64| {
                let (a, b) = (u, u * (1.0 - w));
                if swap { (b, a) } else { (a, b) }
            };
            for (u, wu) in gl.nodes().iter().zip(gl.weights()) {
                for (w, ww) in gl.nodes().iter().zip(gl.weights()) {
                    let (s, t) = st(*u, *w);
                    let (f, l) = parts(s, t);
                    add(s, t, (f + l * ln_h) * (wu * ww * u));
                }
            }
            for (u, lu) in glog.nodes().iter().zip(glog.weights()) {
                for (w, ww) in gl.nodes().iter().zip(gl.weights()) {
                    let (s, t) = st(*u, *w);
                    add(s, t, -l_only(s, t) * (lu * ww * u));
                }
            }
            for (u, wu) in gl.nodes().iter().zip(gl.weights()) {
                for (w, lw) in glog.nodes().iter().zip(glog.weights()) {
                    let (s, t) = st(*u, *w);
                    add(s, t, -l_only(s, t) * (wu * lw * u));
                }
            }
        }
    } else {
        // corner coordinates (alpha, beta) with |d| = h (alpha + beta)
        let st = |alpha: f64, beta: f64| if off == 1 { (1.0 - alpha, beta) } else { (alpha, 1.0 - beta) };
        for swap in [false, true] {
            let ab = |u: f64, w: f64| if swap { (u * w, u) } else { (u, u * w) };
            for (u, wu) in gl.nodes().iter().zip(gl.weights()) {
                for (w, ww) in gl.nodes().iter().zip(gl.weights()) {
                    let (alpha, beta) = ab(*u, *w);
                    let (s, t) = st(alpha, beta);
                    let (f, l) = parts(s, t);
                    add(s, t, (f + l * (ln_h + w.ln_1p())) * (wu * ww * u));
                }
            }
            for (u, lu) in glog.nodes().iter().zip(glog.weights()) {
                for (w, ww) in gl.nodes().iter().zip(gl.weights()) {
                    let (alpha, beta) = ab(*u, *w);
                    let (s, t) = st(alpha, beta);
                    add(s, t, -l_only(s, t) * (lu * ww * u));
                }
            }
        }
    }
    out
}

/// Load vector `l_i = integral phi_i f dGamma` from values of `f` at the quadrature points.
pub fn load(mesh: &BoundaryMesh, values: &[Complex64]) -> DVector<Complex64> {
    let ne = mesh.elements();
    let mut l = DVector::<Complex64>::zeros(ne);
    for (p, v) in mesh.points().iter().zip(values) {
        let [c0, c1] = mesh.element_nodes(p.element);
        l[c0] += v * ((1.0 - p.xi) * p.weight);
        l[c1] += v * (p.xi * p.weight);
    }
    l
}

/// Values at the quadrature points of the piecewise-linear function with nodal values `c`.
pub fn trace(mesh: &BoundaryMesh, c: &DVector<Complex64>) -> Vec<Complex64> {
    mesh.points()
        .iter()
        .map(|p| {
            let [c0, c1] = mesh.element_nodes(p.element);
            c[c0] * (1.0 - p.xi) + c[c1] * p.xi
        })
        .collect()
}

/// Matrix `T` mapping nodal values of the periodic part of a density to the
/// periodic part of `K' j` at the quadrature points, where
/// `(K' j)(x) = integral d/dnu(x) G(r(x), r') j(r') dGamma'`.
pub fn adjoint_double_layer(mesh: &BoundaryMesh, table: &KernelTable) -> DMatrix<Complex64> {
    let ne = mesh.elements();
    let q = mesh.points_per_element();
    let pts = mesh.points();
    let h = mesh.element_length();
    let gl = GaussLegendre::new(mesh.options().singular_order);
    let rows: Vec<Vec<Complex64>> = pts
        .par_iter()
        .map(|p: &QuadPoint| {
            let mut row = vec![ZERO; ne];
            let e = p.element;
            let kernel = |xs: f64, ys: f64| {
                let [gx, gy] = table.kernel_gradient(p.x - xs, p.y - ys);
                (gy - gx * p.dy) / p.jac
            };
            for f in 0..ne {
                if is_near(e, f, ne) {
                    continue;
                }
                let [c0, c1] = mesh.element_nodes(f);
                for b in &pts[f * q..(f + 1) * q] {
                    let v = kernel(b.x, b.y) * b.weight;
                    row[c0] += v * (1.0 - b.xi);
                    row[c1] += v * b.xi;
                }
            }
            for off in [-1i64, 0, 1] {
                let lo = (e as f64 + off as f64) * h;
                let f = (e as i64 + off).rem_euclid(ne as i64) as usize;
                let [c0, c1] = mesh.element_nodes(f);
                let pieces: &[(f64, f64)] = if off == 0 { &[(lo, p.x), (p.x, lo + h)] } else { &[(lo, lo + h)] };
                for &(a, b) in pieces {
                    for (u, w) in gl.nodes().iter().zip(gl.weights()) {
                        let xs = a + (b - a) * u;
                        let g = geo(mesh, xs);
                        let xi = (xs - lo) / h;
                        let v = kernel(xs, g.y) * ((b - a) * w * g.jac);
                        row[c0] += v * (1.0 - xi);
                        row[c1] += v * xi;
                    }
                }
            }
            row
        })
        .collect();
    DMatrix::from_fn(pts.len(), ne, |i, j| rows[i][j])
}
