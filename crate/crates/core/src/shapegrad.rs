//! First and second shape derivatives of Rayleigh amplitudes and efficiencies
//! with respect to the Fourier coefficients of the profile.
//!
//! Perturbations move the surface vertically, `a = a_y(x) e_y`, where `a_y` is
//! the basis function of one coefficient. With `g = d_nu u` on the surface,
//! the shape derivative `u'[a]` is the radiating field with boundary values
//! `-(a.nu) g`. The second derivative has boundary values
//!
//! `-(a1.nu) d_nu u'[a2] - (a2.nu) d_nu u'[a1] - ((a1.nu)(a2.nu) - (a1.tau)(a2.tau)) kappa g
//!  + ((a1.tau) D(a2.nu) + (a2.tau) D(a1.nu)) g`
//!
//! with `kappa = y'' / (1 + y'^2)^{3/2}` and `D` the arc-length derivative.
//! Rayleigh amplitudes are linear functionals of boundary data, evaluated with
//! one adjoint density per order.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::bem::{assembly, Scattering, Solver, SurfaceDensity};
use crate::error::Result;
use crate::profile::GratingProfile;

/// Adjoint density `j_adj` with `u_n(data) = c_n <j_adj, data>` for any
/// Dirichlet data. One transpose solve.
pub fn solve_adjoint(scattering: &Scattering, n: i64) -> Result<SurfaceDensity> {
    scattering.far_field_constant(n)?;
    let rhs = assembly::load(scattering.mesh(), &scattering.mode_weights(n));
    let q = scattering.solve_adjoint(&rhs);
    let modes = scattering.modes();
    Ok(SurfaceDensity { periodic: q, bloch: -modes.kx0(), period: modes.period() })
}

// per-quadrature-point geometry of one perturbation direction
struct Direction {
    nu: Vec<f64>,
    tau: Vec<f64>,
    d_nu: Vec<f64>,
}

fn directions(scattering: &Scattering) -> Vec<Direction> {
    let mesh = scattering.mesh();
    let profile = mesh.profile();
    (0..2 * profile.modes())
        .map(|v| {
            let mut d = Direction { nu: Vec::new(), tau: Vec::new(), d_nu: Vec::new() };
            for p in mesh.points() {
                let a = profile.basis(v, p.x);
                let da = profile.basis_derivative(v, p.x);
                let j = p.jac;
                d.nu.push(a / j);
                d.tau.push(a * p.dy / j);
                d.d_nu.push((da / j - a * p.dy * p.ddy / (j * j * j)) / j);
            }
            d
        })
        .collect()
}

// periodic part of d_nu u on the surface
fn neumann_trace(scattering: &Scattering) -> Vec<Complex64> {
    let ik = scattering.prefactor();
    assembly::trace(scattering.mesh(), scattering.density_coefficients()).into_iter().map(|c| -ik * c).collect()
}

/// Boundary data `-(a.nu) d_nu u` of `u'[a]` for every coefficient, at the quadrature points.
fn first_order_data(scattering: &Scattering, dirs: &[Direction]) -> Vec<Vec<Complex64>> {
    let g = neumann_trace(scattering);
    dirs.iter().map(|d| d.nu.iter().zip(&g).map(|(a, g)| -g * *a).collect()).collect()
}

fn pair(scattering: &Scattering, adjoint: &SurfaceDensity, data: &[Complex64]) -> Complex64 {
    let q = assembly::trace(scattering.mesh(), &adjoint.periodic);
    scattering.mesh().points().iter().zip(q.iter().zip(data)).map(|(p, (q, d))| q * d * p.weight).sum()
}

/// `d u_n / d var` for every variable.
pub fn far_field_gradient(scattering: &Scattering, adjoint: &SurfaceDensity, n: i64) -> Result<Vec<Complex64>> {
    let c = scattering.far_field_constant(n)?;
    let dirs = directions(scattering);
    Ok(first_order_data(scattering, &dirs).iter().map(|d| c * pair(scattering, adjoint, d)).collect())
}

/// Second derivatives of `u_n` and the relative asymmetry of the raw matrix.
#[derive(Debug, Clone)]
pub struct FarFieldHessian {
    pub gradient: Vec<Complex64>,
    pub hessian: DMatrix<Complex64>,
    pub asymmetry: f64,
}

/// Gradient and Hessian of `u_n`. Costs one primal solve per variable.
pub fn far_field_hessian(scattering: &Scattering, adjoint: &SurfaceDensity, n: i64) -> Result<FarFieldHessian> {
    let c = scattering.far_field_constant(n)?;
    let mesh = scattering.mesh();
    let ik = scattering.prefactor();
    let dirs = directions(scattering);
    let data = first_order_data(scattering, &dirs);
    let gradient: Vec<Complex64> = data.iter().map(|d| c * pair(scattering, adjoint, d)).collect();

    let t = scattering.normal_derivative_operator();
    // d_nu u'[a] on the exterior side: i k eta (K' j~ - j~ / 2) with V j~ = data
    let neumann: Vec<Vec<Complex64>> = data
        .iter()
        .map(|d| {
            let jt = scattering.solve_primal(&assembly::load(mesh, d));
            let kj = &t * &jt;
            let tr = assembly::trace(mesh, &jt);
            kj.iter().zip(&tr).map(|(k, j)| ik * (k - 0.5 * j)).collect()
        })
        .collect();

    let g = neumann_trace(scattering);
    let q = assembly::trace(mesh, &adjoint.periodic);
    let qw: Vec<Complex64> = q.iter().zip(mesh.points()).map(|(q, p)| q * p.weight).collect();
    let kappa: Vec<f64> = mesh.points().iter().map(|p| p.ddy / (p.jac * p.jac * p.jac)).collect();
    let nv = dirs.len();
    let mut h = DMatrix::<Complex64>::zeros(nv, nv);
    for v in 0..nv {
        for w in v..nv {
            let (a, b) = (&dirs[v], &dirs[w]);
            let mut s = Complex64::new(0.0, 0.0);
            for i in 0..qw.len() {
                let geo = -(a.nu[i] * b.nu[i] - a.tau[i] * b.tau[i]) * kappa[i] + a.tau[i] * b.d_nu[i] + b.tau[i] * a.d_nu[i];
                let datum = -neumann[w][i] * a.nu[i] - neumann[v][i] * b.nu[i] + g[i] * geo;
                s += qw[i] * datum;
            }
            h[(v, w)] = c * s;
            h[(w, v)] = c * s;
        }
    }
    let asymmetry = relative_asymmetry(&h);
    Ok(FarFieldHessian { gradient, hessian: h, asymmetry })
}

fn relative_asymmetry(h: &DMatrix<Complex64>) -> f64 {
    let norm = h.norm();
    if norm == 0.0 {
        0.0
    } else {
        (h - h.transpose()).norm() / norm
    }
}

/// Efficiency of one order with its derivatives in the profile coefficients.
#[derive(Debug, Clone)]
pub struct ShapeDerivatives {
    pub mode: i64,
    pub amplitude: Complex64,
    pub efficiency: f64,
    pub gradient: DVector<f64>,
    pub hessian: Option<DMatrix<f64>>,
    /// Relative asymmetry of the unsymmetrized Hessian.
    pub asymmetry: f64,
}

/// Efficiency of order `n` with its gradient, and its Hessian when requested.
///
/// Costs one adjoint solve for the gradient and one primal solve per variable
/// for the Hessian, on top of the primal solve already held by `scattering`.
pub fn efficiency_derivatives(scattering: &Scattering, n: i64, with_hessian: bool) -> Result<ShapeDerivatives> {
    let amplitude = scattering.far_field(n)?;
    let efficiency = scattering.efficiency_from_amplitude(n, amplitude);
    let adjoint = solve_adjoint(scattering, n)?;
    // e = rho |u|^2
    let rho = scattering.efficiency_from_amplitude(n, Complex64::new(1.0, 0.0));
    let (grad_u, hess) = if with_hessian {
        let h = far_field_hessian(scattering, &adjoint, n)?;
        (h.gradient.clone(), Some(h))
    } else {
        (far_field_gradient(scattering, &adjoint, n)?, None)
    };
    let nv = grad_u.len();
    let gradient = DVector::from_fn(nv, |v, _| 2.0 * rho * (amplitude.conj() * grad_u[v]).re);
    let (hessian, asymmetry) = match hess {
        Some(h) => {
            let m = DMatrix::from_fn(nv, nv, |v, w| {
                2.0 * rho * ((grad_u[v].conj() * grad_u[w]).re + (amplitude.conj() * h.hessian[(v, w)]).re)
            });
            (Some(m), h.asymmetry)
        }
        None => (None, 0.0),
    };
    Ok(ShapeDerivatives { mode: n, amplitude, efficiency, gradient, hessian, asymmetry })
}

/// Central-difference derivatives of the efficiency of order `n`, for validation.
#[derive(Debug, Clone)]
pub struct FiniteDifferences {
    pub gradient: DVector<f64>,
    /// Second differences of the efficiency, when requested.
    pub hessian: Option<DMatrix<f64>>,
}

/// Default step for gradient differences, relative to the period.
pub const FD_GRADIENT_STEP: f64 = 1e-6;
/// Default step for second differences, relative to the period.
pub const FD_HESSIAN_STEP: f64 = 1e-4;

/// Central differences of `e_n` on a mesh of fixed size `elements`: first
/// differences with `gradient_step`, and second differences with
/// `hessian_step` when given.
pub fn finite_differences(
    solver: &mut Solver,
    profile: &GratingProfile,
    elements: usize,
    n: i64,
    gradient_step: f64,
    hessian_step: Option<f64>,
) -> Result<FiniteDifferences> {
    let vars = profile.variables();
    let nv = vars.len();
    let period = profile.period();
    let mut eval = |shift: &[(usize, f64)]| -> Result<f64> {
        let mut x = vars.clone();
        for &(v, s) in shift {
            x[v] += s * period;
        }
        let p = GratingProfile::from_variables(period, &x)?;
        solver.solve_mesh(solver.mesh(&p, Some(elements)))?.efficiency(n)
    };
    let g = gradient_step;
    let mut gradient = DVector::zeros(nv);
    for v in 0..nv {
        gradient[v] = (eval(&[(v, g)])? - eval(&[(v, -g)])?) / (2.0 * g * period);
    }
    let hessian = match hessian_step {
        None => None,
        Some(h) => {
            let e0 = eval(&[])?;
            let h2 = (h * period).powi(2);
            let mut m = DMatrix::zeros(nv, nv);
            for v in 0..nv {
                m[(v, v)] = (eval(&[(v, h)])? - 2.0 * e0 + eval(&[(v, -h)])?) / h2;
                for w in 0..v {
                    let pp = eval(&[(v, h), (w, h)])?;
                    let pm = eval(&[(v, h), (w, -h)])?;
                    let mp = eval(&[(v, -h), (w, h)])?;
                    let mm = eval(&[(v, -h), (w, -h)])?;
                    let d = (pp - pm - mp + mm) / (4.0 * h2);
                    m[(v, w)] = d;
                    m[(w, v)] = d;
                }
            }
            Some(m)
        }
    };
    Ok(FiniteDifferences { gradient, hessian })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bem::MeshOptions;
    use crate::qpgreens::IncidentWave;

    #[test]
    fn adjoint_gradient_equals_direct_sensitivity() {
        // c_n <j_adj, d_a> and the far field of the solution with data d_a agree
        let wave = IncidentWave::new(20.0, 0.3).unwrap();
        let mut solver = Solver::new(wave, 1.0, MeshOptions::default()).unwrap();
        let profile = GratingProfile::new(1.0, vec![0.03, -0.01], vec![0.02, 0.015]).unwrap();
        let s = solver.solve(&profile).unwrap();
        let n = 1;
        let adj = solve_adjoint(&s, n).unwrap();
        let grad = far_field_gradient(&s, &adj, n).unwrap();
        let dirs = directions(&s);
        let data = first_order_data(&s, &dirs);
        let c = s.far_field_constant(n).unwrap();
        let g = s.mode_weights(n);
        for (v, d) in data.iter().enumerate() {
            let jt = s.solve_primal(&assembly::load(s.mesh(), d));
            let tr = assembly::trace(s.mesh(), &jt);
            let direct: Complex64 = s.mesh().points().iter().zip(tr.iter().zip(&g)).map(|(p, (t, g))| t * g * p.weight).sum();
            let direct = c * direct;
            assert!((direct - grad[v]).norm() < 1e-10 * grad[v].norm().max(1e-12), "{direct} vs {}", grad[v]);
        }
    }
}
