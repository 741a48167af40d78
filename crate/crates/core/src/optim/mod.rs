//! Descent methods for smooth objectives with an admissible set:
//! gradient descent and modified Newton with Armijo backtracking, and BFGS
//! with a Wolfe line search. All methods minimize.

mod linesearch;
mod newton;
mod objective;
mod rate;

use std::time::Instant;

use nalgebra::{DMatrix, DVector};

pub use linesearch::{armijo, wolfe, Step};
pub use newton::{AbsHessian, EIGEN_FLOOR};
pub use objective::{GratingObjective, ObjectiveKind};
pub use rate::estimate_rate;

use crate::error::{Error, Result};

/// A function to minimize. Implementations may count linear solves.
pub trait Objective {
    fn dimension(&self) -> usize;
    fn value(&mut self, x: &DVector<f64>) -> Result<f64>;
    fn gradient(&mut self, x: &DVector<f64>) -> Result<(f64, DVector<f64>)>;
    fn hessian(&mut self, x: &DVector<f64>) -> Result<(f64, DVector<f64>, DMatrix<f64>)>;

    fn is_admissible(&self, _x: &DVector<f64>) -> bool {
        true
    }

    /// Linear solves performed so far.
    fn solve_count(&self) -> usize {
        0
    }

    /// A quantity of interest at the last gradient evaluation, such as an efficiency.
    fn observation(&self) -> Option<f64> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchParams {
    /// Backtracking factor.
    pub alpha: f64,
    /// Sufficient-decrease constant.
    pub beta: f64,
    /// Curvature constant for the Wolfe condition.
    pub gamma: f64,
    pub initial_step: f64,
    pub max_backtracks: usize,
}

impl Default for LineSearchParams {
    fn default() -> Self {
        Self { alpha: 0.5, beta: 0.2, gamma: 0.8, initial_step: 1.0, max_backtracks: 40 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub gradient: f64,
    pub step: f64,
    pub max_iterations: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { gradient: 1e-6, step: 1e-10, max_iterations: 200 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    GradientDescent,
    /// Modified Newton with `|H|` recomputed every iteration.
    Newton,
    /// Modified Newton refreshing `|H|` every `m` iterations.
    NewtonRefresh(usize),
    BfgsIdentity,
    /// BFGS started from `|H(x0)|^{-1}`.
    BfgsHessian,
}

impl Method {
    pub fn name(&self) -> String {
        match self {
            Method::GradientDescent => "gd".into(),
            Method::Newton => "newton".into(),
            Method::NewtonRefresh(m) => format!("newton_m{m}"),
            Method::BfgsIdentity => "bfgs_id".into(),
            Method::BfgsHessian => "bfgs_h".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    pub method: Method,
    pub line_search: LineSearchParams,
    pub tolerances: Tolerances,
}

impl OptimizerConfig {
    pub fn new(method: Method) -> Self {
        Self { method, line_search: LineSearchParams::default(), tolerances: Tolerances::default() }
    }
}

/// State after an iteration; record 0 is the starting point.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub x: DVector<f64>,
    pub value: f64,
    pub gradient_norm: f64,
    /// Accepted line-search step `h` (zero for the starting point).
    pub step: f64,
    pub step_norm: f64,
    pub backtracks: usize,
    /// Cumulative linear solves.
    pub solves: usize,
    /// `|Q_- Q_-^T grad| / |grad|` when a fresh Hessian was used.
    pub negative_fraction: Option<f64>,
    pub observation: Option<f64>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    GradientTolerance,
    StepTolerance,
    MaxIterations,
    LineSearchFailure { backtracks: usize },
}

#[derive(Debug, Clone)]
pub struct OptimizationResult {
    pub x: DVector<f64>,
    pub value: f64,
    pub termination: Termination,
    pub trace: Vec<IterationRecord>,
}

impl OptimizationResult {
    pub fn iterations(&self) -> usize {
        self.trace.len().saturating_sub(1)
    }

    pub fn iterates(&self) -> Vec<DVector<f64>> {
        self.trace.iter().map(|r| r.x.clone()).collect()
    }
}

enum Curvature {
    None,
    Abs(AbsHessian),
    Inverse(DMatrix<f64>),
}

/// Runs `config.method` from `x0`.
///
/// A failed line search ends the run with [`Termination::LineSearchFailure`]
/// so the trace is kept; other errors propagate.
pub fn minimize<O: Objective + ?Sized>(obj: &mut O, x0: &DVector<f64>, config: &OptimizerConfig) -> Result<OptimizationResult> {
    let start = Instant::now();
    let tol = config.tolerances;
    let mut x = x0.clone();
    let needs_hessian = |t: usize| match config.method {
        Method::Newton => true,
        Method::NewtonRefresh(m) => t % m.max(1) == 0,
        Method::BfgsHessian => t == 0,
        _ => false,
    };

    let (mut f, mut g, mut curvature, mut neg) = if needs_hessian(0) {
        let (f, g, h) = obj.hessian(&x)?;
        let abs = AbsHessian::new(&h)?;
        let neg = abs.negative_fraction(&g);
        let c = if config.method == Method::BfgsHessian { Curvature::Inverse(abs.inverse()) } else { Curvature::Abs(abs) };
        (f, g, c, Some(neg))
    } else {
        let (f, g) = obj.gradient(&x)?;
        let c = match config.method {
            Method::BfgsIdentity => Curvature::Inverse(DMatrix::identity(x.len(), x.len())),
            _ => Curvature::None,
        };
        (f, g, c, None)
    };

    let mut trace = vec![IterationRecord {
        iteration: 0,
        x: x.clone(),
        value: f,
        gradient_norm: g.norm(),
        step: 0.0,
        step_norm: 0.0,
        backtracks: 0,
        solves: obj.solve_count(),
        negative_fraction: neg,
        observation: obj.observation(),
        seconds: start.elapsed().as_secs_f64(),
    }];

    let termination = loop {
        let t = trace.len() - 1;
        if g.norm() <= tol.gradient {
            break Termination::GradientTolerance;
        }
        if t >= tol.max_iterations {
            break Termination::MaxIterations;
        }
        let p = match &curvature {
            Curvature::None => g.clone(),
            Curvature::Abs(a) => a.solve(&g),
            Curvature::Inverse(b) => {
                let p = b * &g;
                if p.dot(&g) > 0.0 {
                    p
                } else {
                    curvature = Curvature::Inverse(DMatrix::identity(x.len(), x.len()));
                    g.clone()
                }
            }
        };
        let is_bfgs = matches!(config.method, Method::BfgsIdentity | Method::BfgsHessian);
        let search = if is_bfgs { wolfe(obj, &x, f, &g, &p, &config.line_search) } else { armijo(obj, &x, f, &g, &p, &config.line_search) };
        let step = match search {
            Ok(s) => s,
            Err(Error::LineSearchFailure { backtracks }) => break Termination::LineSearchFailure { backtracks },
            Err(e) => return Err(e),
        };

        let t_next = t + 1;
        let (f_new, g_new) = if needs_hessian(t_next) && !is_bfgs {
            let (f_new, g_new, h) = obj.hessian(&step.x)?;
            let abs = AbsHessian::new(&h)?;
            neg = Some(abs.negative_fraction(&g_new));
            curvature = Curvature::Abs(abs);
            (f_new, g_new)
        } else {
            neg = None;
            match &step.gradient {
                Some(gn) => (step.value, gn.clone()),
                None => obj.gradient(&step.x)?,
            }
        };

        if let Curvature::Inverse(b) = &mut curvature {
            let s = &step.x - &x;
            let y = &g_new - &g;
            let sy = s.dot(&y);
            if sy > 1e-12 * s.norm() * y.norm() {
                let rho = 1.0 / sy;
                let n = x.len();
                let left = DMatrix::identity(n, n) - (&s * y.transpose()) * rho;
                *b = &left * &*b * left.transpose() + (&s * s.transpose()) * rho;
            }
        }

        let step_norm = (&step.x - &x).norm();
        x = step.x;
        f = f_new;
        g = g_new;
        trace.push(IterationRecord {
            iteration: t_next,
            x: x.clone(),
            value: f,
            gradient_norm: g.norm(),
            step: step.h,
            step_norm,
            backtracks: step.backtracks,
            solves: obj.solve_count(),
            negative_fraction: neg,
            observation: obj.observation(),
            seconds: start.elapsed().as_secs_f64(),
        });
        if step_norm <= tol.step {
            break Termination::StepTolerance;
        }
    };
    Ok(OptimizationResult { x, value: f, termination, trace })
}

/// `iterations` steps of `x <- x - step grad f(x)` without line search.
pub fn fixed_step_descent<O: Objective + ?Sized>(obj: &mut O, x0: &DVector<f64>, step: f64, iterations: usize) -> Result<DVector<f64>> {
    let mut x = x0.clone();
    for _ in 0..iterations {
        let (_, g) = obj.gradient(&x)?;
        x -= g * step;
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `0.5 x^T A x - b^T x`.
    struct Quadratic {
        a: DMatrix<f64>,
        b: DVector<f64>,
        evals: usize,
    }

    impl Objective for Quadratic {
        fn dimension(&self) -> usize {
            self.b.len()
        }
        fn value(&mut self, x: &DVector<f64>) -> Result<f64> {
            self.evals += 1;
            Ok(0.5 * x.dot(&(&self.a * x)) - self.b.dot(x))
        }
        fn gradient(&mut self, x: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
            let f = self.value(x)?;
            Ok((f, &self.a * x - &self.b))
        }
        fn hessian(&mut self, x: &DVector<f64>) -> Result<(f64, DVector<f64>, DMatrix<f64>)> {
            let (f, g) = self.gradient(x)?;
            Ok((f, g, self.a.clone()))
        }
    }

    struct Saddle;

    impl Objective for Saddle {
        fn dimension(&self) -> usize {
            2
        }
        fn value(&mut self, x: &DVector<f64>) -> Result<f64> {
            Ok(x[0] * x[0] - x[1] * x[1])
        }
        fn gradient(&mut self, x: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
            Ok((self.value(x)?, DVector::from_vec(vec![2.0 * x[0], -2.0 * x[1]])))
        }
        fn hessian(&mut self, x: &DVector<f64>) -> Result<(f64, DVector<f64>, DMatrix<f64>)> {
            let (f, g) = self.gradient(x)?;
            Ok((f, g, DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, -2.0])))
        }
    }

    fn quadratic() -> Quadratic {
        Quadratic {
            a: DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.0, 1.0, 3.0, 0.5, 0.0, 0.5, 2.0]),
            b: DVector::from_vec(vec![1.0, -2.0, 0.5]),
            evals: 0,
        }
    }

    #[test]
    fn newton_solves_convex_quadratic_in_one_step() {
        let mut q = quadratic();
        let x0 = DVector::from_vec(vec![3.0, -1.0, 2.0]);
        let r = minimize(&mut q, &x0, &OptimizerConfig::new(Method::Newton)).unwrap();
        let exact = q.a.clone().lu().solve(&q.b).unwrap();
        assert!((&r.trace[1].x - &exact).norm() < 1e-12);
        assert_eq!(r.trace[1].step, 1.0);
        assert_eq!(r.termination, Termination::GradientTolerance);
    }

    #[test]
    fn newton_escapes_saddle() {
        let r = minimize(&mut Saddle, &DVector::from_vec(vec![1.0, 1.0]), &OptimizerConfig {
            tolerances: Tolerances { max_iterations: 1, ..Default::default() },
            ..OptimizerConfig::new(Method::Newton)
        })
        .unwrap();
        let x1 = &r.trace[1].x;
        assert!((x1[0] - 0.0).abs() < 1e-12 && (x1[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn armijo_halves_once() {
        // f = x^2 from x = 1 with p = grad = 2: h = 1 overshoots to f(-1) = f(1)
        struct Parabola;
        impl Objective for Parabola {
            fn dimension(&self) -> usize {
                1
            }
            fn value(&mut self, x: &DVector<f64>) -> Result<f64> {
                Ok(x[0] * x[0])
            }
            fn gradient(&mut self, x: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
                Ok((x[0] * x[0], DVector::from_element(1, 2.0 * x[0])))
            }
            fn hessian(&mut self, _x: &DVector<f64>) -> Result<(f64, DVector<f64>, DMatrix<f64>)> {
                unreachable!()
            }
        }
        let x = DVector::from_element(1, 1.0);
        let g = DVector::from_element(1, 2.0);
        let s = armijo(&mut Parabola, &x, 1.0, &g, &g, &LineSearchParams::default()).unwrap();
        assert!((s.h - 0.5).abs() < 1e-12);
        assert!((s.x[0] - 0.0).abs() < 1e-12);
        assert_eq!(s.backtracks, 1);
    }

    #[test]
    fn armijo_rejects_ascent_direction() {
        let mut q = quadratic();
        let x = DVector::zeros(3);
        let (f, g) = q.gradient(&x).unwrap();
        let r = armijo(&mut q, &x, f, &g, &(-&g), &LineSearchParams::default());
        assert_eq!(r.unwrap_err(), Error::InvalidDirection);
    }

    #[test]
    fn bfgs_secant_update_in_one_dimension() {
        let mut q = Quadratic { a: DMatrix::from_element(1, 1, 4.0), b: DVector::zeros(1), evals: 0 };
        let x0 = DVector::from_element(1, 1.0);
        let r = minimize(&mut q, &x0, &OptimizerConfig::new(Method::BfgsIdentity)).unwrap();
        // h = 1/4 lands on the minimizer directly
        assert!(r.trace[1].x[0].abs() < 1e-15);
        assert_eq!(r.termination, Termination::GradientTolerance);
    }

    #[test]
    fn gradient_descent_converges_linearly() {
        let mut q = Quadratic { a: DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.5, 0.8])), b: DVector::zeros(3), evals: 0 };
        let cfg = OptimizerConfig {
            tolerances: Tolerances { gradient: 1e-9, ..Default::default() },
            ..OptimizerConfig::new(Method::GradientDescent)
        };
        let r = minimize(&mut q, &DVector::from_vec(vec![1.0, 1.0, 1.0]), &cfg).unwrap();
        assert_eq!(r.termination, Termination::GradientTolerance);
        let q_rate = estimate_rate(&r.iterates()).unwrap();
        assert!(q_rate > 0.8 && q_rate < 1.3, "{q_rate}");
    }

    #[test]
    fn bfgs_converges_superlinearly_on_quadratic() {
        let mut q = quadratic();
        let cfg = OptimizerConfig {
            tolerances: Tolerances { gradient: 1e-12, ..Default::default() },
            ..OptimizerConfig::new(Method::BfgsIdentity)
        };
        let r = minimize(&mut q, &DVector::from_vec(vec![1.0, 1.0, 1.0]), &cfg).unwrap();
        let exact = q.a.clone().lu().solve(&q.b).unwrap();
        assert!((&r.x - &exact).norm() < 1e-10);
        assert!(r.iterations() < 20);
    }
}
