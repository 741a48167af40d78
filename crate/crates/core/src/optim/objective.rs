use nalgebra::{DMatrix, DVector};

use super::Objective;
use crate::bem::{Scattering, Solver};
use crate::error::Result;
use crate::profile::{GratingProfile, ADMISSIBLE_HEIGHT};
use crate::shapegrad::efficiency_derivatives;

/// What to do with the efficiency of one diffraction order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ObjectiveKind {
    /// Minimize `(e_n - target)^2`.
    Target { mode: i64, target: f64 },
    /// Minimize `-e_n`.
    Maximize { mode: i64 },
}

impl ObjectiveKind {
    pub fn mode(&self) -> i64 {
        match self {
            ObjectiveKind::Target { mode, .. } | ObjectiveKind::Maximize { mode } => *mode,
        }
    }

    pub fn value(&self, e: f64) -> f64 {
        match self {
            ObjectiveKind::Target { target, .. } => (e - target).powi(2),
            ObjectiveKind::Maximize { .. } => -e,
        }
    }

    // f'(e) and f''(e)
    fn chain(&self, e: f64) -> (f64, f64) {
        match self {
            ObjectiveKind::Target { target, .. } => (2.0 * (e - target), 2.0),
            ObjectiveKind::Maximize { .. } => (-1.0, 0.0),
        }
    }
}

/// Objective over the interleaved Fourier coefficients of a profile.
///
/// The element count never decreases during a run, so the discrete objective
/// does not jump down when the arc length shrinks. Only points where a
/// gradient is requested raise the count; rejected line-search trials do not.
/// A fixed count can be set with [`GratingObjective::with_elements`].
#[derive(Debug)]
pub struct GratingObjective {
    solver: Solver,
    kind: ObjectiveKind,
    modes: usize,
    elements: Option<usize>,
    fixed: bool,
    cache: Option<(DVector<f64>, Scattering)>,
    last_efficiency: Option<f64>,
    last_asymmetry: f64,
}

impl GratingObjective {
    /// Objective over profiles with `modes` Fourier modes (`2 modes` variables).
    pub fn new(solver: Solver, kind: ObjectiveKind, modes: usize) -> Self {
        Self { solver, kind, modes, elements: None, fixed: false, cache: None, last_efficiency: None, last_asymmetry: 0.0 }
    }

    pub fn with_elements(mut self, elements: usize) -> Self {
        self.elements = Some(elements);
        self.fixed = true;
        self
    }

    pub fn kind(&self) -> ObjectiveKind {
        self.kind
    }

    pub fn solver(&self) -> &Solver {
        &self.solver
    }

    pub fn solver_mut(&mut self) -> &mut Solver {
        &mut self.solver
    }

    pub fn elements(&self) -> Option<usize> {
        self.elements
    }

    /// Relative asymmetry of the last raw Hessian.
    pub fn last_asymmetry(&self) -> f64 {
        self.last_asymmetry
    }

    pub fn profile(&self, x: &DVector<f64>) -> Result<GratingProfile> {
        GratingProfile::from_variables(self.solver.period(), x.as_slice())
    }

    fn scattering(&mut self, x: &DVector<f64>) -> Result<&Scattering> {
        let hit = matches!(&self.cache, Some((cx, _)) if cx == x);
        if !hit {
            let profile = self.profile(x)?;
            let n = if self.fixed {
                self.elements.expect("fixed element count")
            } else {
                let d = self.solver.default_elements(&profile);
                self.elements.map_or(d, |e| e.max(d))
            };
            let mesh = self.solver.mesh(&profile, Some(n));
            let s = self.solver.solve_mesh(mesh)?;
            self.cache = Some((x.clone(), s));
        }
        Ok(&self.cache.as_ref().expect("filled above").1)
    }

    /// Unit vector along a horizontal translation of the profile, if any.
    ///
    /// Every efficiency is invariant under translation, so its exact gradient
    /// has no component along this direction. The adjoint gradient carries a
    /// discretization error there, and `|H|^{-1}` would turn it into a large
    /// step along the Hessian's null direction. Derivatives of the efficiency
    /// are therefore projected onto the complement before use.
    fn translation(&self, x: &DVector<f64>) -> Option<DVector<f64>> {
        let omega = 2.0 * std::f64::consts::PI / self.solver.period();
        let mut t = DVector::zeros(x.len());
        for j in 0..x.len() / 2 {
            let w = omega * (j + 1) as f64;
            t[2 * j] = w * x[2 * j + 1];
            t[2 * j + 1] = -w * x[2 * j];
        }
        let norm = t.norm();
        (norm > 0.0).then(|| t / norm)
    }

    fn commit(&mut self) {
        if let Some((_, s)) = &self.cache {
            self.elements = Some(s.mesh().elements());
        }
    }

    /// Efficiency of the objective's order at `x`.
    pub fn efficiency(&mut self, x: &DVector<f64>) -> Result<f64> {
        let n = self.kind.mode();
        self.scattering(x)?.efficiency(n)
    }
}

impl Objective for GratingObjective {
    fn dimension(&self) -> usize {
        2 * self.modes
    }

    fn value(&mut self, x: &DVector<f64>) -> Result<f64> {
        let e = self.efficiency(x)?;
        Ok(self.kind.value(e))
    }

    fn gradient(&mut self, x: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
        let kind = self.kind;
        let d = efficiency_derivatives(self.scattering(x)?, kind.mode(), false)?;
        self.commit();
        self.last_efficiency = Some(d.efficiency);
        let (d1, _) = kind.chain(d.efficiency);
        let mut ge = d.gradient;
        if let Some(t) = self.translation(x) {
            ge -= &t * t.dot(&ge);
        }
        Ok((kind.value(d.efficiency), ge * d1))
    }

    fn hessian(&mut self, x: &DVector<f64>) -> Result<(f64, DVector<f64>, DMatrix<f64>)> {
        let kind = self.kind;
        let d = efficiency_derivatives(self.scattering(x)?, kind.mode(), true)?;
        self.commit();
        self.last_efficiency = Some(d.efficiency);
        self.last_asymmetry = d.asymmetry;
        let (d1, d2) = kind.chain(d.efficiency);
        let mut ge = d.gradient;
        let mut he = d.hessian.expect("requested");
        if let Some(t) = self.translation(x) {
            ge -= &t * t.dot(&ge);
            let p = DMatrix::identity(t.len(), t.len()) - &t * t.transpose();
            he = &p * he * &p;
        }
        let h = &ge * ge.transpose() * d2 + he * d1;
        Ok((kind.value(d.efficiency), ge * d1, h))
    }

    fn is_admissible(&self, x: &DVector<f64>) -> bool {
        let period = self.solver.period();
        match GratingProfile::from_variables(period, x.as_slice()) {
            Ok(p) => p.peak_to_peak() <= ADMISSIBLE_HEIGHT * period,
            Err(_) => false,
        }
    }

    fn solve_count(&self) -> usize {
        self.solver.stats().solves()
    }

    fn observation(&self) -> Option<f64> {
        self.last_efficiency
    }
}
