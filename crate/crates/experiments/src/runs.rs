//! Experiment drivers behind the command-line subcommands.

use grating_core::bem::{DiffractionResult, Solver};
use grating_core::optim::{
    estimate_rate, fixed_step_descent, minimize, GratingObjective, ObjectiveKind, OptimizationResult, Termination,
};
use grating_core::shapegrad::{efficiency_derivatives, finite_differences};
use grating_core::{Error as CoreError, GratingProfile};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{ExperimentConfig, MeshConfig, Physics};
use crate::error::{ExperimentError, Result};

/// A solver for `physics` with the configured mesh options.
pub fn solver(physics: &Physics, mesh: &MeshConfig) -> Result<Solver> {
    Ok(Solver::new(physics.wave()?, 1.0, mesh.options())?)
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub physics: Physics,
    pub elements: usize,
    pub result: DiffractionResult,
    pub kx: Vec<f64>,
    pub ky: Vec<f64>,
}

impl SolveReport {
    pub fn energy_balance(&self) -> f64 {
        self.result.energy_balance()
    }
}

/// Diffraction by `profile` under `physics`.
pub fn solve_profile(physics: &Physics, mesh: &MeshConfig, profile: &GratingProfile) -> Result<SolveReport> {
    let mut s = solver(physics, mesh)?;
    let m = s.mesh(profile, mesh.elements);
    let elements = m.elements();
    let scattering = s.solve_mesh(m)?;
    let result = scattering.diffraction();
    let modes = s.modes();
    let kx = result.modes.iter().map(|&n| modes.kx(n)).collect();
    let ky = result.modes.iter().map(|&n| modes.ky(n).re).collect();
    Ok(SolveReport { physics: *physics, elements, result, kx, ky })
}

/// Solves the configured profile, or the flat mirror when none is given.
pub fn solve(config: &ExperimentConfig) -> Result<SolveReport> {
    let profile = config.profile()?.unwrap_or_else(|| GratingProfile::flat(1.0));
    solve_profile(&config.physics()?, &config.mesh, &profile)
}

/// Seeded starting point: coefficients uniform in `[-a, a]`, or the configured profile.
pub fn initial_point(config: &ExperimentConfig) -> Result<DVector<f64>> {
    let n = 2 * config.parametrization.modes;
    if let Some(p) = config.profile()? {
        let mut x = DVector::zeros(n);
        for (i, v) in p.variables().into_iter().take(n).enumerate() {
            x[i] = v;
        }
        return Ok(x);
    }
    let a = config.method.init_amplitude;
    let mut rng = ChaCha8Rng::seed_from_u64(config.method.seed);
    Ok(DVector::from_fn(n, |_, _| if a > 0.0 { rng.gen_range(-a..a) } else { 0.0 }))
}

#[derive(Debug, Clone)]
pub struct OptimizeReport {
    pub method: String,
    pub seed: u64,
    pub kind: ObjectiveKind,
    pub result: OptimizationResult,
    pub profile: GratingProfile,
    pub efficiency: f64,
    /// Efficiency of the objective's order at every iterate.
    pub efficiencies: Vec<f64>,
    /// First iteration within the efficiency tolerance of the final efficiency.
    pub iterations_to_tolerance: usize,
    /// Whether a target run reached the objective tolerance.
    pub converged: bool,
    pub rate: Option<f64>,
    pub elements: usize,
    pub seconds: f64,
}

impl OptimizeReport {
    pub fn line_search_failed(&self) -> bool {
        matches!(self.result.termination, Termination::LineSearchFailure { .. })
    }
}

/// Runs the configured optimizer from the seeded initialization.
pub fn optimize(config: &ExperimentConfig) -> Result<OptimizeReport> {
    let start = std::time::Instant::now();
    let physics = config.physics()?;
    let kind = config.objective_kind()?;
    let s = solver(&physics, &config.mesh)?;
    if !s.modes().is_propagating(kind.mode()) {
        return Err(CoreError::ModeNotPropagating(kind.mode()).into());
    }
    let mut obj = GratingObjective::new(s, kind, config.parametrization.modes);
    if let Some(e) = config.mesh.elements {
        obj = obj.with_elements(e);
    }
    let x0 = initial_point(config)?;
    let x0 = if config.profile.is_none() {
        fixed_step_descent(&mut obj, &x0, config.method.init_step_size, config.method.init_steps)?
    } else {
        x0
    };
    let result = minimize(&mut obj, &x0, &config.optimizer())?;

    let efficiencies: Vec<f64> = result.trace.iter().map(|r| r.observation.unwrap_or(f64::NAN)).collect();
    let efficiency = obj.efficiency(&result.x)?;
    let eps = config.tolerances.efficiency;
    let iterations_to_tolerance =
        efficiencies.iter().position(|e| (e - efficiency).abs() <= eps).unwrap_or(result.trace.len() - 1);
    let converged = matches!(kind, ObjectiveKind::Target { .. }) && result.value <= config.tolerances.objective;
    let rate = estimate_rate(&result.iterates()).ok();
    let profile = obj.profile(&result.x)?;
    Ok(OptimizeReport {
        method: config.method().name(),
        seed: config.method.seed,
        kind,
        profile,
        efficiency,
        efficiencies,
        iterations_to_tolerance,
        converged,
        rate,
        elements: obj.elements().unwrap_or_default(),
        seconds: start.elapsed().as_secs_f64(),
        result,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub wavelength: f64,
    pub angle: f64,
    pub efficiency: f64,
    pub energy_balance: f64,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub mode: i64,
    pub rows: Vec<SweepRow>,
    /// Wavelengths skipped because of a Rayleigh anomaly, with the offending mode.
    pub anomalies: Vec<(f64, i64)>,
}

/// Efficiency of the reported order over the configured wavelength range.
pub fn sweep(config: &ExperimentConfig) -> Result<SweepReport> {
    let sc = config.sweep.as_ref().ok_or_else(|| ExperimentError::Config("sweep needs a [sweep] section".into()))?;
    let physics = config.physics()?;
    let profile = config.require_profile("sweep")?;
    let mode = config.reported_mode();
    let littrow = if sc.littrow { config.physics.littrow_order } else { None };
    let wavelengths: Vec<f64> = (0..sc.samples)
        .map(|i| {
            if sc.samples == 1 {
                sc.wavelength_min
            } else {
                sc.wavelength_min + (sc.wavelength_max - sc.wavelength_min) * i as f64 / (sc.samples - 1) as f64
            }
        })
        .collect();
    let outcomes: Vec<Result<std::result::Result<SweepRow, i64>>> = wavelengths
        .par_iter()
        .map(|&l| {
            let p = physics.at_wavelength(l, littrow)?;
            match solve_profile(&p, &config.mesh, &profile) {
                Ok(r) => Ok(Ok(SweepRow {
                    wavelength: l,
                    angle: p.angle,
                    efficiency: r.result.efficiency(mode).unwrap_or(0.0),
                    energy_balance: r.energy_balance(),
                })),
                Err(ExperimentError::Core(CoreError::Anomaly { mode })) => Ok(Err(mode)),
                Err(e) => Err(e),
            }
        })
        .collect();
    let mut rows = Vec::new();
    let mut anomalies = Vec::new();
    for (l, o) in wavelengths.iter().zip(outcomes) {
        match o? {
            Ok(r) => rows.push(r),
            Err(m) => anomalies.push((*l, m)),
        }
    }
    Ok(SweepReport { mode, rows, anomalies })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbRow {
    pub variable: usize,
    /// `+1` or `-1`.
    pub sign: i8,
    pub value: f64,
    pub efficiency: f64,
}

#[derive(Debug, Clone)]
pub struct PerturbReport {
    pub mode: i64,
    pub delta: f64,
    pub base: f64,
    pub rows: Vec<PerturbRow>,
}

impl PerturbReport {
    /// Lowest efficiency over all perturbations.
    pub fn worst(&self) -> f64 {
        self.rows.iter().map(|r| r.efficiency).fold(self.base, f64::min)
    }
}

/// Changes each coefficient independently by the relative amount `delta`
/// in both directions and re-solves.
pub fn perturb(config: &ExperimentConfig, delta: f64) -> Result<PerturbReport> {
    let physics = config.physics()?;
    let profile = config.require_profile("perturb")?;
    let mode = config.reported_mode();
    let base = efficiency_of(&physics, &config.mesh, &profile, mode)?;
    let vars = profile.variables();
    let cases: Vec<(usize, i8)> = (0..vars.len()).flat_map(|i| [(i, 1i8), (i, -1i8)]).collect();
    let rows: Result<Vec<PerturbRow>> = cases
        .par_iter()
        .map(|&(i, sign)| {
            let mut v = vars.clone();
            v[i] *= 1.0 + sign as f64 * delta;
            let p = GratingProfile::from_variables(1.0, &v)?;
            let efficiency = efficiency_of(&physics, &config.mesh, &p, mode)?;
            Ok(PerturbRow { variable: i, sign, value: v[i], efficiency })
        })
        .collect();
    Ok(PerturbReport { mode, delta, base, rows: rows? })
}

fn efficiency_of(physics: &Physics, mesh: &MeshConfig, profile: &GratingProfile, mode: i64) -> Result<f64> {
    let r = solve_profile(physics, mesh, profile)?;
    r.result.efficiency(mode).ok_or_else(|| CoreError::ModeNotPropagating(mode).into())
}

#[derive(Debug, Clone)]
pub struct GradientCheck {
    pub mode: i64,
    pub efficiency: f64,
    pub gradient: DVector<f64>,
    pub fd_gradient: DVector<f64>,
    pub hessian: nalgebra::DMatrix<f64>,
    pub fd_hessian: nalgebra::DMatrix<f64>,
    /// `|g - g_fd| / |g_fd|`.
    pub gradient_error: f64,
    /// `max |H - H_fd| / max |H_fd|`.
    pub hessian_error: f64,
    pub asymmetry: f64,
}

/// Adjoint derivatives of the efficiency against central differences with
/// steps `gradient_step` and `hessian_step` (in periods).
pub fn gradient_check(config: &ExperimentConfig, gradient_step: f64, hessian_step: f64) -> Result<GradientCheck> {
    let physics = config.physics()?;
    let mode = config.reported_mode();
    let profile = match config.profile()? {
        Some(p) => p,
        None => GratingProfile::from_variables(1.0, initial_point(config)?.as_slice())?,
    };
    let mut s = solver(&physics, &config.mesh)?;
    let mesh = s.mesh(&profile, config.mesh.elements);
    let elements = mesh.elements();
    let scattering = s.solve_mesh(mesh)?;
    let d = efficiency_derivatives(&scattering, mode, true)?;
    let fd = finite_differences(&mut s, &profile, elements, mode, gradient_step, Some(hessian_step))?;
    let hessian = d.hessian.expect("requested");
    let fd_hessian = fd.hessian.expect("requested");
    let gradient_error = (&d.gradient - &fd.gradient).norm() / fd.gradient.norm().max(f64::MIN_POSITIVE);
    let hessian_error = (&hessian - &fd_hessian).amax() / fd_hessian.amax().max(f64::MIN_POSITIVE);
    Ok(GradientCheck {
        mode,
        efficiency: d.efficiency,
        gradient: d.gradient,
        fd_gradient: fd.gradient,
        hessian,
        fd_hessian,
        gradient_error,
        hessian_error,
        asymmetry: d.asymmetry,
    })
}
