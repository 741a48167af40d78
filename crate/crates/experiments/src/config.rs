//! Experiment configuration files.
//!
//! Configurations are TOML documents with fixed sections; unknown keys are
//! rejected. Lengths are nondimensionalized so that the grating period is one,
//! and profile coefficients are always given in units of the period.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use grating_core::bem::MeshOptions;
use grating_core::optim::{LineSearchParams, Method, ObjectiveKind, OptimizerConfig, Tolerances};
use grating_core::{GratingProfile, IncidentWave};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{ExperimentError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub physics: PhysicsConfig,
    pub objective: Option<ObjectiveConfig>,
    #[serde(default)]
    pub parametrization: ParametrizationConfig,
    pub profile: Option<ProfileConfig>,
    #[serde(default)]
    pub method: MethodConfig,
    #[serde(default)]
    pub tolerances: ToleranceConfig,
    #[serde(default)]
    pub line_search: LineSearchConfig,
    #[serde(default)]
    pub mesh: MeshConfig,
    pub sweep: Option<SweepConfig>,
    pub perturb: Option<PerturbConfig>,
}

/// Either `wavenumber` or the pair `wavelength` + `period` (any common unit),
/// and either `incidence_angle` (radians) or `littrow_order`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsConfig {
    pub wavenumber: Option<f64>,
    pub wavelength: Option<f64>,
    pub period: Option<f64>,
    pub incidence_angle: Option<f64>,
    pub littrow_order: Option<i64>,
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default = "one")]
    pub impedance: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveName {
    Target,
    Maximize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveConfig {
    pub kind: ObjectiveName,
    pub mode: i64,
    pub target: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParametrizationConfig {
    pub modes: usize,
}

impl Default for ParametrizationConfig {
    fn default() -> Self {
        Self { modes: 5 }
    }
}

/// Inline coefficients or a path to a profile file. Relative paths are
/// resolved against the directory of the configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    pub sin: Option<Vec<f64>>,
    pub cos: Option<Vec<f64>>,
    pub file: Option<PathBuf>,
}

/// On-disk profile format, also written at the end of an optimization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileFile {
    pub sin: Vec<f64>,
    pub cos: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodName {
    Gd,
    Newton,
    NewtonM,
    BfgsId,
    BfgsH,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MethodConfig {
    pub name: MethodName,
    /// Hessian refresh interval for `newton_m`.
    pub refresh: usize,
    pub seed: u64,
    /// Fixed-step gradient iterations applied to the random start.
    pub init_steps: usize,
    pub init_step_size: f64,
    /// Half-width of the uniform distribution of initial coefficients.
    pub init_amplitude: f64,
}

impl Default for MethodConfig {
    fn default() -> Self {
        Self { name: MethodName::Newton, refresh: 2, seed: 0, init_steps: 5, init_step_size: 1e-3, init_amplitude: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToleranceConfig {
    pub gradient: f64,
    pub step: f64,
    pub max_iterations: usize,
    /// Distance to the final efficiency used to count iterations to convergence.
    pub efficiency: f64,
    /// Objective level below which a target run counts as converged.
    pub objective: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        let t = Tolerances::default();
        Self { gradient: t.gradient, step: t.step, max_iterations: t.max_iterations, efficiency: 1e-2, objective: 1e-10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LineSearchConfig {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub initial_step: f64,
    pub max_backtracks: usize,
}

impl Default for LineSearchConfig {
    fn default() -> Self {
        let p = LineSearchParams::default();
        Self { alpha: p.alpha, beta: p.beta, gamma: p.gamma, initial_step: p.initial_step, max_backtracks: p.max_backtracks }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeshConfig {
    pub per_wavelength: f64,
    pub min_elements: usize,
    pub quadrature_order: usize,
    pub singular_order: usize,
    /// Fixed element count; overrides the wavelength rule.
    pub elements: Option<usize>,
}

impl Default for MeshConfig {
    fn default() -> Self {
        let m = MeshOptions::default();
        Self {
            per_wavelength: m.per_wavelength,
            min_elements: m.min_elements,
            quadrature_order: m.quadrature_order,
            singular_order: m.singular_order,
            elements: None,
        }
    }
}

impl MeshConfig {
    pub fn options(&self) -> MeshOptions {
        MeshOptions {
            per_wavelength: self.per_wavelength,
            min_elements: self.min_elements,
            quadrature_order: self.quadrature_order,
            singular_order: self.singular_order,
        }
    }
}

/// Wavelengths in the same unit as `physics.period` (or in periods when the
/// physics section uses a wavenumber).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub wavelength_min: f64,
    pub wavelength_max: f64,
    pub samples: usize,
    /// Recompute the Littrow angle at every wavelength instead of keeping the
    /// configured incidence angle.
    #[serde(default)]
    pub littrow: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbConfig {
    /// Relative change applied to each coefficient.
    pub delta: f64,
}

/// Physics after nondimensionalization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Physics {
    pub wavenumber: f64,
    pub angle: f64,
    pub amplitude: f64,
    pub impedance: f64,
    /// Physical length of one period; one when the wavenumber was given.
    pub length_scale: f64,
}

impl Physics {
    pub fn wave(&self) -> Result<IncidentWave> {
        Ok(IncidentWave::with_amplitude(self.wavenumber, self.angle, self.amplitude, self.impedance)?)
    }

    /// Wavelength in the unit of the configuration.
    pub fn wavelength(&self) -> f64 {
        2.0 * PI / self.wavenumber * self.length_scale
    }

    /// Same physics at another wavelength, optionally at that wavelength's Littrow angle.
    pub fn at_wavelength(&self, wavelength: f64, littrow: Option<i64>) -> Result<Physics> {
        let wavenumber = 2.0 * PI * self.length_scale / wavelength;
        let angle = match littrow {
            Some(n) => littrow_angle(n, wavelength / self.length_scale)?,
            None => self.angle,
        };
        Ok(Physics { wavenumber, angle, ..*self })
    }
}

/// Incidence angle at which order `n` travels back along the incident
/// direction, for a unit period: `|sin theta| = |n| lambda / 2`. With
/// `kx_n = k sin theta + 2 pi n` this means `sin theta = -n lambda / 2`.
pub fn littrow_angle(order: i64, wavelength: f64) -> Result<f64> {
    let s = -(order as f64) * wavelength / 2.0;
    if !(-1.0..=1.0).contains(&s) || order == 0 {
        return Err(ExperimentError::Config(format!(
            "physics.littrow_order = {order} has no Littrow angle at wavelength {wavelength} periods"
        )));
    }
    Ok(s.asin())
}

fn bad(msg: impl Into<String>) -> ExperimentError {
    ExperimentError::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads a configuration and resolves a relative profile path against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ExperimentError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config = Self::from_toml(&text)?;
        if let Some(ProfileConfig { file: Some(f), .. }) = &mut config.profile {
            if f.is_relative() {
                if let Some(dir) = path.parent() {
                    *f = dir.join(&*f);
                }
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.physics()?;
        if let Some(o) = &self.objective {
            match (o.kind, o.target) {
                (ObjectiveName::Target, None) => return Err(bad("objective.target is required for kind = \"target\"")),
                (ObjectiveName::Maximize, Some(_)) => return Err(bad("objective.target is not used with kind = \"maximize\"")),
                (ObjectiveName::Target, Some(t)) if !(0.0..=1.0).contains(&t) => {
                    return Err(bad(format!("objective.target = {t} is not an efficiency in [0, 1]")))
                }
                _ => {}
            }
        }
        if self.parametrization.modes == 0 {
            return Err(bad("parametrization.modes must be positive"));
        }
        if let Some(p) = &self.profile {
            match (&p.sin, &p.cos, &p.file) {
                (Some(_), Some(_), None) | (None, None, Some(_)) => {}
                _ => return Err(bad("profile: give either both sin and cos, or file")),
            }
        }
        if self.method.name == MethodName::NewtonM && self.method.refresh == 0 {
            return Err(bad("method.refresh must be positive"));
        }
        let ls = &self.line_search;
        if !(ls.alpha > 0.0 && ls.alpha < 1.0) || !(ls.beta > 0.0 && ls.beta < 1.0) {
            return Err(bad("line_search.alpha and line_search.beta must lie in (0, 1)"));
        }
        if !(ls.gamma > ls.beta && ls.gamma < 1.0) {
            return Err(bad("line_search.gamma must lie in (beta, 1)"));
        }
        if ls.initial_step <= 0.0 {
            return Err(bad("line_search.initial_step must be positive"));
        }
        let m = &self.mesh;
        if m.per_wavelength <= 0.0 || m.quadrature_order == 0 || m.singular_order == 0 {
            return Err(bad("mesh: per_wavelength and quadrature orders must be positive"));
        }
        if matches!(m.elements, Some(e) if e < 4) {
            return Err(bad("mesh.elements must be at least 4"));
        }
        if let Some(s) = &self.sweep {
            if !(s.wavelength_min > 0.0 && s.wavelength_max >= s.wavelength_min) || s.samples == 0 {
                return Err(bad("sweep: need 0 < wavelength_min <= wavelength_max and samples > 0"));
            }
            if s.littrow && self.physics.littrow_order.is_none() {
                return Err(bad("sweep.littrow requires physics.littrow_order"));
            }
        }
        if let Some(p) = &self.perturb {
            if !p.delta.is_finite() || p.delta < 0.0 {
                return Err(bad("perturb.delta must be a non-negative number"));
            }
        }
        Ok(())
    }

    pub fn physics(&self) -> Result<Physics> {
        let p = &self.physics;
        let (wavenumber, length_scale) = match (p.wavenumber, p.wavelength, p.period) {
            (Some(k), None, None) => (k, 1.0),
            (None, Some(l), Some(period)) => {
                if !(l > 0.0 && period > 0.0) {
                    return Err(bad("physics.wavelength and physics.period must be positive"));
                }
                (2.0 * PI * period / l, period)
            }
            (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
                return Err(bad("physics: give either wavenumber or wavelength + period, not both"))
            }
            _ => return Err(bad("physics: give either wavenumber or wavelength + period")),
        };
        if !(wavenumber > 0.0 && wavenumber.is_finite()) {
            return Err(bad("physics.wavenumber must be positive"));
        }
        let angle = match (p.incidence_angle, p.littrow_order) {
            (Some(a), None) => a,
            (None, Some(n)) => littrow_angle(n, 2.0 * PI / wavenumber)?,
            (Some(_), Some(_)) => return Err(bad("physics: give either incidence_angle or littrow_order, not both")),
            (None, None) => return Err(bad("physics: give either incidence_angle or littrow_order")),
        };
        if !(angle.abs() < PI / 2.0) {
            return Err(bad(format!("physics.incidence_angle = {angle} is not in (-pi/2, pi/2)")));
        }
        let physics = Physics { wavenumber, angle, amplitude: p.amplitude, impedance: p.impedance, length_scale };
        physics.wave()?;
        Ok(physics)
    }

    pub fn objective_kind(&self) -> Result<ObjectiveKind> {
        let o = self.objective.as_ref().ok_or_else(|| bad("missing [objective] section"))?;
        Ok(match o.kind {
            ObjectiveName::Target => ObjectiveKind::Target { mode: o.mode, target: o.target.unwrap_or_default() },
            ObjectiveName::Maximize => ObjectiveKind::Maximize { mode: o.mode },
        })
    }

    /// Mode whose efficiency is reported: the objective's, else zero.
    pub fn reported_mode(&self) -> i64 {
        self.objective.as_ref().map_or(0, |o| o.mode)
    }

    pub fn method(&self) -> Method {
        match self.method.name {
            MethodName::Gd => Method::GradientDescent,
            MethodName::Newton => Method::Newton,
            MethodName::NewtonM => Method::NewtonRefresh(self.method.refresh),
            MethodName::BfgsId => Method::BfgsIdentity,
            MethodName::BfgsH => Method::BfgsHessian,
        }
    }

    pub fn optimizer(&self) -> OptimizerConfig {
        let ls = &self.line_search;
        let t = &self.tolerances;
        OptimizerConfig {
            method: self.method(),
            line_search: LineSearchParams {
                alpha: ls.alpha,
                beta: ls.beta,
                gamma: ls.gamma,
                initial_step: ls.initial_step,
                max_backtracks: ls.max_backtracks,
            },
            tolerances: Tolerances { gradient: t.gradient, step: t.step, max_iterations: t.max_iterations },
        }
    }

    /// The configured profile, if any.
    pub fn profile(&self) -> Result<Option<GratingProfile>> {
        let Some(p) = &self.profile else { return Ok(None) };
        let (sin, cos) = match (&p.sin, &p.cos, &p.file) {
            (Some(s), Some(c), None) => (s.clone(), c.clone()),
            (None, None, Some(f)) => {
                let text = std::fs::read_to_string(f)
                    .map_err(|e| bad(format!("profile.file {}: {e}", f.display())))?;
                let pf: ProfileFile = toml::from_str(&text).map_err(|e| bad(format!("profile.file {}: {e}", f.display())))?;
                (pf.sin, pf.cos)
            }
            _ => return Err(bad("profile: give either both sin and cos, or file")),
        };
        GratingProfile::new(1.0, sin, cos).map(Some).map_err(|e| bad(format!("profile: {e}")))
    }

    /// The configured profile or an error naming the command that needs it.
    pub fn require_profile(&self, command: &str) -> Result<GratingProfile> {
        self.profile()?.ok_or_else(|| bad(format!("{command} needs a [profile] section")))
    }

    /// SHA-256 of the normalized configuration, in hex.
    pub fn hash(&self) -> String {
        let text = toml::to_string(self).expect("configurations serialize");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

impl ProfileFile {
    pub fn from_profile(p: &GratingProfile) -> Self {
        Self { sin: p.sin_coefficients().to_vec(), cos: p.cos_coefficients().to_vec() }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("profiles serialize")
    }
}
