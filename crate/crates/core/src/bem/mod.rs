//! Boundary-element solution of the first-kind integral equation `V j = -u_i`
//! on one period of the grating, and the far-field amplitudes it produces.
//!
//! The density `j` is proportional to the surface current; the normal
//! derivative of the total field on the surface is `-i k eta j`.

pub mod assembly;
mod lu;
mod mesh;

use std::f64::consts::PI;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub use lu::LuFactors;
pub use mesh::{BoundaryMesh, MeshOptions, QuadPoint};

use crate::error::{Error, Result};
use crate::profile::GratingProfile;
use crate::qpgreens::{IncidentWave, KernelTable, ModeTable, DEFAULT_ANOMALY_TOL};

/// Evanescent orders kept on each side of the propagating set in [`ModeTable`].
pub const DEFAULT_TRUNCATION: usize = 8;

#[derive(Debug, Default)]
struct Counters {
    assemblies: AtomicUsize,
    factorizations: AtomicUsize,
    primal_solves: AtomicUsize,
    adjoint_solves: AtomicUsize,
}

/// Work done by a [`Solver`] so far.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolveStats {
    pub assemblies: usize,
    pub factorizations: usize,
    pub primal_solves: usize,
    pub adjoint_solves: usize,
}

impl SolveStats {
    pub fn solves(&self) -> usize {
        self.primal_solves + self.adjoint_solves
    }
}

impl std::ops::Sub for SolveStats {
    type Output = SolveStats;
    fn sub(self, o: SolveStats) -> SolveStats {
        SolveStats {
            assemblies: self.assemblies - o.assemblies,
            factorizations: self.factorizations - o.factorizations,
            primal_solves: self.primal_solves - o.primal_solves,
            adjoint_solves: self.adjoint_solves - o.adjoint_solves,
        }
    }
}

/// Solver for one incident wave and grating period. Caches the kernel table.
#[derive(Debug)]
pub struct Solver {
    wave: IncidentWave,
    modes: ModeTable,
    options: MeshOptions,
    table: Option<Arc<KernelTable>>,
    counters: Arc<Counters>,
}

impl Solver {
    pub fn new(wave: IncidentWave, period: f64, options: MeshOptions) -> Result<Self> {
        let modes = ModeTable::new(&wave, period, DEFAULT_TRUNCATION, DEFAULT_ANOMALY_TOL)?;
        Ok(Self { wave, modes, options, table: None, counters: Arc::default() })
    }

    pub fn wave(&self) -> &IncidentWave {
        &self.wave
    }

    pub fn modes(&self) -> &ModeTable {
        &self.modes
    }

    pub fn period(&self) -> f64 {
        self.modes.period()
    }

    pub fn options(&self) -> &MeshOptions {
        &self.options
    }

    pub fn stats(&self) -> SolveStats {
        let c = &self.counters;
        SolveStats {
            assemblies: c.assemblies.load(Ordering::Relaxed),
            factorizations: c.factorizations.load(Ordering::Relaxed),
            primal_solves: c.primal_solves.load(Ordering::Relaxed),
            adjoint_solves: c.adjoint_solves.load(Ordering::Relaxed),
        }
    }

    pub fn default_elements(&self, profile: &GratingProfile) -> usize {
        self.options.elements_for(profile, self.wave.wavenumber)
    }

    pub fn mesh(&self, profile: &GratingProfile, elements: Option<usize>) -> BoundaryMesh {
        let n = elements.unwrap_or_else(|| self.default_elements(profile));
        BoundaryMesh::new(profile, n, self.options)
    }

    /// Kernel table covering every vertical separation on `profile`.
    pub fn table_for(&mut self, profile: &GratingProfile) -> Arc<KernelTable> {
        let needed = profile.peak_to_peak();
        if let Some(t) = &self.table {
            if t.ymax() >= needed {
                return t.clone();
            }
        }
        let period = self.period();
        let ymax = (0.5 * period).max(1.2 * needed);
        let table = Arc::new(KernelTable::new(self.modes.lattice(), ymax));
        self.table = Some(table.clone());
        table
    }

    fn prefactor(&self) -> Complex64 {
        Complex64::new(0.0, self.wave.wavenumber * self.wave.impedance)
    }

    /// Periodic Galerkin matrix of `V`, including the `i k eta` prefactor.
    pub fn assemble(&mut self, mesh: &BoundaryMesh) -> DMatrix<Complex64> {
        let table = self.table_for(mesh.profile());
        self.counters.assemblies.fetch_add(1, Ordering::Relaxed);
        assembly::single_layer(mesh, &table, self.prefactor())
    }

    /// Galerkin matrix of the adjoint operator built from the adjoint kernel
    /// directly. It equals the transpose of [`Self::assemble`]; used for checks.
    pub fn assemble_adjoint(&mut self, mesh: &BoundaryMesh) -> DMatrix<Complex64> {
        let needed = mesh.profile().peak_to_peak();
        let ymax = (0.5 * self.period()).max(1.2 * needed);
        let table = KernelTable::new(self.modes.adjoint().lattice(), ymax);
        assembly::single_layer(mesh, &table, self.prefactor())
    }

    /// Solves with the default mesh for `profile`.
    pub fn solve(&mut self, profile: &GratingProfile) -> Result<Scattering> {
        let mesh = self.mesh(profile, None);
        self.solve_mesh(mesh)
    }

    pub fn solve_mesh(&mut self, mesh: BoundaryMesh) -> Result<Scattering> {
        let table = self.table_for(mesh.profile());
        let p = self.assemble(&mesh);
        let lu = LuFactors::new(&p)?;
        self.counters.factorizations.fetch_add(1, Ordering::Relaxed);
        let (e0, ky) = (self.wave.amplitude, self.wave.ky());
        let values: Vec<Complex64> =
            mesh.points().iter().map(|q| -e0 * Complex64::from_polar(1.0, -ky * q.y)).collect();
        let rhs = assembly::load(&mesh, &values);
        let mut scattering = Scattering {
            mesh,
            table,
            modes: self.modes.clone(),
            wave: self.wave,
            lu,
            density: DVector::zeros(0),
            counters: self.counters.clone(),
        };
        let c = scattering.solve_primal(&rhs);
        if c.iter().any(|z| !z.is_finite()) {
            return Err(Error::NonFinite("surface density"));
        }
        scattering.density = c;
        Ok(scattering)
    }
}

/// Piecewise-linear density on a mesh, stored through its periodic part:
/// `j(x) = exp(i b x) sum_i c_i phi_i(x)` with Bloch wavenumber `b`.
#[derive(Debug, Clone)]
pub struct SurfaceDensity {
    pub periodic: DVector<Complex64>,
    pub bloch: f64,
    pub period: f64,
}

impl SurfaceDensity {
    /// Values at the mesh nodes.
    pub fn nodal_values(&self) -> Vec<Complex64> {
        let n = self.periodic.len();
        let h = self.period / n as f64;
        self.periodic
            .iter()
            .enumerate()
            .map(|(i, c)| c * Complex64::from_polar(1.0, self.bloch * i as f64 * h))
            .collect()
    }

    pub fn value(&self, x: f64) -> Complex64 {
        let n = self.periodic.len();
        let h = self.period / n as f64;
        let t = x.rem_euclid(self.period) / h;
        let e = (t.floor() as usize).min(n - 1);
        let xi = t - e as f64;
        let c = self.periodic[e] * (1.0 - xi) + self.periodic[(e + 1) % n] * xi;
        c * Complex64::from_polar(1.0, self.bloch * x)
    }
}

/// Rayleigh amplitudes and efficiencies of the propagating orders.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffractionResult {
    pub modes: Vec<i64>,
    pub amplitudes: Vec<Complex64>,
    pub efficiencies: Vec<f64>,
}

impl DiffractionResult {
    pub fn efficiency(&self, n: i64) -> Option<f64> {
        self.modes.iter().position(|&m| m == n).map(|i| self.efficiencies[i])
    }

    /// Sum of all efficiencies; one for a lossless grating.
    pub fn energy_balance(&self) -> f64 {
        self.efficiencies.iter().sum()
    }
}

/// A solved scattering problem: mesh, factorized system and density.
#[derive(Debug)]
pub struct Scattering {
    mesh: BoundaryMesh,
    table: Arc<KernelTable>,
    modes: ModeTable,
    wave: IncidentWave,
    lu: LuFactors,
    density: DVector<Complex64>,
    counters: Arc<Counters>,
}

impl Scattering {
    pub fn mesh(&self) -> &BoundaryMesh {
        &self.mesh
    }

    pub fn modes(&self) -> &ModeTable {
        &self.modes
    }

    pub fn wave(&self) -> &IncidentWave {
        &self.wave
    }

    pub fn table(&self) -> &KernelTable {
        &self.table
    }

    /// The `i k eta` factor in front of the single-layer operator.
    pub fn prefactor(&self) -> Complex64 {
        Complex64::new(0.0, self.wave.wavenumber * self.wave.impedance)
    }

    pub fn density(&self) -> SurfaceDensity {
        SurfaceDensity { periodic: self.density.clone(), bloch: self.modes.kx0(), period: self.modes.period() }
    }

    pub(crate) fn density_coefficients(&self) -> &DVector<Complex64> {
        &self.density
    }

    /// Solves `P c = rhs` with the stored factorization.
    pub fn solve_primal(&self, rhs: &DVector<Complex64>) -> DVector<Complex64> {
        self.counters.primal_solves.fetch_add(1, Ordering::Relaxed);
        self.lu.solve(rhs)
    }

    /// Solves `P^T c = rhs` with the stored factorization.
    pub fn solve_adjoint(&self, rhs: &DVector<Complex64>) -> DVector<Complex64> {
        self.counters.adjoint_solves.fetch_add(1, Ordering::Relaxed);
        self.lu.solve_transpose(rhs)
    }

    /// Normalization `k eta / (2 L ky_n)` of the far-field integral.
    pub fn far_field_constant(&self, n: i64) -> Result<Complex64> {
        if !self.modes.is_propagating(n) {
            return Err(Error::ModeNotPropagating(n));
        }
        let ky = self.modes.ky(n).re;
        Ok(Complex64::from(self.wave.wavenumber * self.wave.impedance / (2.0 * self.modes.period() * ky)))
    }

    /// Periodic part of `exp(-i K_n . r)` times `exp(i kx x)` at the quadrature points.
    pub fn mode_weights(&self, n: i64) -> Vec<Complex64> {
        let ky = self.modes.ky(n).re;
        let w = 2.0 * PI * n as f64 / self.modes.period();
        self.mesh.points().iter().map(|p| Complex64::from_polar(1.0, -w * p.x - ky * p.y)).collect()
    }

    /// Rayleigh amplitude `u_n = (k eta / 2 L ky_n) integral j exp(-i K_n . r) dGamma`.
    pub fn far_field(&self, n: i64) -> Result<Complex64> {
        let c = self.far_field_constant(n)?;
        let tr = assembly::trace(&self.mesh, &self.density);
        let g = self.mode_weights(n);
        let s: Complex64 = self.mesh.points().iter().zip(tr.iter().zip(&g)).map(|(p, (t, g))| t * g * p.weight).sum();
        Ok(c * s)
    }

    /// `ky_n / ky` times `|u_n|^2 / E0^2`.
    pub fn efficiency_from_amplitude(&self, n: i64, amplitude: Complex64) -> f64 {
        let ratio = self.modes.ky(n).re / self.wave.ky();
        ratio * amplitude.norm_sqr() / (self.wave.amplitude * self.wave.amplitude)
    }

    pub fn efficiency(&self, n: i64) -> Result<f64> {
        Ok(self.efficiency_from_amplitude(n, self.far_field(n)?))
    }

    pub fn diffraction(&self) -> DiffractionResult {
        let modes = self.modes.propagating().to_vec();
        let amplitudes: Vec<Complex64> =
            modes.iter().map(|&n| self.far_field(n).expect("propagating by construction")).collect();
        let efficiencies = modes.iter().zip(&amplitudes).map(|(&n, a)| self.efficiency_from_amplitude(n, *a)).collect();
        DiffractionResult { modes, amplitudes, efficiencies }
    }

    /// Matrix of the adjoint double-layer operator, see [`assembly::adjoint_double_layer`].
    pub fn normal_derivative_operator(&self) -> DMatrix<Complex64> {
        self.counters.assemblies.fetch_add(1, Ordering::Relaxed);
        assembly::adjoint_double_layer(&self.mesh, &self.table)
    }
}
