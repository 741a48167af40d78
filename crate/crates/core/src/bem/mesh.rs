use std::f64::consts::PI;

use crate::profile::GratingProfile;
use crate::quadrature::GaussLegendre;

/// Mesh resolution controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshOptions {
    /// Elements per wavelength of arc length.
    pub per_wavelength: f64,
    pub min_elements: usize,
    /// Gauss points per element for regular integrals.
    pub quadrature_order: usize,
    /// Order of the rules used on singular and nearly singular pairs.
    pub singular_order: usize,
}

impl Default for MeshOptions {
    fn default() -> Self {
        Self { per_wavelength: 16.0, min_elements: 64, quadrature_order: 6, singular_order: 10 }
    }
}

impl MeshOptions {
    /// Element count for `profile` at wavenumber `k`.
    pub fn elements_for(&self, profile: &GratingProfile, k: f64) -> usize {
        let wavelengths = profile.arc_length() * k / (2.0 * PI);
        let n = (self.per_wavelength * wavelengths).ceil() as usize;
        n.max(self.min_elements).max(4)
    }
}

/// Geometry sampled at one quadrature point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadPoint {
    pub x: f64,
    pub y: f64,
    pub dy: f64,
    pub ddy: f64,
    /// `sqrt(1 + y'^2)`.
    pub jac: f64,
    /// Parameter weight times `jac`, so that sums approximate `integral dGamma`.
    pub weight: f64,
    pub element: usize,
    /// Local coordinate in `[0, 1]`.
    pub xi: f64,
}

/// Uniform partition of one period into linear elements on the exact curve.
///
/// Node `i` sits at `x_i = i L / E`; element `e` joins nodes `e` and `(e + 1) mod E`.
#[derive(Debug, Clone)]
pub struct BoundaryMesh {
    profile: GratingProfile,
    elements: usize,
    options: MeshOptions,
    points: Vec<QuadPoint>,
}

impl BoundaryMesh {
    pub fn new(profile: &GratingProfile, elements: usize, options: MeshOptions) -> Self {
        assert!(elements >= 3, "need at least three elements");
        let rule = GaussLegendre::new(options.quadrature_order);
        let h = profile.period() / elements as f64;
        let mut points = Vec::with_capacity(elements * rule.len());
        for e in 0..elements {
            for (xi, w) in rule.nodes().iter().zip(rule.weights()) {
                let x = (e as f64 + xi) * h;
                let p = profile.eval(x);
                let jac = p.jacobian();
                points.push(QuadPoint {
                    x,
                    y: p.y,
                    dy: p.dy,
                    ddy: p.ddy,
                    jac,
                    weight: h * w * jac,
                    element: e,
                    xi: *xi,
                });
            }
        }
        Self { profile: profile.clone(), elements, options, points }
    }

    /// Mesh with the default element count for wavenumber `k`.
    pub fn for_wavenumber(profile: &GratingProfile, k: f64, options: MeshOptions) -> Self {
        Self::new(profile, options.elements_for(profile, k), options)
    }

    pub fn profile(&self) -> &GratingProfile {
        &self.profile
    }

    pub fn elements(&self) -> usize {
        self.elements
    }

    /// Number of unknowns, equal to the element count on a closed period.
    pub fn nodes(&self) -> usize {
        self.elements
    }

    pub fn options(&self) -> &MeshOptions {
        &self.options
    }

    pub fn element_length(&self) -> f64 {
        self.profile.period() / self.elements as f64
    }

    pub fn node_x(&self, i: usize) -> f64 {
        i as f64 * self.element_length()
    }

    pub fn points(&self) -> &[QuadPoint] {
        &self.points
    }

    pub fn points_per_element(&self) -> usize {
        self.options.quadrature_order
    }

    /// Node indices of element `e`.
    pub fn element_nodes(&self, e: usize) -> [usize; 2] {
        [e, (e + 1) % self.elements]
    }

    /// Sum of the quadrature weights, i.e. the arc length.
    pub fn length(&self) -> f64 {
        self.points.iter().map(|p| p.weight).sum()
    }
}
