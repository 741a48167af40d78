//! Scattering of TE-polarized plane waves by perfectly conducting periodic
//! gratings, shape derivatives of diffraction efficiencies, and descent
//! methods that use them.


pub mod bem;
pub mod error;
pub mod optim;

pub mod profile;
pub mod qpgreens;
pub mod quadrature;
pub mod shapegrad;

pub(crate) mod special;

pub use error::{Error, Result};
pub use profile::GratingProfile;
pub use qpgreens::{IncidentWave, ModeTable};
