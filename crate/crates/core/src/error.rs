use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("sine and cosine coefficient arrays differ in length ({sin} vs {cos})")]
    ShapeMismatch { sin: usize, cos: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("Rayleigh anomaly: mode {mode} is within tolerance of grazing")]
    Anomaly { mode: i64 },

    #[error("Green's function evaluated at a lattice image of the source")]
    EvaluationAtSource,

    #[error("mode {0} is not a propagating order")]
    ModeNotPropagating(i64),

    #[error("boundary system is numerically singular (pivot {pivot:.3e}, matrix norm {norm:.3e})")]
    SingularSystem { pivot: f64, norm: f64 },

    #[error("line search failed after {backtracks} trial steps")]
    LineSearchFailure { backtracks: usize },

    #[error("search direction is not a descent direction")]
    InvalidDirection,

    #[error("symmetric eigendecomposition did not converge")]
    EigenFailure,

    #[error("not enough admissible iterates to estimate a rate")]
    InsufficientIterates,

    #[error("profile is not admissible: peak-to-peak {height:.4} exceeds {limit:.4}")]
    Inadmissible { height: f64, limit: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
