use num_complex::Complex64;
use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("evaluation at z = {z} hits a pole of {what}")]
    Pole { z: Complex64, what: String },

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("parameter constraint violated: {0}")]
    Constraint(String),

    #[error("contour passes too close to a singularity: {0}")]
    ContourSingularity(String),

    #[error("quadrature did not converge: last delta {delta:.3e} after {nodes} nodes")]
    NoConvergence { delta: f64, nodes: usize },

    #[error("inner and outer contour radii collide: |{inner} - {outer}| too small")]
    RadiusCollision { inner: f64, outer: f64 },

    #[error("determinant nearly singular on the unit circle: min |det| = {min_abs:.3e}")]
    NearSingularCircle { min_abs: f64 },

    #[error("winding number residual {residual:.3e} exceeds integer guard")]
    NonIntegerWinding { residual: f64 },

    #[error("symbol is not admissible: winding number {winding} != p*M = {expected}")]
    NotAdmissible { winding: i64, expected: i64 },

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("query out of supported range: {0}")]
    QueryRange(String),

    #[error("enumeration budget exceeded: {0}")]
    Budget(String),

    #[error("invalid model parameters: {0}")]
    Model(String),

    #[error("serialization: {0}")]
    Serde(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
