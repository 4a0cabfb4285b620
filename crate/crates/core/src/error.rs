use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An enumeration or table would exceed its configured size cap.
    #[error("resource cap exceeded: {what} needs {needed}, cap is {cap}")]
    Resource { what: String, needed: u64, cap: u64 },

    /// A numerical procedure failed to reach its tolerance.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// The requested spectral parameter coincides with a square-root eigenvalue.
    #[error("lambda = {lambda} is within {tol:e} of the eigenvalue root {level}; shift lambda off the spectrum")]
    OnSpectrum { lambda: f64, level: f64, tol: f64 },

    /// The inverse exponential map is undefined or not unique.
    #[error(
        "distance {distance} is not below the injectivity radius {inj}; minimizing representatives: {representatives:?}"
    )]
    CutLocus {
        distance: f64,
        inj: f64,
        representatives: Vec<Vec<f64>>,
    },

    /// The operation is not available for this manifold or derivative order.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A precondition on experiment parameters was violated.
    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
