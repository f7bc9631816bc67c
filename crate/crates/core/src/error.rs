use thiserror::Error;

/// Errors raised by the library. Each variant names the stage that failed so
/// the CLI can report which family or equation was involved.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("pole: {0}")]
    Pole(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("no convergence: {0}")]
    Convergence(String),

    #[error("leading coefficient vanishes at z = {z}; degree dropped by {dropped}")]
    DegreeDrop { z: String, dropped: usize },

    #[error("branch ambiguity near z = {0}: roots collide along the continuation path")]
    BranchAmbiguity(String),

    #[error("support has more than one interval ({0} indicator sign changes on the scan grid)")]
    MultiInterval(usize),

    #[error("series ambiguity: {0}")]
    SeriesAmbiguity(String),

    #[error("quadrature did not reach tolerance {tol:e} (estimate {estimate:e})")]
    Quadrature { tol: f64, estimate: f64 },

    #[error("radial CDF: {0}")]
    NonMonotone(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("matrix is not Hermitian (max asymmetry {0:e})")]
    NotHermitian(f64),

    #[error("parse error at column {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn convergence(msg: impl Into<String>) -> Self {
        Error::Convergence(msg.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
