use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("{what} index {index} out of range (len {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },
    #[error("size mismatch: {0}")]
    SizeMismatch(String),
    #[error("unsupported quadrature degree {0} (supported: 1, 2, 4)")]
    UnsupportedQuadrature(usize),
    #[error("unsupported target dimension {0}")]
    UnsupportedDimension(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("newton did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("linear solve failed: {0}")]
    LinearSolveFailure(String),
    #[error("step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("time {t} outside [0, {t_max}]")]
    TimeOutOfRange { t: f64, t_max: f64 },
    #[error("image is {width}x{height}, need at least 2x2")]
    ImageTooSmall { width: usize, height: usize },
    #[error("malformed PPM: {0}")]
    Ppm(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    /// True when the error (possibly wrapped in a step error) is a solver failure.
    pub fn is_solver_failure(&self) -> bool {
        match self {
            Error::NonConvergence { .. } | Error::LinearSolveFailure(_) => true,
            Error::Step { source, .. } => source.is_solver_failure(),
            _ => false,
        }
    }
}
