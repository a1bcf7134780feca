use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("topology error: {0}")]
    Topology(String),

    #[error("solver failure: {reason} (relative residual {residual:.3e} after {iterations} iterations)")]
    SolverFailure {
        reason: String,
        residual: f64,
        iterations: usize,
    },

    #[error("parametric point ({0:.6}, {1:.6}) is outside the domain")]
    OutOfDomain(f64, f64),

    #[error("invalid curvature: radius {radius} mm is not larger than half the chord deviation {half_chord} mm")]
    InvalidCurvature { radius: f64, half_chord: f64 },

    #[error("gouging: concave radius {radius} mm does not exceed cutter radius {cutter} mm")]
    Gouging { radius: f64, cutter: f64 },

    #[error("cloud too sparse: {0}")]
    TooSparse(String),

    #[error("planning failed on path {path}: {source}")]
    Planning {
        path: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn at_path(self, path: usize) -> Self {
        match self {
            e @ Error::Planning { .. } => e,
            e => Error::Planning {
                path,
                source: Box::new(e),
            },
        }
    }

    /// The innermost error, looking through planning context.
    pub fn root(&self) -> &Error {
        match self {
            Error::Planning { source, .. } => source.root(),
            e => e,
        }
    }
}
