use thiserror::Error;

use crate::tt::TtVector;

pub type Result<T, E = NteError> = std::result::Result<T, E>;

/// Details attached to an iterative method that ran out of iterations.
#[derive(Debug, Clone)]
pub struct NotConverged {
    pub what: String,
    pub iterations: usize,
    pub residual: f64,
    pub history: Vec<f64>,
    /// Best iterate seen so far, for solvers working in TT format.
    pub best: Option<TtVector>,
}

#[derive(Error, Debug)]
pub enum NteError {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("capacity exceeded: {unknowns} unknowns exceeds the cap of {cap}")]
    Capacity { unknowns: usize, cap: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("problem has no fission source")]
    NoFission,

    #[error("{} did not converge after {} iterations (residual {:.3e})", .0.what, .0.iterations, .0.residual)]
    NotConverged(Box<NotConverged>),

    #[error("secant stagnation: {0}")]
    Stagnation(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<NteError>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl NteError {
    pub fn not_converged(what: impl Into<String>, iterations: usize, residual: f64, history: Vec<f64>) -> Self {
        NteError::NotConverged(Box::new(NotConverged {
            what: what.into(),
            iterations,
            residual,
            history,
            best: None,
        }))
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        NteError::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// The innermost error, skipping context wrappers.
    pub fn root(&self) -> &NteError {
        match self {
            NteError::Context { source, .. } => source.root(),
            other => other,
        }
    }
}

pub(crate) fn shape_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(NteError::Shape(msg.into()))
}
