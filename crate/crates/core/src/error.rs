use thiserror::Error;

/// Errors raised by mesh, discretization, estimation and driver code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("lineage error: {0}")]
    Lineage(String),

    #[error("mesh error: {0}")]
    Mesh(String),

    #[error("linear solve failed after {iterations} iterations (relative residual {residual:e})")]
    Solve { iterations: usize, residual: f64 },

    #[error("local equilibration at vertex {vertex} is singular: {reason}")]
    Equilibration { vertex: usize, reason: String },

    #[error(
        "local equilibration at interior vertex {vertex} is inconsistent \
         (compatibility residual {residual:e}); the discrete solution is not a Galerkin solution"
    )]
    Consistency { vertex: usize, residual: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("adaptive run stopped at the level cap of {levels} without meeting the stopping rule")]
    Run {
        levels: usize,
        /// Records of the levels completed before the cap.
        records: Vec<crate::afem::ConvergenceRecord>,
    },

    #[error("usage: {0}")]
    Usage(String),

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
