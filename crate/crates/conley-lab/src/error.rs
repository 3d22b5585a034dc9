use thiserror::Error;

/// Errors raised across the library.
///
/// `exit_code` maps each variant onto the CLI contract: configuration problems
/// are 2, numerical failures are 3.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("invalid frame: {0}")]
    InvalidFrame(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("degenerate endpoint: min |eig - 1| = {min_distance:.3e}")]
    Degenerate { min_distance: f64 },

    #[error("stiffness: Newton failed at t = {t} after {iterations} iterations (residual {residual:.3e})")]
    Stiffness { t: f64, iterations: usize, residual: f64 },

    #[error("solvability error: {0}")]
    Solvability(String),

    #[error("input is not symplectic: residual {residual:.3e}")]
    NonSymplectic { residual: f64 },

    #[error("domain too large; shrink radius to about {suggested:.3e}")]
    ShrinkRadius { suggested: f64 },

    #[error("isolation error: {detail}")]
    Isolation { detail: String, s: Option<f64> },

    #[error("contractibility error: {0}")]
    Contractibility(String),

    #[error("infeasible profile: {0}")]
    Infeasible(String),

    #[error("parse error at {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) | Error::Parse { .. } | Error::Infeasible(_) => 2,
            Error::Io(_) => 74,
            _ => 3,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
