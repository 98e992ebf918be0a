use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error(
        "quadrature did not converge on [{lo:e}, {hi:e}]: estimate {estimate:e}, error {error:e}"
    )]
    QuadratureNonConvergence {
        lo: f64,
        hi: f64,
        estimate: f64,
        error: f64,
    },

    #[error("matrix is not Hermitian (max |K - K^H| = {max_asymmetry:e})")]
    NonHermitian { max_asymmetry: f64 },

    #[error("sample grids do not match")]
    GridMismatch,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error(
        "unstable flow graph: spectral radius {spectral_radius:.6} >= 1, resonant loop through [{}]",
        loop_nodes.join(" -> ")
    )]
    UnstableGraph {
        spectral_radius: f64,
        loop_nodes: Vec<String>,
    },

    #[error("linear system is singular")]
    Singular,

    #[error("too few samples: {got} (need at least {min})")]
    InsufficientSamples { got: u64, min: u64 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}

/// Rejects NaN/inf and values not strictly positive.
pub(crate) fn require_positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::invalid(name, format!("must be finite and > 0, got {value}")))
    }
}

pub(crate) fn require_non_negative(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(Error::invalid(name, format!("must be finite and >= 0, got {value}")))
    }
}
