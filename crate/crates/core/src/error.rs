use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the library can report.
///
/// Numerical failures (focal data, singular covariance, chart domain) are
/// distinguished from input and I/O failures so the CLI can map them onto
/// separate exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The smallest eigenvalue of an axial block is not simple, so the
    /// farthest projection (and hence the antimean) is undefined.
    #[error("focal point in block {block}: smallest-eigenvalue gap {gap:.3e} <= tolerance {tolerance:.3e}")]
    FocalPoint { block: usize, gap: f64, tolerance: f64 },

    #[error("outside the log-chart domain: {0}")]
    ChartDomain(String),

    #[error("shape mismatch: expected {expected} components, found {found}")]
    ShapeMismatch { expected: usize, found: usize },

    #[error("singular covariance: eigenvalues span [{min:.3e}, {max:.3e}]")]
    SingularCovariance { min: f64, max: f64 },

    #[error("degenerate projective frame: {0}")]
    FrameDegenerate(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("all {attempted} bootstrap resamples failed (last error: {last})")]
    BootstrapDegenerate { attempted: usize, last: String },

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures caused by the data's geometry or statistics rather
    /// than by malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::FocalPoint { .. }
                | Error::ChartDomain(_)
                | Error::SingularCovariance { .. }
                | Error::BootstrapDegenerate { .. }
                | Error::NoConvergence(_)
        )
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
