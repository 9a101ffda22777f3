use thiserror::Error;

/// Errors raised by the numerical pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Two jets (or a jet and a map jet) do not share order or base point.
    #[error("structural mismatch: {0}")]
    Structural(String),

    #[error("singular Jacobian (det = {det:e})")]
    SingularJacobian { det: f64 },

    #[error("map is not bi-Lipschitz on the disk (min det = {min_det:e}, injective = {injective})")]
    NotBiLipschitz { min_det: f64, injective: bool },

    #[error("degenerate boundary: zero tangent at sample {index}")]
    DegenerateBoundary { index: usize },

    /// Cholesky of the energy matrix failed.
    #[error("energy form is not coercive on the discrete space")]
    NotCoercive,

    #[error("cluster not separated: gap {gap:e} vs spread {spread:e}")]
    ClusterNotSeparated { gap: f64, spread: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True for errors caused by bad user input rather than numerical breakdown.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Unsupported(_) | Error::InvalidInput(_) | Error::Parse(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
