use thiserror::Error;

/// Errors raised by the coherent-state engine and its oracles.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("shape mismatch: expected {expected} modes, got {found}")]
    ModeCount { expected: usize, found: usize },

    #[error("degenerate basis: no singular value above cutoff (largest {largest:e}, cutoff {cutoff:e})")]
    DegenerateBasis { largest: f64, cutoff: f64 },

    #[error("action derivative has imaginary residue {residue:e} for configuration {config}")]
    ComplexAction { config: usize, residue: f64 },

    #[error("norm guard tripped at t = {t}: norm {norm} vs initial {initial}")]
    NormGuard { t: f64, norm: f64, initial: f64 },

    #[error("adaptive step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("diagnostics: {0}")]
    Diagnostics(String),

    #[error("oracle refused: {0}")]
    OracleRefused(String),

    #[error("time series error: {0}")]
    Series(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}

pub(crate) fn check_modes(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::ModeCount { expected, found })
    }
}
