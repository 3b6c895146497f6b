use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Validation(String),

    #[error("signature error: {0}")]
    Signature(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepFailure { t: f64, h: f64 },

    #[error("state norm {norm:e} exceeded cap at t = {t}")]
    BlowUp { t: f64, norm: f64 },

    #[error("jacobian unavailable at {0:?}")]
    JacobianUnavailable(Vec<f64>),

    #[error("horizon too short: need {needed}, trajectory spans {available}")]
    HorizonTooShort { needed: f64, available: f64 },

    #[error("re-orthonormalization lost rank at t = {t}")]
    DegenerateFrame { t: f64 },

    #[error("spectral gap {gap} below minimum {min_gap}")]
    GapTooSmall { gap: f64, min_gap: f64 },

    #[error("sweep requested with zero points")]
    EmptySweep,

    #[error("unknown model `{0}`")]
    UnknownModel(String),
}

impl Error {
    /// True for failures of the numerical integration itself.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::StepFailure { .. } | Error::BlowUp { .. } | Error::DegenerateFrame { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}
