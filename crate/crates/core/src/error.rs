use thiserror::Error;

/// Errors raised by the reconstruction toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("point {point} does not belong to space `{space}`")]
    PointMismatch { space: String, point: String },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("precondition not certified: {0}")]
    Precondition(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("grid of {cells} cells exceeds the cap of {cap}; try mesh >= {suggested_mesh:.3e}")]
    GridTooLarge {
        cells: usize,
        cap: usize,
        suggested_mesh: f64,
    },

    #[error("degenerate fit window for epsilon {epsilon}: {usable} usable n-values, need at least 3")]
    DegenerateFit { epsilon: f64, usable: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

pub(crate) fn require_positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, format!("must be a positive finite number, got {value}")))
    }
}
