use thiserror::Error;

/// Errors raised by the estimation core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum NavError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The rotation is too close to a half turn for the logarithm to pick a
    /// unique axis.
    #[error("rotation angle {angle} rad is too close to pi for a unique logarithm")]
    NearSingularity { angle: f64 },

    #[error("innovation covariance is singular (condition number {condition:.3e})")]
    SingularInnovation { condition: f64 },

    #[error("regressor matrix is degenerate (condition number {condition:.3e})")]
    DegenerateRegressor { condition: f64 },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("event stream is not time-ordered at index {index} (t = {t}, previous t = {previous})")]
    UnorderedStream { index: usize, t: f64, previous: f64 },

    #[error("measurement at t = {t} is older than the filter time {filter_time}")]
    StaleMeasurement { t: f64, filter_time: f64 },
}

pub type Result<T, E = NavError> = std::result::Result<T, E>;

pub(crate) fn ensure_finite(values: &[f64], what: &str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(NavError::InvalidArgument(format!("{what} contains non-finite values")))
    }
}
