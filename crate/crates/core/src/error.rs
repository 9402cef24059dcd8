use thiserror::Error;

/// Errors raised by the barrier construction pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum BarrierError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("control set is empty at ({theta1}, {theta2}): g_tilde = {g_tilde:.3e}")]
    EmptyControlSet { theta1: f64, theta2: f64, g_tilde: f64 },

    #[error("multiplier requested on the active branch at sin(theta1) = 0 (theta1 = {theta1})")]
    SingularMultiplier { theta1: f64 },

    #[error("mirrored adjoint at ({theta1}, {theta2}) violates ultimate tangentiality: residual {residual:.3e}")]
    SymmetryValidationFailed { theta1: f64, theta2: f64, residual: f64 },

    #[error("tangency residual changes sign near theta1 = {theta1}")]
    SpuriousRootFound { theta1: f64 },

    #[error("integration step failed at t = {t}: step size {step:.3e} below minimum")]
    StepFailure { t: f64, step: f64 },

    #[error("adjoint vanished at t = {t}")]
    AdjointVanished { t: f64 },

    #[error("boundary chain gap of {gap:.3e} between curves {from} and {to}")]
    StitchGap { from: usize, to: usize, gap: f64 },

    #[error("query theta2 = {theta2} outside the model window |theta2| <= {limit}")]
    WindowExceeded { theta2: f64, limit: f64 },

    #[error("oracle disagreement at {count} grid points (first at ({theta1}, {theta2}))")]
    OracleDisagreement { count: usize, theta1: f64, theta2: f64 },
}

pub type Result<T> = std::result::Result<T, BarrierError>;
