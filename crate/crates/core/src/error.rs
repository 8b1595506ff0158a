use thiserror::Error;

/// Errors raised by the model, the allocator and the residual generators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("generalized mass matrix is singular or ill-conditioned (condition estimate {0:e})")]
    SingularMassMatrix(f64),

    #[error("negative lift requested: {0} N")]
    NegativeLift(f64),

    #[error("QP solver reached the iteration limit ({0})")]
    MaxIterations(usize),

    #[error("residual window not full: {have} of {need} samples")]
    WindowNotFull { have: usize, need: usize },

    #[error("pulsation {pulsation} rad/s is not below the Nyquist pulsation {nyquist} rad/s")]
    AboveNyquist { pulsation: f64, nyquist: f64 },

    #[error("simulation diverged: {0}")]
    SimDiverged(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
