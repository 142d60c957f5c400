use thiserror::Error;

/// Errors raised by the simulation, estimation and fitting routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QfiError {
    #[error("invalid input: {0}")]
    Validation(String),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("time step {dt} us exceeds the limit {limit} us for bandwidth {bandwidth} rad/us")]
    TimeStepTooCoarse { dt: f64, limit: f64, bandwidth: f64 },

    #[error("branch discontinuity near beta = {beta}: neighbour overlap {overlap:.4} is below threshold")]
    BranchDiscontinuity { beta: f64, overlap: f64 },

    #[error(
        "sensitivity diverges: signal slope vanishes (sin(beta) * sin(theta) = {slope_factor:e})"
    )]
    DivergentSensitivity { slope_factor: f64 },

    #[error("ground state is degenerate at beta = {beta}: gap {gap:e} rad/us")]
    DegenerateGround { beta: f64, gap: f64 },

    #[error("fit did not converge: initial frequency guess {initial_guess} rad/us, rms residual {residual}")]
    FitFailed { initial_guess: f64, residual: f64 },

    #[error("transitions {first} and {second} are not separately addressable")]
    Unaddressable { first: usize, second: usize },

    #[error("transition to eigenstate {index} is dark (matrix element {element:e})")]
    DarkTransition { index: usize, element: f64 },

    #[error("estimated slope {chi:e} is too small for a usable working point")]
    ZeroSlope { chi: f64 },
}

pub type Result<T> = std::result::Result<T, QfiError>;

pub(crate) fn invalid(msg: impl Into<String>) -> QfiError {
    QfiError::Validation(msg.into())
}
