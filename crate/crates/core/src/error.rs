use thiserror::Error;

/// Errors raised by oracles, solvers and generators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite value encountered in {0}")]
    NonFiniteValue(&'static str),

    #[error("oracle error: {0}")]
    Oracle(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("singular system (relative residual {residual:.3e})")]
    SingularSystem { residual: f64 },

    #[error("no descent direction up to rho_max = {rho_max}")]
    DirectionFailure { rho_max: f64 },

    #[error("line search failed: step fell below {tau_floor:e} after {backtracks} backtracks")]
    LinesearchFailure { tau_floor: f64, backtracks: usize },

    #[error("proximal mapping undefined: {0}")]
    ProxUndefined(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("subproblem failure: {0}")]
    SubproblemFailure(String),

    #[error("unknown fixture `{0}`")]
    UnknownFixture(String),

    #[error("insufficient data: {usable} usable error values, need at least 4")]
    InsufficientData { usable: usize },

    #[error("key mismatch: {0}")]
    KeyMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
