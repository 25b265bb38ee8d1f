use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("singular tridiagonal system at row {row} (tau = {tau:e})")]
    SingularSystem { row: usize, tau: f64 },

    #[error("overflow in exponential sub-step at grid index {index}: tau*V = {exponent:e}")]
    Overflow { index: usize, exponent: f64 },

    #[error("evolution oracle did not reach tol {tol:e} on [{from}, {to}] within {max_steps} steps (estimate {estimate:e})")]
    ToleranceNotMet {
        from: f64,
        to: f64,
        tol: f64,
        estimate: f64,
        max_steps: usize,
    },

    #[error("matrix is not symmetric negative-definite: {0}")]
    NotNegativeDefinite(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("non-finite value produced: {0}")]
    NonFinite(String),

    #[error("step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at_step(step: usize) -> impl FnOnce(Error) -> Error {
        move |source| Error::Step {
            step,
            source: Box::new(source),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
