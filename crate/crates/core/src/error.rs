use thiserror::Error;

/// Errors raised by the core library.
///
/// Non-convergence of the solver and failed certificates are *not* errors;
/// they are reported through the run report and the certificate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("cell ({i}, {j}) is outside the {nx}x{ny} grid")]
    CellOutOfRange { i: isize, j: isize, nx: usize, ny: usize },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid usage: {0}")]
    Usage(String),

    #[error("enumeration budget exceeded: {0}")]
    Budget(String),
}

pub type Result<T> = std::result::Result<T, Error>;
