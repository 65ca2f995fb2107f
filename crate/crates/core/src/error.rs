use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("shift not commensurate with the grid: {0}")]
    IncommensurateShift(String),
    #[error("potential has a non-zero imaginary part (max |Im V| = {0:e})")]
    NonRealPotential(f64),
    #[error("hamiltonian symbol is not real (max |Im H| = {0:e})")]
    NonRealHamiltonian(f64),
    #[error("not a density matrix: {0}")]
    NotDensityMatrix(String),
    #[error("exponent p = {0} is not an integer")]
    UnsupportedExponent(f64),
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
