use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: max |M - M^†| = {deviation:.3e} exceeds {tolerance:.1e}")]
    NotHermitian { deviation: f64, tolerance: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("index {index} out of range (must be < {bound})")]
    OutOfRange { index: usize, bound: usize },

    #[error("vector is not orthogonal to |0...0>: overlap {overlap:.3e}")]
    NotOrthogonal { overlap: f64 },

    #[error("singular density matrix: smallest eigenvalue {min_eigenvalue:.3e}")]
    Singular { min_eigenvalue: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),
}
