//! Shared numerical tolerances.

/// Relative Hermiticity check, `max |M - M^†| <= HERMITIAN * max(1, max |M|)`.
pub const HERMITIAN: f64 = 1e-10;
/// Trace-one check for density matrices.
pub const TRACE: f64 = 1e-10;
/// Unit norm of pure-state amplitude vectors.
pub const NORM: f64 = 1e-12;
/// Orthogonality to the anchor product state.
pub const ORTHOGONAL: f64 = 1e-12;
/// Eigenvalues in `[-NEGATIVE_EIGENVALUE, 0)` are clipped to zero; anything
/// more negative is rejected.
pub const NEGATIVE_EIGENVALUE: f64 = 1e-10;
/// Eigenvalues below this are dropped from entropy sums (`0 ln 0 = 0`).
pub const ENTROPY_ZERO: f64 = 1e-14;
/// Relative gap below which two spectral points count as confluent.
pub const CONFLUENCE: f64 = 1e-9;
