//! Error type shared by every module of the crate.

use thiserror::Error;

/// Crate-wide error enum.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(u8, u8),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A depth norm was requested for a profile term decaying slower than the
    /// weight; the integral is genuinely infinite.
    #[error("decay rate mu = {mu} does not exceed the depth weight a = {a}; norm is infinite")]
    MuTooSmall { mu: f64, a: f64 },

    /// `T_0` applied to a term with zero decay rate.
    #[error("divergent integral: antiderivative of a non-decaying term at rate lambda = 0")]
    DivergentIntegral,

    #[error(
        "constant source component {0} is nonzero; the Poisson problem has no decaying solution"
    )]
    NonzeroConstantSource(f64),

    #[error("profile at mode {mode:?} holds {count} terms, exceeding the cap {cap}")]
    TermCapExceeded {
        mode: Vec<i32>,
        count: usize,
        cap: usize,
    },

    /// The flattening change of variables fails to be a diffeomorphism.
    #[error("surface too steep: sup |(|D| eta)(x)| = {sup:.6} >= guard {guard:.6}")]
    GuardViolation { sup: f64, guard: f64 },

    #[error("series truncation failed: term norms non-decreasing over {0} consecutive terms")]
    SeriesDivergence(u32),

    #[error(
        "fixed-point iteration does not contract (last ratio {ratio:.3e} after {iterations} iterations)"
    )]
    NoContraction { ratio: f64, iterations: u32 },

    #[error("right-hand side violates the mode-{k} solvability condition by {defect:.3e}")]
    NotInRange { k: u32, defect: f64 },

    #[error("Newton iteration diverged: residual {residual:.3e} after {iterations} steps")]
    NewtonDivergence { residual: f64, iterations: u32 },

    #[error("too few usable modes for a decay fit: {0} (need at least 6)")]
    TooFewModes(usize),

    #[error("output parity violated: {0}")]
    SymmetryViolation(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
