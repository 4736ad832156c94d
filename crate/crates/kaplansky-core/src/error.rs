use thiserror::Error;

/// Errors produced by bundle construction and decomposition routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{what}: expected length {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("non-finite entry in {what}")]
    NonFinite { what: &'static str },
    #[error("invalid measure space: {0}")]
    InvalidMeasureSpace(&'static str),
    #[error("invalid grid: {0}")]
    InvalidGrid(&'static str),
    #[error("invalid partition of unity: {0}")]
    InvalidPartition(&'static str),
    #[error("invalid input: {0}")]
    InvalidInput(&'static str),
    #[error("operator is not self-adjoint: fiber {atom} has residual {residual:.3e}")]
    NotSelfAdjoint { atom: usize, residual: f64 },
    #[error("operator is not positive: fiber {atom} has eigenvalue {eigenvalue:.3e}")]
    NotPositive { atom: usize, eigenvalue: f64 },
    #[error("step function is not real: atom {atom} has imaginary part {imag:.3e}")]
    NotReal { atom: usize, imag: f64 },
    #[error("matrix field is not a projection: fiber {atom} has residual {residual:.3e}")]
    NotProjection { atom: usize, residual: f64 },
    #[error("malformed signed sequences: {0}")]
    MalformedSequence(&'static str),
    #[error("equation is not solvable: smallest branch gap {min_gap:.3e}")]
    NotSolvable { min_gap: f64 },
    #[error("residual {residual:.3e} exceeds bound {bound:.3e}; tolerances are inconsistent")]
    ResidualBound { residual: f64, bound: f64 },
    #[error("iteration failed to converge in {what}")]
    NoConvergence { what: &'static str },
}

pub type Result<T> = core::result::Result<T, Error>;
