//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A matrix that was required to be square is not.
    #[error("matrix is not square: {rows}x{cols}")]
    NonSquareMatrix { rows: usize, cols: usize },

    /// A state and an operator live on mode spaces of different dimension.
    #[error("dimension mismatch: state has {state} modes, operator has {operator}")]
    DimensionMismatch { state: usize, operator: usize },

    /// A matrix fails the unitarity check `U†U = I`.
    #[error("matrix is not unitary (max deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    /// Detector groups in a projection pattern share a mode.
    #[error("detection pattern groups overlap on mode index {mode}")]
    OverlappingGroups { mode: usize },

    /// A reduction was requested over spatial modes that do not hold exactly
    /// one photon per term.
    #[error("expected exactly one photon in each requested spatial mode, found {found} in one term")]
    PhotonCount { found: u32 },

    /// A configuration or argument value is outside its validated range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Tomography was asked to reconstruct from all-zero counts.
    #[error("cannot reconstruct a state from all-zero counts")]
    EmptyCounts,

    /// A count-table file failed to parse.
    #[error("count table parse error at line {line}: {message}")]
    CountTable { line: usize, message: String },

    /// An estimator inside a Monte-Carlo loop failed on a resampled input.
    #[error("estimator failed: {0}")]
    Estimator(String),

    /// Underlying I/O failure.
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
