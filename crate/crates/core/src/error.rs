//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by validation, file I/O and the analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Input matrix is not square.
    #[error("matrix is not square: {rows} rows, row {row} has {cols} columns")]
    NonSquare { rows: usize, row: usize, cols: usize },

    /// Symmetry violated beyond the validation tolerance.
    #[error("matrix asymmetric at ({i},{j}): {a} vs {b} (tolerance {tol:e})")]
    Asymmetric { i: usize, j: usize, a: f64, b: f64, tol: f64 },

    /// NaN or infinite entry.
    #[error("non-finite entry at ({i},{j})")]
    NonFinite { i: usize, j: usize },

    /// Entry outside [-1, 1] where a correlation range is required.
    #[error("entry at ({i},{j}) = {value} outside [-1, 1]")]
    OutOfRange { i: usize, j: usize, value: f64 },

    /// Dimension does not match the expected one.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Dimension below the smallest supported one.
    #[error("dimension {got} unsupported: requires D >= {min}")]
    DimensionTooSmall { got: usize, min: usize },

    /// Mapping is not a bijection on {0..D-1}.
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    /// Two ensemble members share a label.
    #[error("duplicate day label {0:?}")]
    DuplicateLabel(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// Malformed ensemble/tick/config file.
    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },

    /// Structurally invalid file contents (bad schema, inconsistent dims, ...).
    #[error("invalid file {path}: {msg}")]
    Format { path: String, msg: String },

    /// Model parameters violate their constraints (e.g. non-positive coupling).
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    /// Unknown observable id in a selection.
    #[error("unknown observable id {0:?}")]
    UnknownObservable(String),

    /// Moment engine asked for a graph of higher degree than it supports.
    #[error("observable degree {got} unsupported: maximum {max}")]
    UnsupportedDegree { got: usize, max: usize },

    /// Observable has no hard-coded analytic expectation.
    #[error("no analytic expectation transcribed for observable {0}")]
    NoAnalyticForm(String),

    /// Exact moment computation would enumerate more terms than allowed.
    #[error("cost budget exceeded: {required} set partitions needed, budget {budget}")]
    CostBudgetExceeded { required: u128, budget: u64 },

    /// Not enough (or degenerate) data for the requested statistic.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// A sample covariance failed its positive-semidefiniteness check.
    #[error("covariance not positive semidefinite: {0}")]
    NotPositiveSemidefinite(String),

    /// Brute-force evaluation refused: index space too large.
    #[error("brute-force evaluation too large: {0}")]
    BruteForceTooLarge(String),

    /// Zero-variance return series under the erroring policy.
    #[error("zero-variance return series for pair {0}")]
    ZeroVariance(usize),

    /// Operation argument outside its documented domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A referenced day label is not present in the ensemble.
    #[error("label {0:?} not present in the ensemble")]
    MissingLabel(String),
}

pub type Result<T> = std::result::Result<T, Error>;
