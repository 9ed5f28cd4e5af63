//! Unsupervised outlier filtering with the sliced-Wasserstein distance.
//!
//! The central idea: a sample is suspicious when removing it changes the
//! empirical distribution a lot. For each candidate `z_i` we compare the
//! leave-one-out distribution `D \ {z_i}` against `D \ {z_j}` for a handful
//! of randomly drawn comparators `z_j`, using the sliced-Wasserstein
//! distance as the pair statistic. Votes above a distance threshold are
//! tallied; candidates whose positive-vote fraction reaches `p` are flagged.
//!
//! The crate provides:
//!
//! - [`sw`] — exact 1D order-`t` Wasserstein distance between equal-size
//!   uniform empirical distributions and its Monte-Carlo sliced extension;
//! - [`filter`] — the voting filter itself (`swad`), a fast Euclidean
//!   approximation (`fead`), and a chunked variant for larger datasets;
//! - [`baseline`] — LOF and kNN-distance reference detectors;
//! - [`eval`] — confusion-count metrics and a grid-search harness;
//! - [`data`] — dataset container, CSV ingestion, standardization,
//!   synthetic generators, and a schema validator for the LCPR
//!   consumption-data layout.
//!
//! All randomized operations are seeded and bit-reproducible; the filter
//! output is independent of the number of worker threads.

use thiserror::Error;

pub mod baseline;
pub mod data;
pub mod eval;
pub mod filter;
pub mod sw;

/// Error variants shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Vector/matrix dimensions disagree.
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    /// Two sequences that must have equal length do not.
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    /// A projection direction is not on the unit sphere.
    #[error("direction is not unit length (norm = {norm})")]
    NotUnitLength { norm: f64 },

    /// An input that must be non-empty is empty.
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    /// A parameter is outside its valid range.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// The dataset is too small for the requested operation.
    #[error("too few samples: need at least {needed}, got {actual}")]
    TooFewSamples { needed: usize, actual: usize },

    /// A NaN or infinity was found in the data.
    #[error("non-finite value in row {row}")]
    NonFiniteValue { row: usize },

    /// A pair operation was called with the same index twice.
    #[error("candidate and comparator indices are both {index}")]
    IdenticalIndices { index: usize },

    /// An index is outside the dataset.
    #[error("sample index {index} out of range for {len} samples")]
    IndexOutOfRange { index: usize, len: usize },

    /// A statistic is undefined on constant input.
    #[error("constant input: {0}")]
    ConstantInput(&'static str),

    /// A covariance matrix is not symmetric positive semi-definite.
    #[error("covariance matrix of group {group} is not symmetric positive semi-definite")]
    NotPositiveSemiDefinite { group: usize },

    /// Ground-truth labels are required but absent.
    #[error("dataset has no ground-truth labels")]
    MissingLabels,

    /// The named label column does not exist.
    #[error("unknown label column `{0}`")]
    UnknownLabelColumn(String),

    /// Required columns are missing from the input file.
    #[error("missing required columns: {}", .0.join(", "))]
    MissingColumns(Vec<String>),

    /// A CSV row has the wrong number of fields.
    #[error("non-rectangular csv: row {row} has {actual} fields, expected {expected}")]
    NonRectangularCsv { row: usize, expected: usize, actual: usize },

    /// Every row of the input was dropped or the file was empty.
    #[error("no usable rows in input")]
    NoUsableRows,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
