use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by problem construction, solvers, oracles and ingestion.
#[derive(Debug, Error)]
pub enum Error {
    #[error("marginal `{id}` has {found} points, expected {expected}")]
    MismatchedCounts {
        id: String,
        expected: usize,
        found: usize,
    },

    #[error("marginal `{id}` has dimension {found}, expected {expected}")]
    MismatchedDims {
        id: String,
        expected: usize,
        found: usize,
    },

    #[error("marginal `{id}` contains a non-finite value at flat index {index}")]
    NonFinite { id: String, index: usize },

    #[error("at least {required} marginals are required, got {found}")]
    TooFewMarginals { required: usize, found: usize },

    #[error("tuple points have inconsistent dimensions")]
    DimensionMismatch,

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("swap positions must differ (both {0})")]
    SamePosition(usize),

    #[error("at least 2 points are required to form a pair, got {0}")]
    TooFewPoints(usize),

    #[error("problem too large for {what}: {detail}")]
    TooLarge { what: &'static str, detail: String },

    #[error("Sinkhorn kernel vanished; regularization {lambda} is too small for the cost scale")]
    NumericalUnderflow { lambda: f64 },

    #[error("running cost {running} drifted from recomputed cost {fresh}")]
    CostDrift { running: f64, fresh: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("trace has only {0} usable points, at least 3 are needed")]
    DegenerateTrace(usize),

    #[error("unknown synthetic family `{0}`")]
    UnknownFamily(String),

    #[error("image has zero total intensity")]
    ZeroMassImage,

    #[error("{path}: line {line}: cannot parse `{cell}` as a number")]
    Parse {
        path: PathBuf,
        line: usize,
        cell: String,
    },

    #[error("{path}: line {line} has {found} columns, expected {expected}")]
    RaggedRows {
        path: PathBuf,
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("{0}: no data rows")]
    EmptyFile(PathBuf),

    #[error("not a PGM file (magic {0:?})")]
    BadMagic(String),

    #[error("PGM data truncated: {0}")]
    TruncatedData(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
