use std::path::PathBuf;

use chrono::NaiveDate;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("series is constant (zero variance)")]
    ConstantSeries,

    #[error("first differences of a series are all zero")]
    FlatDifferences,

    #[error("series is empty")]
    EmptySeries,

    #[error("series too short: length {len}, need at least {min}")]
    TooShort { len: usize, min: usize },

    #[error("non-finite value at position {index}")]
    NonFinite { index: usize },

    #[error("negative observation {value} at position {index}")]
    NegativeValue { index: usize, value: f64 },

    #[error("length {len} is not divisible into {segments} segments")]
    NonDivisibleLength { len: usize, segments: usize },

    #[error("series is not z-normalized (mean {mean:.3e}, sd {sd:.6})")]
    NotNormalized { mean: f64, sd: f64 },

    #[error("configuration mismatch: {0}")]
    ConfigMismatch(String),

    #[error("bad length {len} for a {level}-level Haar transform")]
    BadLength { len: usize, level: usize },

    #[error("length {len} is not a whole number of weeks")]
    PartialWeek { len: usize },

    #[error("invalid dissimilarity matrix: {0}")]
    InvalidMatrix(String),

    #[error("invalid cluster count {k} for {n} items")]
    BadK { k: usize, n: usize },

    #[error("index requires at least two clusters")]
    SingleCluster,

    #[error("degenerate matrix: {0}")]
    DegenerateMatrix(&'static str),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("invalid series set: {0}")]
    InvalidSeriesSet(String),

    #[error("no subject satisfies the cohort filters")]
    EmptyCohort,

    #[error("missing attributes for subjects: {}", .0.join(", "))]
    MissingAttributes(Vec<String>),

    #[error("duplicate record for subject {subject} on {date}")]
    DuplicateRecord { subject: String, date: NaiveDate },

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid benchmark specification: {0}")]
    BadSpec(String),

    #[error("pair ({i}, {j}): {source}")]
    Pair {
        i: usize,
        j: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("cannot access {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: u64, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
