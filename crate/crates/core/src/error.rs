use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to open {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("column `{0}` is assigned to more than one role")]
    DuplicateColumn(String),

    #[error("row {row}, column `{column}`: {reason}")]
    BadCell {
        row: usize,
        column: String,
        reason: String,
    },

    #[error("invalid dataset: {0}")]
    InvalidData(String),

    #[error("continuous column `{0}` has zero sample variance; mark it discrete or remove it")]
    ZeroVariance(String),

    #[error("{what} requires n >= {min}, got n = {n}")]
    TooFewObservations {
        what: &'static str,
        min: usize,
        n: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("observation {index} has no neighbour within the estimation bandwidth; increase g or drop isolated observation")]
    IsolatedObservation { index: usize },

    #[error("test degenerate at this bandwidth: {0}")]
    Degenerate(String),

    #[error("LV requires continuous X (column {0} is discrete)")]
    DiscreteXForLv(usize),

    #[error("design matrix is rank deficient")]
    RankDeficient,

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
