//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error: {0}")]
    Schema(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("unknown column: {0}")]
    UnknownColumn(String),

    #[error("unknown SCM `{0}` (run with --help for the built-in catalog)")]
    UnknownScm(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("no local data near x={x}, w={w:?}: total kernel weight is zero (try a larger bandwidth)")]
    NoLocalData { x: f64, w: Vec<f64> },

    #[error("bandwidth selection failed: every candidate had zero kernel weight for all held-out rows")]
    BandwidthSelectionFailed,

    #[error("bootstrap failed: all {0} replicates errored")]
    BootstrapFailed(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
