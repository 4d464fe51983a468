use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid subproblem input: {0}")]
    InvalidInput(String),

    #[error("sweep exhausted all {events} events without passing the KKT check")]
    DegenerateNoHalt { events: usize },

    #[error("no (n_free, n_upper) candidate satisfies the KKT conditions")]
    NoKktCandidate,

    #[error("projected descent did not converge within {0} sweeps")]
    IterationCapExceeded(usize),

    #[error("instance {0} has zero norm")]
    ZeroNormInstance(usize),

    #[error("dataset has no instances")]
    EmptyDataset,

    #[error("dataset has fewer than two classes")]
    SingleClassDataset,

    #[error("input contains no instances")]
    EmptyInput,

    #[error("line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },

    #[error("unsupported model format: {0:?}")]
    FormatVersionMismatch(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("model line {line}: {reason}")]
    ParseError { line: usize, reason: String },

    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}
