use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },

    #[error("sentence has {len} tokens; the maximum is {max}")]
    SentenceTooLong { len: usize, max: usize },

    #[error("empty sentence")]
    EmptySentence,

    #[error("line counts differ: {src_lines} source lines vs {tgt_lines} target lines")]
    Alignment { src_lines: usize, tgt_lines: usize },

    #[error("negative sampling needs at least two sentence pairs, got {0}")]
    Sampling(usize),

    #[error("noise pool holds {available} sentences but {needed} are needed")]
    InsufficientPool { needed: usize, available: usize },

    #[error("index {index} out of range for a table of {size} rows")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("loss is not finite")]
    NonFinite,

    #[error("training examples must contain both classes")]
    SingleClass,

    #[error("gold set is empty")]
    EmptyGold,

    #[error("{candidates} candidate sentences but {references} references")]
    LengthMismatch { candidates: usize, references: usize },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
