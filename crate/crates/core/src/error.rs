use thiserror::Error;

use crate::regen::RenewalSummary;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("size mismatch: {left} vs {right}")]
    SizeMismatch { left: usize, right: usize },

    #[error("stage {stage}: inversion table entry {value} exceeds the bound {bound}")]
    StageOutOfRange { stage: usize, value: u64, bound: u64 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("dataset contains no observations")]
    EmptyDataset,

    #[error("stream cap of {cap} positions exceeded")]
    StreamCap {
        cap: usize,
        /// Components completed before the cap was hit, when the caller was
        /// accumulating a renewal summary.
        partial: Option<Box<RenewalSummary>>,
    },
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }
}
