use std::path::PathBuf;

use thiserror::Error;

use crate::index::PageId;
use crate::model::ObjectId;

/// Errors produced by the model, index and query layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("duplicate object id {0}")]
    DuplicateId(ObjectId),

    #[error("page size {page_size} is too small, need at least {required} bytes")]
    PageTooSmall { page_size: usize, required: usize },

    #[error("corrupt index: {0}")]
    Corrupt(String),

    #[error("unsupported index version {found}, expected {expected}")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("page {page} is out of range (index has {count} pages)")]
    PageOutOfRange { page: PageId, count: u32 },

    #[error("checksum mismatch on page {0}")]
    Checksum(PageId),

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{}: {source}", path.display())]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn corrupt(msg: impl Into<String>) -> Self {
        Error::Corrupt(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
