use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed NPY data: {0}")]
    Format(String),

    #[error("unsupported NPY layout: Fortran-ordered arrays are not supported")]
    UnsupportedLayout,

    #[error("unsupported NPY dtype {0:?}")]
    UnsupportedDtype(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("label error: {0}")]
    Label(String),

    #[error("expected 12 bands, found {0}")]
    BandCount(usize),

    #[error("invalid sample value: {0}")]
    Sample(String),

    #[error("kernel of size {kernel} does not fit a {width}x{height} image")]
    KernelTooLarge {
        kernel: usize,
        width: usize,
        height: usize,
    },

    #[error("window of size {window} does not fit a {width}x{height} image")]
    Window {
        window: usize,
        width: usize,
        height: usize,
    },

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("no records in aggregation group")]
    EmptyGroup,

    #[error("corpus error: {0}")]
    Corpus(String),

    #[error("malformed records CSV: {0}")]
    Records(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by the filesystem rather than by invalid input.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}
