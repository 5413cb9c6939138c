use thiserror::Error;

/// Errors raised while reading, writing or decoding TVC streams.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("truncated stream: {0}")]
    Truncated(&'static str),
    #[error("corrupt stream: {0}")]
    Corrupt(String),
    #[error("corrupt stream at CTU ({row}, {col}): {msg}")]
    CorruptCtu { row: usize, col: usize, msg: String },
    #[error("format error in field `{field}`: {msg}")]
    Format { field: &'static str, msg: String },
    #[error("bad magic {0:?}")]
    BadMagic([u8; 4]),
    #[error("unsupported version {0}")]
    UnsupportedVersion(u8),
    #[error("unsupported bit depth {0}")]
    UnsupportedBitDepth(u8),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("API misuse: {0}")]
    Misuse(&'static str),
    #[error("decode of picture {picture} failed: {source}")]
    Picture {
        picture: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn format(field: &'static str, msg: impl Into<String>) -> Self {
        Error::Format { field, msg: msg.into() }
    }

    pub(crate) fn corrupt(msg: impl Into<String>) -> Self {
        Error::Corrupt(msg.into())
    }

    /// True for errors caused by malformed input (as opposed to I/O or misuse).
    pub fn is_format(&self) -> bool {
        match self {
            Error::Io(_) => false,
            Error::Picture { source, .. } => source.is_format(),
            _ => true,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
