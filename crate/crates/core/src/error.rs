use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("initialization failed: {0}")]
    Init(String),

    #[error("agents {i} and {j} overlap at distance {distance:.9}")]
    Overlap { i: usize, j: usize, distance: f64 },

    #[error(
        "integration fault{}: agents {i} and {j} at distance {distance:.9} after exhausting step halving",
        frame.map(|f| format!(" at frame {f}")).unwrap_or_default()
    )]
    Integration {
        frame: Option<usize>,
        i: usize,
        j: usize,
        distance: f64,
    },

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("index out of range: {0}")]
    Index(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("classifier fit failed: {0}")]
    Fit(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("malformed {what}: {detail}")]
    Parse { what: String, detail: String },

    #[error("sweep failed: {faulted} of {total} runs faulted")]
    TooManyFaults { faulted: usize, total: usize },

    #[error("{}: {source}", path.display())]
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

    pub(crate) fn parse(what: impl Into<String>, detail: impl std::fmt::Display) -> Self {
        Error::Parse {
            what: what.into(),
            detail: detail.to_string(),
        }
    }

    /// Whether the error stems from user configuration rather than a runtime fault.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Parse { .. })
    }
}
