use std::fmt;
use std::path::PathBuf;

/// A line in a pattern or machine file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Location {
    pub file: String,
    pub line: usize,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.file, self.line)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("missing file {0}")]
    MissingFile(PathBuf),

    #[error("{at}: {message}")]
    Parse { at: Location, message: String },

    #[error("{at}: `{name}` is not declared")]
    DanglingReference { name: String, at: Location },

    #[error("pattern `{0}` has no validation schedule or statement")]
    MissingValidation(String),

    #[error("{context}: {source}")]
    Model {
        context: String,
        #[source]
        source: polystream_core::Error,
    },

    #[error("template/layout mismatch: {0}")]
    TemplateLayoutMismatch(String),

    #[error("compiler `{0}` not found")]
    CompilerNotFound(String),

    #[error("compilation failed: {command}\n{stderr}")]
    CompileFailed { command: String, stderr: String },

    #[error("driver exited with {status} without protocol output\n{stderr}")]
    DriverCrashed { status: String, stderr: String },

    #[error("cannot parse driver output ({reason}):\n{raw}")]
    ProtocolParseError { reason: String, raw: String },

    #[error("smallest footprint {bytes} bytes at n = {n} does not fit in {level} ({capacity} bytes)")]
    FootprintTooSmall {
        n: u64,
        bytes: u64,
        level: String,
        capacity: u64,
    },

    #[error("invalid configuration: {0}")]
    BadConfig(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("report: {0}")]
    Report(String),
}

impl Error {
    pub fn model(context: impl Into<String>, source: polystream_core::Error) -> Self {
        Error::Model {
            context: context.into(),
            source,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
