use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    Shape {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("non-finite value at coordinate {coordinate} ({context})")]
    Numeric { coordinate: usize, context: String },

    #[error("format error: {0}")]
    Format(String),

    #[error("review has {tokens} tokens; with EOS it does not fit in {max_len} positions")]
    Length { tokens: usize, max_len: usize },

    #[error("class {class} has {count} reviews; at least 3 are required to stratify")]
    Stratification { class: usize, count: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("missing trace state: {0}")]
    State(String),

    #[error("checkpoint corrupted: {0}")]
    Corruption(String),

    #[error("unsupported version header {found:?}, expected {expected:?}")]
    Version { found: String, expected: String },

    #[error(
        "gradient check failed: {matrix}[{index}] relative error {error:.3e} exceeds {tol:.1e}"
    )]
    GradCheck {
        matrix: String,
        index: usize,
        error: f64,
        tol: f64,
    },

    #[error("training diverged at epoch {epoch}")]
    Diverged { epoch: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status for this error: 1 usage, 2 I/O or unreadable
    /// input file, 3 configuration, 4 numeric failure or divergence,
    /// 5 gradient check failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Argument(_) | Error::Shape { .. } | Error::State(_) => 1,
            Error::Io { .. } | Error::Format(_) | Error::Corruption(_) | Error::Version { .. } => 2,
            Error::Config(_) | Error::Length { .. } | Error::Stratification { .. } => 3,
            Error::Numeric { .. } | Error::Diverged { .. } => 4,
            Error::GradCheck { .. } => 5,
        }
    }

    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }
}
