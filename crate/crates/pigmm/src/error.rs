use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed container: wrong magic, bad version, truncated header.
    #[error("format error: {0}")]
    Format(String),

    /// Structurally valid container with inconsistent contents.
    #[error("data error: {0}")]
    Data(String),

    #[error("argument error: {0}")]
    Argument(String),

    /// Input outside the mathematical domain of an operation
    /// (non-PSD model, d < 4, zero standard error, ...).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A training run produced a non-finite loss.
    #[error("run {run} diverged at epoch {epoch}")]
    Divergence { run: usize, epoch: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
