use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("no convergence after {iterations} iterations (last residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("degenerate solution: {0}")]
    Degenerate(String),

    #[error("missing ground state for (s = {s}, N = {dim}, p = {p})")]
    MissingGroundState { s: f64, dim: usize, p: f64 },

    #[error("ground state mismatch: {0}")]
    GroundStateMismatch(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("root bracket overflow: {0}")]
    BracketOverflow(String),

    #[error("geometry: {0}")]
    Geometry(String),

    #[error("insufficient data: {0}")]
    Data(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("blow-up signal: {0}")]
    BlowupSignal(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error("config: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
