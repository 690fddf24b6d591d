use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] fracollapse::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("missing input: {0}")]
    Data(String),

    #[error("numerical integrity: {0}")]
    Integrity(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 0 success, 1 convergence, 2 config, 3 dependency/data, 4 integrity.
    pub fn exit_code(&self) -> u8 {
        use fracollapse::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Io { .. } | CliError::Data(_) => 3,
            CliError::Integrity(_) => 4,
            CliError::Core(e) => match e {
                E::Convergence { .. } | E::Degenerate(_) => 1,
                E::Config(_) | E::InvalidParams(_) | E::Geometry(_) | E::Domain(_) | E::Precondition(_) => 2,
                E::BlowupSignal(_) => 4,
                _ => 3,
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
