use dynn::linalg::LinalgError;
use dynn::spectra::ClusterError;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },
    #[error(transparent)]
    Model(#[from] dynn::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        CliError::Parse {
            path: path.into(),
            message: message.to_string(),
        }
    }

    /// 0 success, 1 I/O or parse, 2 mathematical precondition, 3 integration.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io { .. } | CliError::Parse { .. } => 1,
            CliError::Model(dynn::Error::Parse(_)) => 1,
            CliError::Model(dynn::Error::Integration(_)) => 3,
            CliError::Model(_) => 2,
        }
    }

    /// Short machine-readable tag printed with the message.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Io { .. } => "io",
            CliError::Parse { .. } | CliError::Model(dynn::Error::Parse(_)) => "parse",
            CliError::Model(e) => model_kind(e),
        }
    }
}

pub fn model_kind(e: &dynn::Error) -> &'static str {
    match e {
        dynn::Error::Cluster(ClusterError::ForcedSplit { .. }) => "forced-split",
        dynn::Error::Linalg(LinalgError::SpectraNotSeparated { .. } | LinalgError::ClustersNotSeparated { .. }) => {
            "spectra-not-separated"
        }
        dynn::Error::Integration(_) => "integration",
        dynn::Error::Dimension(_) => "dimension-mismatch",
        dynn::Error::Parse(_) => "parse",
        _ => "precondition",
    }
}
