use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, unreadable or malformed input, invalid parameters.
    #[error("{0}")]
    Usage(String),

    /// Input that parses but cannot be analysed (duplicates, degenerate
    /// covariance, too many failed replicates).
    #[error("{0}")]
    Data(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) | CliError::Io { .. } => ExitCode::from(2),
            CliError::Data(_) => ExitCode::from(3),
        }
    }
}

impl From<renyi_gof::Error> for CliError {
    fn from(e: renyi_gof::Error) -> Self {
        if e.is_data_error() || matches!(e, renyi_gof::Error::Experiment(_)) {
            CliError::Data(e.to_string())
        } else {
            CliError::Usage(e.to_string())
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
