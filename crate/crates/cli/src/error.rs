use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad input files, configuration or arguments.
    #[error("{0}")]
    Input(String),
    #[error("cannot write {}: {source}", path.display())]
    Output {
        path: PathBuf,
        source: std::io::Error,
    },
    /// The sampler failed; the message says where the state was dumped.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) | CliError::Output { .. } => 2,
            CliError::Numerical(_) => 3,
        }
    }

    pub(crate) fn output(path: impl Into<PathBuf>, source: impl Into<std::io::Error>) -> Self {
        CliError::Output {
            path: path.into(),
            source: source.into(),
        }
    }
}

impl From<ctsteps::Error> for CliError {
    fn from(e: ctsteps::Error) -> Self {
        use ctsteps::Error as E;
        match e {
            E::NotPsd(_) | E::Singular(_) | E::Numerical(_) | E::ChainFailure { .. } => {
                CliError::Numerical(e.to_string())
            }
            _ => CliError::Input(e.to_string()),
        }
    }
}
