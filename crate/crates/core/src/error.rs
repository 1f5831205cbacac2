use std::path::PathBuf;

use crate::diffusion::Algorithm;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{}:{line}: {msg}", path.display())]
    Parse { path: PathBuf, line: u64, msg: String },

    #[error("{algorithm} diverged at {} iteration {iteration}, vehicle {vehicle}", step_label(*step))]
    Divergence {
        algorithm: Algorithm,
        step: Option<usize>,
        iteration: usize,
        vehicle: usize,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn step_label(step: Option<usize>) -> String {
    match step {
        Some(t) => format!("step {t}"),
        None => "an unknown step".to_owned(),
    }
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Whether this error stems from bad user input rather than a numerical failure.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Divergence { .. })
    }
}
