use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config parse error: {0}")]
    ConfigParse(String),

    #[error("invalid configuration: {0}")]
    Validation(String),

    #[error("solver failure: {0}")]
    Solver(gmnash::Error),

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ConfigParse(_) => 2,
            CliError::Validation(_) => 3,
            CliError::Solver(_) => 4,
            CliError::Io { .. } => 5,
        }
    }
}

fn is_solver_failure(e: &gmnash::Error) -> bool {
    match e {
        gmnash::Error::SingularStageSystem { .. } => true,
        gmnash::Error::Cell { source, .. } => is_solver_failure(source),
        _ => false,
    }
}

impl From<gmnash::Error> for CliError {
    fn from(e: gmnash::Error) -> Self {
        if is_solver_failure(&e) {
            CliError::Solver(e)
        } else {
            CliError::Validation(e.to_string())
        }
    }
}
