use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid input:\n  - {}", .0.join("\n  - "))]
    Validation(Vec<String>),
    #[error(transparent)]
    Core(#[from] stochassign::Error),
    #[error("learning did not converge: {0}")]
    NonConvergence(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    /// Process exit code: 2 for bad input, 3 for non-convergence.
    pub fn exit_code(&self) -> i32 {
        use stochassign::Error as E;
        match self {
            CliError::Parse { .. } | CliError::Validation(_) => 2,
            CliError::NonConvergence(_) => 3,
            CliError::Core(E::IndexSearchExhausted { .. } | E::NonFinite { .. }) => 3,
            CliError::Core(_) => 2,
            CliError::Io(_) => 1,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
