use thiserror::Error;

/// Process exit codes.
pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 2;
pub const EXIT_ERROR: i32 = 3;
pub const EXIT_INVALID: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid config at line {line}, column {column}: {message}")]
    ConfigInvalid { line: usize, column: usize, message: String },
    #[error("file format: {0}")]
    FileFormat(String),
    #[error("io: {0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] qbsde_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ConfigInvalid { .. } | CliError::FileFormat(_) => EXIT_INVALID,
            CliError::Io(_) | CliError::Core(_) => EXIT_ERROR,
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
        CliError::FileFormat(e.to_string())
    }
}
