use shiftrule_core::Error as CoreError;

use crate::schema::SchemaError;

/// Failures of a command, each with its process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Schema(#[from] SchemaError),

    #[error("{0}")]
    Usage(String),

    #[error("estimator precondition violated: {0}")]
    Precondition(CoreError),

    #[error("{0}")]
    Core(CoreError),

    #[error("non-finite value in column {column} of row {row}")]
    NonFinite { row: usize, column: String },

    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl CliError {
    /// 2 for bad input, 3 for estimator preconditions, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema(_) | CliError::Usage(_) => 2,
            CliError::Precondition(_) => 3,
            CliError::Core(_) | CliError::NonFinite { .. } | CliError::Io { .. } => 1,
        }
    }

    pub fn io(path: impl Into<String>, err: std::io::Error) -> Self {
        CliError::Io { path: path.into(), message: err.to_string() }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::PsrDrift(_)
            | CoreError::PsrSpectrum(_)
            | CoreError::TargetNotInvolution
            | CoreError::ZeroJacobian(_)
            | CoreError::ZeroShots
            | CoreError::InvalidEpsilon(_)
            | CoreError::SingularMetric
            | CoreError::TauGradientUnsupported { .. } => CliError::Precondition(e),
            other => CliError::Core(other),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
