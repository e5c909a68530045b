use shortcut_core::{GridCellError, ModelError, MonteCarloError, OptimizerError};

/// Exit status for a successful run.
pub const EXIT_OK: i32 = 0;
/// Exit status for invalid arguments.
pub const EXIT_USAGE: i32 = 2;
/// Exit status for solver or sampling failures.
pub const EXIT_NUMERICAL: i32 = 3;
/// Exit status for I/O failures.
pub const EXIT_IO: i32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl AppError {
    pub fn usage(msg: impl Into<String>) -> Self {
        AppError::Usage(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Usage(_) => EXIT_USAGE,
            AppError::Numerical(_) => EXIT_NUMERICAL,
            AppError::Io(_) => EXIT_IO,
        }
    }
}

impl From<ModelError> for AppError {
    fn from(e: ModelError) -> Self {
        AppError::Usage(e.to_string())
    }
}

impl From<OptimizerError> for AppError {
    fn from(e: OptimizerError) -> Self {
        match e {
            OptimizerError::InvalidConfig(_) | OptimizerError::BadParameter(_) => {
                AppError::Usage(e.to_string())
            }
            _ => AppError::Numerical(e.to_string()),
        }
    }
}

impl From<GridCellError> for AppError {
    fn from(e: GridCellError) -> Self {
        match e.source {
            OptimizerError::InvalidConfig(_) | OptimizerError::BadParameter(_) => {
                AppError::Usage(e.to_string())
            }
            _ => AppError::Numerical(e.to_string()),
        }
    }
}

impl From<MonteCarloError> for AppError {
    fn from(e: MonteCarloError) -> Self {
        match e {
            MonteCarloError::Solver { .. } => AppError::Numerical(e.to_string()),
            _ => AppError::Usage(e.to_string()),
        }
    }
}

impl From<std::io::Error> for AppError {
    fn from(e: std::io::Error) -> Self {
        AppError::Io(e.to_string())
    }
}

impl From<csv::Error> for AppError {
    fn from(e: csv::Error) -> Self {
        AppError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for AppError {
    fn from(e: serde_json::Error) -> Self {
        AppError::Io(e.to_string())
    }
}
