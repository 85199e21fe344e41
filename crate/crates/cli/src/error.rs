use igmdsr_core::training::TrainError;
use thiserror::Error;

/// Command failures, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("input error: {0}")]
    Input(String),
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("numeric error: {0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Parameter(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl From<igmdsr_core::Error> for CliError {
    fn from(e: igmdsr_core::Error) -> Self {
        use igmdsr_core::Error as E;
        match e {
            E::Parameter(m) => CliError::Parameter(m),
            E::Numeric(m) => CliError::Numeric(m),
            E::Shape(m) | E::Domain(m) => CliError::Input(m),
        }
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        let epochs = e.log.epochs_run;
        match CliError::from(e.error) {
            CliError::Numeric(m) => CliError::Numeric(format!("{m} (after {epochs} epochs)")),
            other => other,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
