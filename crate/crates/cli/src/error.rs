use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] twophoton_core::Error),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 2 for anything the caller can fix by changing arguments, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        use twophoton_core::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(E::Parameter(_) | E::Range(_) | E::Branch(_)) => 2,
            _ => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
