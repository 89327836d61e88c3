use thiserror::Error;

/// Process exit codes. Usage errors exit with 2 through clap.
pub mod exit {
    pub const OK: i32 = 0;
    pub const CHECK_FAILED: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const INPUT: i32 = 3;
    pub const RESOURCE: i32 = 4;
    pub const INTERNAL: i32 = 5;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    Parse { path: String, message: String },

    #[error("{0}")]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Core(#[from] efx_core::Error),

    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn parse(path: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Parse {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        use efx_core::Error as E;
        match self {
            CliError::Parse { .. } | CliError::Io(_) => exit::INPUT,
            CliError::Usage(_) => exit::USAGE,
            CliError::Core(e) => match e {
                E::CapExceeded { .. } => exit::RESOURCE,
                E::Invariant { .. } | E::Uncoverable { .. } => exit::INTERNAL,
                E::InvalidInput(_)
                | E::NoDemand { .. }
                | E::ZeroWelfare
                | E::Domain(_)
                | E::Generation(_) => exit::INPUT,
            },
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
