use apsfm_core::SfmError;
use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const CERTIFIED: i32 = 0;
    pub const INPUT: i32 = 2;
    pub const NOT_SUBMODULAR: i32 = 3;
    pub const BUDGET: i32 = 4;
    pub const NUMERIC: i32 = 5;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("component {component} is not submodular: F({a:?}) + F({b:?}) < F(A∪B) + F(A∩B)")]
    NotSubmodular {
        component: usize,
        a: Vec<usize>,
        b: Vec<usize>,
    },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Input(_) | CliError::Io { .. } => exit::INPUT,
            CliError::NotSubmodular { .. } => exit::NOT_SUBMODULAR,
            CliError::Numeric(_) => exit::NUMERIC,
        }
    }
}

impl From<SfmError> for CliError {
    fn from(e: SfmError) -> Self {
        match e {
            SfmError::NotSubmodular { a, b, .. } => CliError::NotSubmodular { component: 0, a, b },
            SfmError::ProjectionFailed { .. } => CliError::Numeric(e.to_string()),
            SfmError::InvalidInput(msg) => CliError::Input(msg),
            SfmError::CapabilityExceeded { .. } => CliError::Input(e.to_string()),
        }
    }
}
