use std::fmt;

/// Failure of a command, carrying its process exit code.
#[derive(Debug)]
pub enum LabError {
    Config(String),
    Weakness(String),
    Insufficient(String),
    Verification(String),
    Io(std::io::Error),
}

impl LabError {
    pub fn exit_code(&self) -> u8 {
        match self {
            LabError::Verification(_) => 1,
            LabError::Config(_) | LabError::Io(_) => 2,
            LabError::Weakness(_) => 3,
            LabError::Insufficient(_) => 4,
        }
    }
}

impl fmt::Display for LabError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabError::Config(m) => write!(f, "configuration error: {m}"),
            LabError::Weakness(m) => write!(f, "weakness condition violated: {m}"),
            LabError::Insufficient(m) => write!(f, "statistically insufficient: {m}"),
            LabError::Verification(m) => write!(f, "verification failed: {m}"),
            LabError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for LabError {}

impl From<std::io::Error> for LabError {
    fn from(e: std::io::Error) -> Self {
        LabError::Io(e)
    }
}

impl From<csv::Error> for LabError {
    fn from(e: csv::Error) -> Self {
        LabError::Io(e.into())
    }
}

impl From<serde_json::Error> for LabError {
    fn from(e: serde_json::Error) -> Self {
        LabError::Io(e.into())
    }
}

impl From<wva_core::Error> for LabError {
    fn from(e: wva_core::Error) -> Self {
        use wva_core::Error as E;
        match e {
            E::WeaknessViolated { .. } => LabError::Weakness(e.to_string()),
            E::NoDetections | E::OutOfRange { .. } => LabError::Insufficient(e.to_string()),
            _ => LabError::Config(e.to_string()),
        }
    }
}

pub type LabResult<T> = Result<T, LabError>;
