use std::process::ExitCode;

#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Io(String),
    #[error("{0} of {1} identity checks failed")]
    Verification(usize, usize),
}

impl Failure {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            Failure::Verification(..) => ExitCode::from(1),
            Failure::Usage(_) => ExitCode::from(2),
            Failure::Numerical(_) | Failure::Io(_) => ExitCode::from(3),
        }
    }
}

impl From<schrostab_core::Error> for Failure {
    fn from(e: schrostab_core::Error) -> Self {
        match e {
            schrostab_core::Error::Domain(msg) => Failure::Usage(msg),
            other => Failure::Numerical(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, Failure>;
