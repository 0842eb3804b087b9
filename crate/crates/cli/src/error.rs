use pharmonic_core::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("check failed: {0}")]
    Check(String),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Io(_) => 4,
            CliError::Check(_) | CliError::Other(_) => 1,
        }
    }

    /// Prefixes the message with context, keeping the category.
    pub fn context(self, ctx: &str) -> Self {
        match self {
            CliError::Config(m) => CliError::Config(format!("{ctx}: {m}")),
            CliError::Io(m) => CliError::Io(format!("{ctx}: {m}")),
            CliError::Solver(m) => CliError::Solver(format!("{ctx}: {m}")),
            CliError::Check(m) => CliError::Check(format!("{ctx}: {m}")),
            CliError::Other(m) => CliError::Other(format!("{ctx}: {m}")),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let msg = e.to_string();
        if e.is_solver_failure() {
            return CliError::Solver(msg);
        }
        match e {
            CoreError::Io(_) | CoreError::Ppm(_) | CoreError::ImageTooSmall { .. } => {
                CliError::Io(msg)
            }
            CoreError::InvalidConfig(_)
            | CoreError::UnsupportedQuadrature(_)
            | CoreError::UnsupportedDimension(_) => CliError::Config(msg),
            _ => CliError::Other(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
