//! Configuration, file formats, experiment runners and the command line
//! around `aerogan-core`.

pub mod cli;
pub mod config;
pub mod experiments;
pub mod io;
pub mod scenario;

pub use aerogan_core as model;

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] aerogan_core::Error),
    #[error("i/o error: {0}")]
    Io(String),
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

impl AppError {
    /// 2 for configuration and usage problems, 3 for infeasible networks, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        use aerogan_core::Error as E;
        match self {
            AppError::Config(_) | AppError::Usage(_) | AppError::Core(E::Config(_)) => 2,
            AppError::Core(E::Infeasible(_) | E::NotAttained { .. } | E::NotStronglyConnected { .. } | E::NoCycle(_)) => 3,
            _ => 1,
        }
    }
}
