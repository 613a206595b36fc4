use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value is out of range or inconsistent. `field` names
    /// the offending parameter using its config-file path.
    #[error("configuration error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("invalid argument: {0}")]
    Argument(String),

    /// Bookkeeping went wrong inside the simulator.
    #[error("internal error: {0}")]
    Internal(String),

    #[error("re-cluster plan rejected: {0}")]
    PlanRejected(String),

    #[error("trace analysis error: {0}")]
    Analysis(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("config file: {0}")]
    Toml(#[from] toml::de::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by bad input configuration rather than a
    /// failure while running.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config { .. } | Error::Toml(_))
    }
}
