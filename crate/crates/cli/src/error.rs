use splitwave::error::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),

    #[error("inadmissible step: {0}")]
    Inadmissible(String),

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        Self::Config(msg.into())
    }

    pub fn io(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> Self {
        let context = context.into();
        move |source| Self::Io { context, source }
    }

    /// Process exit status: 2 for configuration and parameter errors, 3 for a
    /// step rejected by its rule, 4 when a run produced non-finite values.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Inadmissible(_) => 3,
            Self::Core(CoreError::NonFiniteField { .. }) => 4,
            _ => 2,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
