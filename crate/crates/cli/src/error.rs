use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("unknown config key '{0}'")]
    UnknownKey(String),

    #[error("bad value '{value}' for key '{key}'")]
    BadValue { key: String, value: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Input(coupled_instantons::Error),

    #[error("{0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl From<coupled_instantons::Error> for CliError {
    fn from(e: coupled_instantons::Error) -> Self {
        CliError::Input(e)
    }
}

impl CliError {
    /// 1 for numerical failures, 2 for configuration and input errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(e) if e.is_numerical() => 1,
            CliError::Io(_) | CliError::Json(_) => 1,
            _ => 2,
        }
    }
}
