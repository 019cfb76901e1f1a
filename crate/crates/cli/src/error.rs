use delayrec_core::Error as CoreError;
use std::path::PathBuf;
use thiserror::Error;

/// Exit code of a run whose checks all passed.
pub const EXIT_PASS: i32 = 0;
/// Exit code of a run with a failed check.
pub const EXIT_CHECK_FAILED: i32 = 1;
/// Exit code for invalid configs, refusals and I/O problems.
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("refused: {0}")]
    Refused(CoreError),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("could not write output: {0}")]
    Output(String),

    #[error("no suites selected")]
    NoSuites,
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn missing(section: &str) -> Self {
        CliError::config(section, "required section is missing")
    }

    /// Maps core errors raised while building or running `section`: bad
    /// parameters become config errors under that section, everything else
    /// is a refusal.
    pub fn at(section: &str) -> impl Fn(CoreError) -> CliError + '_ {
        move |e| match e {
            CoreError::InvalidParameter { name, reason } => {
                let path = if name.starts_with(section) {
                    name.to_string()
                } else {
                    format!("{section}.{name}")
                };
                CliError::config(path, reason)
            }
            CoreError::Empty(what) => CliError::config(format!("{section}.{what}"), "must not be empty"),
            CoreError::PointMismatch { .. } => CliError::config(section, e.to_string()),
            other => CliError::Refused(other),
        }
    }

    pub fn exit_code(&self) -> i32 {
        EXIT_CONFIG
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Output(e.to_string())
    }
}
