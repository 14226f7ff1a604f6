use std::path::PathBuf;

use hamflow_core::Error as CoreError;

/// Everything a command can fail with, mapped onto the process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{failed} of {total} checks failed")]
    Verification { failed: usize, total: usize },
    #[error("numerical blow-up in {context}: state became non-finite after t = {last_good_time}")]
    BlowUp {
        context: String,
        last_good_time: f64,
    },
    #[error("numerical failure in {context}: {source}")]
    Numerical {
        context: String,
        #[source]
        source: CoreError,
    },
    #[error("cannot write {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub const EXIT_VERIFICATION: i32 = 1;
    pub const EXIT_CONFIG: i32 = 2;
    pub const EXIT_BLOW_UP: i32 = 3;

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verification { .. } => Self::EXIT_VERIFICATION,
            CliError::Config(_) | CliError::Io { .. } => Self::EXIT_CONFIG,
            CliError::BlowUp { .. } | CliError::Numerical { .. } => Self::EXIT_BLOW_UP,
        }
    }

    /// Wraps a core error; parameter errors count as configuration errors.
    pub fn core(context: impl Into<String>, err: CoreError) -> Self {
        let context = context.into();
        match err {
            CoreError::NonFiniteState { last_good_time } => CliError::BlowUp {
                context,
                last_good_time,
            },
            CoreError::InvalidParameter { .. }
            | CoreError::InfiniteLambda { .. }
            | CoreError::Unsupported(_)
            | CoreError::LogDomain { .. }
            | CoreError::ConvergenceDomain { .. } => CliError::Config(format!("{context}: {err}")),
            other => CliError::Numerical {
                context,
                source: other,
            },
        }
    }
}
