use thiserror::Error;

use crate::config::ConfigIssue;

/// Exit status for IO failures.
pub const EXIT_IO: i32 = 1;
/// Exit status for bad configs and violated contracts.
pub const EXIT_CONTRACT: i32 = 2;
/// Exit status when a check ran and failed.
pub const EXIT_CHECK: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid config:\n{}", .0.iter().map(|i| format!("  {i}")).collect::<Vec<_>>().join("\n"))]
    Config(Vec<ConfigIssue>),

    #[error(transparent)]
    Core(#[from] mbdqc::Error),

    #[error("{0}")]
    Usage(String),

    #[error("check failed: {0}")]
    CheckFailed(String),
}

impl CliError {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io { context: context.into(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => EXIT_IO,
            CliError::Config(_) | CliError::Core(_) | CliError::Usage(_) => EXIT_CONTRACT,
            CliError::CheckFailed(_) => EXIT_CHECK,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_are_distinct() {
        let io = CliError::io("x", std::io::Error::other("y"));
        let config = CliError::Config(vec![]);
        let core = CliError::Core(mbdqc::Error::MixedInjectionModes);
        let check = CliError::CheckFailed("z".into());
        assert_eq!(
            [io.exit_code(), config.exit_code(), core.exit_code(), check.exit_code()],
            [EXIT_IO, EXIT_CONTRACT, EXIT_CONTRACT, EXIT_CHECK]
        );
        assert_eq!((EXIT_IO, EXIT_CONTRACT, EXIT_CHECK), (1, 2, 3));
    }
}
