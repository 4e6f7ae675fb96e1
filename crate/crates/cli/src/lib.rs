//! Experiment driver: configuration, per-regime pipeline and the
//! `simulate`, `run`, `param-switch`, `ablate` and `report` commands.

pub mod commands;
pub mod config;
pub mod output;
pub mod pipeline;

pub use config::ExperimentConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: eeforecast::Error,
    },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed file {path}: {message}")]
    Parse { path: String, message: String },
    #[error("{failed} of {total} runs failed")]
    RunsFailed { failed: usize, total: usize },
}

impl CliError {
    pub fn core(context: impl Into<String>, source: eeforecast::Error) -> Self {
        CliError::Core {
            context: context.into(),
            source,
        }
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// Process exit code: 2 for usage and configuration problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}
