//! Scenario runner behind the `afp` binary.

pub mod config;
pub mod run;

pub use config::Scenario;
pub use run::{run_scenario, Audit, RunOptions, RunReport};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid config (line {line}): {reason}")]
    ConfigInvalid { line: usize, reason: String },
    #[error("i/o error: {0}")]
    Io(String),
    #[error("{context}: {source}")]
    Module {
        context: String,
        #[source]
        source: afp_core::Error,
    },
}

impl CliError {
    pub(crate) fn module(context: impl Into<String>) -> impl FnOnce(afp_core::Error) -> Self {
        let context = context.into();
        move |source| CliError::Module { context, source }
    }
}
