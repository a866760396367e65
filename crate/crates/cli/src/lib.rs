//! Run orchestration for the coherent-state engine: configuration, presets,
//! runs, run comparison and table dumps.

pub mod compare;
pub mod config;
pub mod presets;
pub mod run;

use thiserror::Error;

pub use compare::{compare, Comparison, Metric};
pub use config::{Application, RunConfig};
pub use run::{execute, write_outputs, RunOutcome, RunStatus};

/// Environment variable naming the default output root.
pub const OUTPUT_ROOT_ENV: &str = "CCSB_OUTPUT_ROOT";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(ccsb_core::Error),

    #[error("compare: {0}")]
    Compare(String),

    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl From<ccsb_core::Error> for CliError {
    fn from(e: ccsb_core::Error) -> Self {
        match e {
            ccsb_core::Error::Config(msg) => CliError::Config(msg),
            other => CliError::Core(other),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), source }
    }

    /// Process exit status: 2 config, 3 norm guard, 4 solver degeneracy,
    /// 1 anything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(ccsb_core::Error::NormGuard { .. }) => 3,
            CliError::Core(ccsb_core::Error::DegenerateBasis { .. }) => 4,
            CliError::Core(ccsb_core::Error::ModeCount { .. }) => 2,
            _ => 1,
        }
    }
}
