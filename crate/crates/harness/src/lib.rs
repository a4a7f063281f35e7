//! Configuration, experiment suites, persistence and the command line of
//! the burgerlab numerical laboratory.

pub mod cli;
pub mod config;
pub mod output;
pub mod suites;

pub use config::ExperimentConfig;
pub use suites::{run_suite, Check, SuiteOutcome};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] burgerlab_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
