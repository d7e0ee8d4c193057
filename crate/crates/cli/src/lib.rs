//! Configuration, run manifests and commands behind the `seizure` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;

pub use config::PipelineConfig;
pub use error::{exit, CliError, Result};
pub use manifest::RunManifest;
