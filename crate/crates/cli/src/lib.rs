//! Library side of the `homog` binary: run configuration, the experiment
//! runner, report artifacts and bundles.

pub mod bundle;
pub mod config;
pub mod runner;
pub mod svg;

pub use config::{RunConfig, RunParams};
pub use runner::{exit_code, run, write_artifacts, RunOutput};
