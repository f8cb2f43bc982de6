//! Configuration, scenario execution and report emission for the `cauchy`
//! command-line tool.

pub mod config;
pub mod data;
pub mod demos;
pub mod error;
pub mod run;

pub use config::ScenarioConfig;
pub use error::CliError;
pub use run::{solve, RunOptions, RunReport};
