//! Experiment runner behind the `pcflab` binary.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use serde::Serialize;

/// Environment variable overriding the output directory of the config file.
pub const OUT_ENV: &str = "PCFLAB_OUT";

/// Outcome of a command that ran to completion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Violation,
    Degeneration,
}

#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error("config error: {0}")]
    Config(String),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("run failed: {0}")]
    Run(String),
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Ok => 0,
            Status::Violation => 1,
            Status::Degeneration => 2,
        }
    }
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 3,
            Failure::Io(_) | Failure::Run(_) => 4,
        }
    }
}

/// Settings shared by all commands after flag and environment overrides.
#[derive(Clone, Debug)]
pub struct Context {
    pub out: PathBuf,
    pub seed: u64,
    pub quiet: bool,
}
