//! Scenario runner over the `hdlab-core` algorithms: a registry of named
//! experiments, JSON config validation, and deterministic JSON/CSV reports.
//!
//! Identical configs produce byte-identical artifacts: every number is
//! rendered as an exact decimal string, randomized scenarios take an
//! explicit seed, and wall-clock timing never enters a report.

pub mod config;
pub mod report;
pub mod scenarios;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("scenario: {0}")]
    Scenario(String),
    #[error(transparent)]
    Arith(#[from] hdlab_core::ArithError),
    #[error(transparent)]
    Lattice(#[from] hdlab_core::LatticeError),
    #[error(transparent)]
    Group(#[from] hdlab_core::GroupError),
    #[error(transparent)]
    Estimator(#[from] hdlab_core::EstimatorError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
