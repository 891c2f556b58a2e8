//! Dataset pipeline, experiment harness and command-line front end for the
//! `fairfate-core` federated learning algorithms.

#![forbid(unsafe_code)]

pub mod cli;
pub mod config;
pub mod error;
pub mod harness;
pub mod ingest;
pub mod output;
pub mod preprocess;
pub mod schema;

pub use config::ExperimentConfig;
pub use error::{Error, Result};
pub use harness::{run_experiment, RoundRecord, RunSummary};
pub use schema::DatasetSchema;
