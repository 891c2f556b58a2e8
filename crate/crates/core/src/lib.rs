//! Fairness-aware federated learning primitives.
//!
//! Everything in this crate is pure computation over in-memory data: a small
//! tanh/sigmoid binary classifier, group fairness metrics, Dirichlet client
//! partitioning, the server-side aggregation rules (FedAvg, FedMom, FedDemon,
//! FedVal and the fair momentum rule), sample reweighing, and an exact
//! Wilcoxon signed-rank test. File formats, CLI and parallel execution live in
//! the `fairfate` crate.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

mod error;
mod math;

pub mod dataset;
pub mod fairness;
pub mod federated;
pub mod nn;
pub mod params;
pub mod partition;
pub mod seed;
pub mod stats;

pub use dataset::{DatasetSummary, Matrix, TabularDataset};
pub use error::{CoreError, Result};
pub use fairness::{FairnessMetric, FairnessReport, GroupConfusion};
pub use federated::{Algorithm, ClientUpdate, FairFateConfig, ServerState, ServerStep};
pub use nn::LocalTrainConfig;
pub use params::{Gradient, ModelParams, ModelShape};
pub use partition::{ClientShard, Partition, PartitionMode, PartitionSpec};
