//! Client training and server aggregation rules.
//!
//! Rounds are 1-indexed. A [`ServerState`] with `round == t - 1` is the state
//! the server holds while aggregating round `t`; [`ServerState::commit`]
//! advances it.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::dataset::TabularDataset;
use crate::error::{CoreError, Result};
use crate::fairness::FairnessMetric;
use crate::params::ModelParams;

mod aggregate;
mod client;
mod reweigh;
mod schedule;

pub use aggregate::{
    aggregate_fairfate, aggregate_fedavg, aggregate_feddemon, aggregate_fedmom, aggregate_fedval,
    fair_client_filter, fair_update_alpha_f, global_delta, FairFateStep, FairSelection,
};
pub use client::{client_local_update, select_client_subset};
pub use reweigh::{global_reweigh, local_reweigh, CellCounts, CellWeights};
pub use schedule::{beta_decay, lambda_schedule};

/// Score floor added to every client in FedVal weighting.
pub const DEFAULT_FEDVAL_EPSILON: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct ServerState {
    pub theta: ModelParams,
    pub momentum: Vec<f64>,
    /// Completed rounds.
    pub round: usize,
    pub total_rounds: usize,
}

impl ServerState {
    pub fn new(theta: ModelParams, total_rounds: usize) -> Self {
        let momentum = alloc::vec![0.0; theta.len()];
        Self {
            theta,
            momentum,
            round: 0,
            total_rounds,
        }
    }

    /// The 1-indexed round currently being aggregated.
    pub fn current_round(&self) -> Result<usize> {
        let t = self.round + 1;
        if t > self.total_rounds {
            return Err(CoreError::RoundOutOfRange {
                round: t,
                total: self.total_rounds,
            });
        }
        Ok(t)
    }

    pub fn commit(&mut self, step: ServerStep) {
        self.theta = step.theta;
        self.momentum = step.momentum;
        self.round += 1;
    }
}

/// Result of one aggregation: the next global model and momentum buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct ServerStep {
    pub theta: ModelParams,
    pub momentum: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClientUpdate {
    pub client_id: usize,
    pub params: ModelParams,
    pub num_samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FairFateConfig {
    pub beta0: f64,
    pub lambda0: f64,
    pub rho: f64,
    pub max_lambda: f64,
    pub metric: FairnessMetric,
}

impl FairFateConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.beta0) {
            return Err(CoreError::InvalidConfig("beta0 must lie in [0, 1)"));
        }
        if !(self.lambda0 >= 0.0 && self.lambda0.is_finite()) {
            return Err(CoreError::InvalidConfig("lambda0 must be non-negative"));
        }
        if !(self.rho >= 0.0 && self.rho.is_finite()) {
            return Err(CoreError::InvalidConfig("rho must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.max_lambda) {
            return Err(CoreError::InvalidConfig("max_lambda must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// How client sample weights are set before local training.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reweighing {
    None,
    /// Each client reweighs from its own (S, Y) counts.
    Local,
    /// Weights come from (S, Y) counts pooled over the round's clients.
    Global,
}

/// Server algorithm and its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Algorithm {
    FedAvg,
    FedMom {
        beta: f64,
    },
    FedDemon {
        beta0: f64,
    },
    FedAvgLr,
    FedAvgGr,
    FedVal {
        metric: FairnessMetric,
        #[serde(default = "default_fedval_epsilon")]
        epsilon: f64,
    },
    #[serde(rename = "fair_fate")]
    FairFate(FairFateConfig),
}

fn default_fedval_epsilon() -> f64 {
    DEFAULT_FEDVAL_EPSILON
}

impl Algorithm {
    pub fn reweighing(&self) -> Reweighing {
        match self {
            Self::FedAvgLr => Reweighing::Local,
            Self::FedAvgGr => Reweighing::Global,
            _ => Reweighing::None,
        }
    }

    pub fn needs_validation(&self) -> bool {
        matches!(self, Self::FedVal { .. } | Self::FairFate(_))
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::FedMom { beta } if !(0.0..1.0).contains(&beta) => {
                Err(CoreError::InvalidConfig("beta must lie in [0, 1)"))
            }
            Self::FedDemon { beta0 } if !(0.0..1.0).contains(&beta0) => {
                Err(CoreError::InvalidConfig("beta0 must lie in [0, 1)"))
            }
            Self::FedVal { epsilon, .. } if !(epsilon > 0.0 && epsilon.is_finite()) => {
                Err(CoreError::InvalidConfig("fedval epsilon must be positive"))
            }
            Self::FairFate(cfg) => cfg.validate(),
            _ => Ok(()),
        }
    }

    /// Short label such as `fedavg` or `fair_fate_sp`.
    pub fn label(&self) -> alloc::string::String {
        use alloc::format;
        match self {
            Self::FedAvg => "fedavg".into(),
            Self::FedMom { .. } => "fedmom".into(),
            Self::FedDemon { .. } => "feddemon".into(),
            Self::FedAvgLr => "fedavg_lr".into(),
            Self::FedAvgGr => "fedavg_gr".into(),
            Self::FedVal { metric, .. } => format!("fedval_{metric}"),
            Self::FairFate(cfg) => format!("fair_fate_{}", cfg.metric),
        }
    }
}

/// Aggregates one round's updates (sorted by client id) with `algorithm`.
/// `validation` is only read by FedVal and the fair momentum rule.
pub fn aggregate_round(
    state: &ServerState,
    updates: &[ClientUpdate],
    validation: &TabularDataset,
    algorithm: &Algorithm,
) -> Result<ServerStep> {
    let keep_momentum = |theta| ServerStep {
        theta,
        momentum: state.momentum.clone(),
    };
    match *algorithm {
        Algorithm::FedAvg | Algorithm::FedAvgLr | Algorithm::FedAvgGr => {
            aggregate_fedavg(state, updates).map(keep_momentum)
        }
        Algorithm::FedMom { beta } => aggregate_fedmom(state, updates, beta),
        Algorithm::FedDemon { beta0 } => aggregate_feddemon(state, updates, beta0),
        Algorithm::FedVal { metric, epsilon } => {
            aggregate_fedval(state, updates, validation, metric, epsilon).map(keep_momentum)
        }
        Algorithm::FairFate(cfg) => {
            aggregate_fairfate(state, updates, validation, &cfg).map(|s| s.step)
        }
    }
}
