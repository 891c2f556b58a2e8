use alloc::vec::Vec;

use crate::dataset::TabularDataset;
use crate::error::{CoreError, Result};
use crate::fairness::{self, FairnessMetric};
use crate::params::ModelParams;

use super::schedule::{beta_decay, lambda_schedule};
use super::{ClientUpdate, FairFateConfig, ServerState, ServerStep};

fn check_updates(state: &ServerState, updates: &[ClientUpdate]) -> Result<()> {
    if updates.is_empty() {
        return Err(CoreError::EmptyUpdates);
    }
    for up in updates {
        state.theta.check_same_layout(&up.params)?;
        if up.num_samples == 0 {
            return Err(CoreError::EmptyShard);
        }
    }
    Ok(())
}

/// `n_k / n` for each update.
fn sample_share(updates: &[ClientUpdate]) -> Vec<f64> {
    let n: usize = updates.iter().map(|u| u.num_samples).sum();
    updates
        .iter()
        .map(|u| u.num_samples as f64 / n as f64)
        .collect()
}

/// `sum_k w_k * (theta_k - theta)` without normalising `weights`.
fn weighted_delta(theta: &ModelParams, updates: &[&ClientUpdate], weights: &[f64]) -> Vec<f64> {
    let mut delta = alloc::vec![0.0; theta.len()];
    for (up, &w) in updates.iter().zip(weights) {
        for ((d, p), g) in delta.iter_mut().zip(up.params.values()).zip(theta.values()) {
            *d += w * (p - g);
        }
    }
    delta
}

/// Sample-size weighted mean of the client models.
pub fn aggregate_fedavg(state: &ServerState, updates: &[ClientUpdate]) -> Result<ModelParams> {
    check_updates(state, updates)?;
    let weights = sample_share(updates);
    let mut values = alloc::vec![0.0; state.theta.len()];
    for (up, w) in updates.iter().zip(&weights) {
        for (v, p) in values.iter_mut().zip(up.params.values()) {
            *v += w * p;
        }
    }
    ModelParams::from_values(state.theta.shape(), values)
}

/// Weighted mean of client deltas `theta_k - theta_t`. Weights that do not
/// sum to one are rescaled.
pub fn global_delta(
    state: &ServerState,
    updates: &[ClientUpdate],
    weights: &[f64],
) -> Result<Vec<f64>> {
    check_updates(state, updates)?;
    if weights.len() != updates.len() {
        return Err(CoreError::LengthMismatch {
            what: "aggregation weights",
            expected: updates.len(),
            actual: weights.len(),
        });
    }
    if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
        return Err(CoreError::InvalidConfig(
            "aggregation weights must be finite and non-negative",
        ));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(CoreError::ZeroWeightSum);
    }
    let refs: Vec<&ClientUpdate> = updates.iter().collect();
    if (total - 1.0).abs() > 1e-12 {
        let normalised: Vec<f64> = weights.iter().map(|w| w / total).collect();
        return Ok(weighted_delta(&state.theta, &refs, &normalised));
    }
    Ok(weighted_delta(&state.theta, &refs, weights))
}

fn sample_weighted_delta(state: &ServerState, updates: &[ClientUpdate]) -> Result<Vec<f64>> {
    global_delta(state, updates, &sample_share(updates))
}

fn momentum_step(state: &ServerState, alpha: &[f64], beta: f64) -> Result<ServerStep> {
    let momentum: Vec<f64> = state
        .momentum
        .iter()
        .zip(alpha)
        .map(|(v, a)| beta * v + (1.0 - beta) * a)
        .collect();
    let theta = state.theta.offset(&momentum, 1.0)?;
    Ok(ServerStep { theta, momentum })
}

/// `v' = beta v + (1 - beta) alpha_N`, `theta' = theta + v'`.
pub fn aggregate_fedmom(
    state: &ServerState,
    updates: &[ClientUpdate],
    beta: f64,
) -> Result<ServerStep> {
    if !(0.0..1.0).contains(&beta) {
        return Err(CoreError::InvalidConfig("beta must lie in [0, 1)"));
    }
    let alpha = sample_weighted_delta(state, updates)?;
    momentum_step(state, &alpha, beta)
}

/// FedMom with `beta` decayed by [`beta_decay`] for the current round.
pub fn aggregate_feddemon(
    state: &ServerState,
    updates: &[ClientUpdate],
    beta0: f64,
) -> Result<ServerStep> {
    if !(0.0..1.0).contains(&beta0) {
        return Err(CoreError::InvalidConfig("beta0 must lie in [0, 1)"));
    }
    let t = state.current_round()?;
    let alpha = sample_weighted_delta(state, updates)?;
    momentum_step(state, &alpha, beta_decay(beta0, t, state.total_rounds))
}

/// Validation fairness of the global model and of each client model, and
/// the clients at least as fair as the global model.
#[derive(Debug, Clone, PartialEq)]
pub struct FairSelection {
    /// Positions in the update slice, ascending.
    pub members: Vec<usize>,
    pub client_values: Vec<Option<f64>>,
    pub global_value: Option<f64>,
}

impl FairSelection {
    /// True when the global model's metric could not be measured, which
    /// forces an empty selection.
    pub fn global_absent(&self) -> bool {
        self.global_value.is_none()
    }

    pub fn member_values(&self) -> Vec<f64> {
        self.members
            .iter()
            .filter_map(|&i| self.client_values[i])
            .collect()
    }
}

pub fn fair_client_filter(
    state: &ServerState,
    updates: &[ClientUpdate],
    validation: &TabularDataset,
    metric: FairnessMetric,
) -> Result<FairSelection> {
    let global_value = fairness::model_fairness(&state.theta, validation, metric)?;
    let client_values = updates
        .iter()
        .map(|u| fairness::model_fairness(&u.params, validation, metric))
        .collect::<Result<Vec<_>>>()?;
    Ok(FairSelection::from_values(client_values, global_value))
}

impl FairSelection {
    /// Keeps clients whose value is present and `>=` the global value.
    pub fn from_values(client_values: Vec<Option<f64>>, global_value: Option<f64>) -> Self {
        let members = match global_value {
            Some(g) => client_values
                .iter()
                .enumerate()
                .filter(|(_, v)| matches!(v, Some(f) if *f >= g))
                .map(|(i, _)| i)
                .collect(),
            None => Vec::new(),
        };
        Self {
            members,
            client_values,
            global_value,
        }
    }
}

/// Fairness-weighted mean delta over the fair clients,
/// `sum_k (F_k / F_total) (theta_k - theta_t)`. Zero when the set is empty or
/// every value is zero.
pub fn fair_update_alpha_f(
    state: &ServerState,
    fair_updates: &[&ClientUpdate],
    values: &[f64],
) -> Result<Vec<f64>> {
    if fair_updates.len() != values.len() {
        return Err(CoreError::LengthMismatch {
            what: "fairness values",
            expected: fair_updates.len(),
            actual: values.len(),
        });
    }
    for up in fair_updates {
        state.theta.check_same_layout(&up.params)?;
    }
    let total: f64 = values.iter().sum();
    if fair_updates.is_empty() || total <= 0.0 {
        return Ok(alloc::vec![0.0; state.theta.len()]);
    }
    let weights: Vec<f64> = values.iter().map(|f| f / total).collect();
    Ok(weighted_delta(&state.theta, fair_updates, &weights))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FairFateStep {
    pub step: ServerStep,
    pub selection: FairSelection,
    pub beta: f64,
    pub lambda: f64,
}

/// One round of fair momentum aggregation:
///
/// ```text
/// alpha_F = fairness-weighted delta over clients at least as fair as theta_t
/// alpha_N = sample-weighted delta over all clients
/// v'      = beta_t v + (1 - beta_t) alpha_F
/// theta'  = theta_t + lambda_t v' + (1 - lambda_t) alpha_N
/// ```
pub fn aggregate_fairfate(
    state: &ServerState,
    updates: &[ClientUpdate],
    validation: &TabularDataset,
    cfg: &FairFateConfig,
) -> Result<FairFateStep> {
    cfg.validate()?;
    let t = state.current_round()?;
    check_updates(state, updates)?;
    let selection = fair_client_filter(state, updates, validation, cfg.metric)?;
    let fair: Vec<&ClientUpdate> = selection.members.iter().map(|&i| &updates[i]).collect();
    let alpha_fair = fair_update_alpha_f(state, &fair, &selection.member_values())?;
    let alpha_normal = sample_weighted_delta(state, updates)?;

    let beta = beta_decay(cfg.beta0, t, state.total_rounds);
    let lambda = lambda_schedule(cfg.lambda0, cfg.rho, t, cfg.max_lambda);
    let momentum: Vec<f64> = state
        .momentum
        .iter()
        .zip(&alpha_fair)
        .map(|(v, a)| beta * v + (1.0 - beta) * a)
        .collect();
    let values = state
        .theta
        .values()
        .iter()
        .zip(&momentum)
        .zip(&alpha_normal)
        .map(|((th, v), a)| th + lambda * v + (1.0 - lambda) * a)
        .collect();
    let theta = ModelParams::from_values(state.theta.shape(), values)?;
    Ok(FairFateStep {
        step: ServerStep { theta, momentum },
        selection,
        beta,
        lambda,
    })
}

/// Validation-score weighted mean of client models, weights proportional
/// to `F_k + epsilon` (unmeasurable metrics count as 0).
pub fn aggregate_fedval(
    state: &ServerState,
    updates: &[ClientUpdate],
    validation: &TabularDataset,
    metric: FairnessMetric,
    epsilon: f64,
) -> Result<ModelParams> {
    check_updates(state, updates)?;
    let scores = updates
        .iter()
        .map(|u| Ok(fairness::model_fairness(&u.params, validation, metric)?.unwrap_or(0.0)))
        .collect::<Result<Vec<f64>>>()?;
    fedval_combine(state, updates, &scores, epsilon)
}

pub(crate) fn fedval_combine(
    state: &ServerState,
    updates: &[ClientUpdate],
    scores: &[f64],
    epsilon: f64,
) -> Result<ModelParams> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(CoreError::InvalidConfig("fedval epsilon must be positive"));
    }
    let total: f64 = scores.iter().map(|f| f + epsilon).sum();
    let mut values = alloc::vec![0.0; state.theta.len()];
    for (up, f) in updates.iter().zip(scores) {
        let w = (f + epsilon) / total;
        for (v, p) in values.iter_mut().zip(up.params.values()) {
            *v += w * p;
        }
    }
    ModelParams::from_values(state.theta.shape(), values)
}
