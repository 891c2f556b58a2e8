//! Client partitioning of the training split.
//!
//! Dirichlet mode splits each (S, Y) cell independently: draw
//! `p ~ Dir(alpha * 1_K)`, shuffle the cell's rows and hand out contiguous
//! blocks whose sizes are the largest-remainder rounding of `p * count`.
//! Small `alpha` gives very uneven clients; large `alpha` approaches IID.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::dataset::TabularDataset;
use crate::error::{CoreError, Result};
use crate::seed::{self, StreamRng};

/// Redraws allowed when a draw leaves some client without rows.
pub const MAX_PARTITION_ATTEMPTS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum PartitionMode {
    Dirichlet { alpha: f64 },
    Iid,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartitionSpec {
    pub mode: PartitionMode,
    pub num_clients: usize,
    pub seed: u64,
}

/// Row indices into the training split owned by one client, with the
/// per-row loss weights used during local training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientShard {
    pub client_id: usize,
    pub indices: Vec<usize>,
    pub sample_weights: Vec<f64>,
}

impl ClientShard {
    pub fn new(client_id: usize, indices: Vec<usize>) -> Self {
        let sample_weights = alloc::vec![1.0; indices.len()];
        Self {
            client_id,
            indices,
            sample_weights,
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn with_weights(&self, sample_weights: Vec<f64>) -> Result<Self> {
        if sample_weights.len() != self.indices.len() {
            return Err(CoreError::LengthMismatch {
                what: "sample weights",
                expected: self.indices.len(),
                actual: sample_weights.len(),
            });
        }
        Ok(Self {
            client_id: self.client_id,
            indices: self.indices.clone(),
            sample_weights,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub shards: Vec<ClientShard>,
    /// Dirichlet draws per cell (`2*s + y`), each of length K. Empty in IID
    /// mode.
    pub cell_proportions: Vec<Vec<f64>>,
    /// Draws made, including the accepted one.
    pub attempts: usize,
}

/// One draw from a symmetric Dirichlet. `None` if every gamma variate
/// underflowed to zero.
pub fn dirichlet_sample<R: Rng + ?Sized>(alpha: f64, k: usize, rng: &mut R) -> Option<Vec<f64>> {
    let gamma = Gamma::new(alpha, 1.0).ok()?;
    let draws: Vec<f64> = (0..k).map(|_| gamma.sample(rng)).collect();
    let total: f64 = draws.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return None;
    }
    Some(draws.into_iter().map(|g| g / total).collect())
}

/// Integer block sizes summing to `total`: floors of `p_k * total`, with the
/// leftover units going to the largest fractional parts (lower index wins
/// ties).
pub fn largest_remainder(total: usize, proportions: &[f64]) -> Vec<usize> {
    let quotas: Vec<f64> = proportions.iter().map(|p| p * total as f64).collect();
    let mut sizes: Vec<usize> = quotas.iter().map(|q| *q as usize).collect();
    let assigned: usize = sizes.iter().sum();
    let mut order: Vec<usize> = (0..proportions.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - sizes[a] as f64;
        let fb = quotas[b] - sizes[b] as f64;
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    // Floors can only undershoot; rounding error in the proportions could in
    // principle overshoot, which the trim below absorbs.
    if assigned <= total {
        for &k in order.iter().cycle().take(total - assigned) {
            sizes[k] += 1;
        }
    } else {
        let mut excess = assigned - total;
        for &k in order.iter().rev() {
            if excess == 0 {
                break;
            }
            if sizes[k] > 0 {
                sizes[k] -= 1;
                excess -= 1;
            }
        }
    }
    sizes
}

fn cell_rows(train: &TabularDataset) -> [Vec<usize>; 4] {
    let mut cells: [Vec<usize>; 4] = Default::default();
    for i in 0..train.len() {
        cells[train.cell(i)].push(i);
    }
    cells
}

fn dirichlet_attempt(
    cells: &[Vec<usize>; 4],
    alpha: f64,
    k: usize,
    rng: &mut StreamRng,
) -> Option<(Vec<Vec<usize>>, Vec<Vec<f64>>)> {
    let mut assigned: Vec<Vec<usize>> = alloc::vec![Vec::new(); k];
    let mut proportions = Vec::with_capacity(4);
    for rows in cells {
        let p = dirichlet_sample(alpha, k, rng)?;
        let mut rows = rows.clone();
        rows.shuffle(rng);
        let mut start = 0;
        for (client, size) in largest_remainder(rows.len(), &p).into_iter().enumerate() {
            assigned[client].extend_from_slice(&rows[start..start + size]);
            start += size;
        }
        proportions.push(p);
    }
    Some((assigned, proportions))
}

pub fn partition_clients(train: &TabularDataset, spec: &PartitionSpec) -> Result<Partition> {
    let k = spec.num_clients;
    if k < 2 {
        return Err(CoreError::InvalidConfig(
            "at least two clients are required",
        ));
    }
    if k > train.len() {
        return Err(CoreError::TooManyClients {
            clients: k,
            rows: train.len(),
        });
    }
    let finish = |mut assigned: Vec<Vec<usize>>, cell_proportions, attempts| {
        let shards = assigned
            .iter_mut()
            .enumerate()
            .map(|(client, rows)| {
                rows.sort_unstable();
                ClientShard::new(client, core::mem::take(rows))
            })
            .collect();
        Partition {
            shards,
            cell_proportions,
            attempts,
        }
    };
    match spec.mode {
        PartitionMode::Iid => {
            let mut rng = seed::stream(seed::derive_seed(spec.seed, &[0]));
            let mut rows: Vec<usize> = (0..train.len()).collect();
            rows.shuffle(&mut rng);
            let (base, extra) = (rows.len() / k, rows.len() % k);
            let mut assigned = Vec::with_capacity(k);
            let mut start = 0;
            for client in 0..k {
                let size = base + usize::from(client < extra);
                assigned.push(rows[start..start + size].to_vec());
                start += size;
            }
            Ok(finish(assigned, Vec::new(), 1))
        }
        PartitionMode::Dirichlet { alpha } => {
            if !(alpha > 0.0 && alpha.is_finite()) {
                return Err(CoreError::InvalidConfig("dirichlet alpha must be positive"));
            }
            let cells = cell_rows(train);
            for attempt in 0..MAX_PARTITION_ATTEMPTS {
                let mut rng = seed::stream(seed::derive_seed(spec.seed, &[attempt as u64]));
                if let Some((assigned, proportions)) = dirichlet_attempt(&cells, alpha, k, &mut rng)
                {
                    if assigned.iter().all(|rows| !rows.is_empty()) {
                        return Ok(finish(assigned, proportions, attempt + 1));
                    }
                }
            }
            Err(CoreError::PartitionExhausted {
                attempts: MAX_PARTITION_ATTEMPTS,
            })
        }
    }
}
