//! Sample reweighing: each row in cell (s, y) gets
//! `P(S=s) P(Y=y) / P(S=s, Y=y)`, which makes S and Y independent under
//! the weighted empirical distribution.

use alloc::vec::Vec;
use core::ops::Add;

use serde::{Deserialize, Serialize};

use crate::dataset::TabularDataset;
use crate::error::{CoreError, Result};
use crate::partition::ClientShard;

/// Row counts per (S, Y) cell, indexed `2*s + y`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellCounts(pub [u64; 4]);

impl CellCounts {
    pub fn from_shard(shard: &ClientShard, train: &TabularDataset) -> Self {
        let mut counts = [0u64; 4];
        for &i in &shard.indices {
            counts[train.cell(i)] += 1;
        }
        Self(counts)
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    /// Weight per cell; cells without rows get 1.
    pub fn weights(&self) -> CellWeights {
        let c = self.0;
        let n = self.total() as f64;
        let group = [(c[0] + c[1]) as f64, (c[2] + c[3]) as f64];
        let label = [(c[0] + c[2]) as f64, (c[1] + c[3]) as f64];
        let mut w = [1.0; 4];
        for (cell, weight) in w.iter_mut().enumerate() {
            if c[cell] > 0 {
                *weight = group[cell / 2] * label[cell % 2] / (n * c[cell] as f64);
            }
        }
        CellWeights(w)
    }
}

impl Add for CellCounts {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Self(core::array::from_fn(|i| self.0[i] + rhs.0[i]))
    }
}

/// Sample weight per (S, Y) cell, indexed `2*s + y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellWeights(pub [f64; 4]);

impl CellWeights {
    pub fn sample_weights(&self, shard: &ClientShard, train: &TabularDataset) -> Vec<f64> {
        shard
            .indices
            .iter()
            .map(|&i| self.0[train.cell(i)])
            .collect()
    }
}

/// Weights estimated from the shard's own (S, Y) counts.
pub fn local_reweigh(shard: &ClientShard, train: &TabularDataset) -> Vec<f64> {
    CellCounts::from_shard(shard, train)
        .weights()
        .sample_weights(shard, train)
}

/// Cell weights from counts pooled over all participating clients. The same
/// table applies to every client's rows.
pub fn global_reweigh(per_client: &[CellCounts]) -> Result<CellWeights> {
    if per_client.is_empty() {
        return Err(CoreError::EmptyUpdates);
    }
    let pooled = per_client
        .iter()
        .copied()
        .fold(CellCounts::default(), |acc, c| acc + c);
    Ok(pooled.weights())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Matrix;
    use alloc::vec;

    fn ds(cells: &[usize]) -> TabularDataset {
        let n = cells.len();
        TabularDataset::new(
            Matrix::zeros(n, 1),
            cells.iter().map(|c| c % 2 == 1).collect(),
            cells.iter().map(|c| c / 2 == 1).collect(),
        )
        .unwrap()
    }

    #[test]
    fn independent_shard_gets_unit_weights() {
        let train = ds(&[0, 1, 2, 3, 0, 1, 2, 3]);
        let shard = ClientShard::new(0, (0..8).collect());
        assert_eq!(local_reweigh(&shard, &train), vec![1.0; 8]);
    }

    #[test]
    fn four_row_shard_by_hand() {
        // cells (0,0) x2, (0,1) x1, (1,0) x1, (1,1) x0
        let train = ds(&[0, 0, 1, 2]);
        let shard = ClientShard::new(0, vec![0, 1, 2, 3]);
        // n=4, n_s0=3, n_s1=1, n_y0=3, n_y1=1
        // w00 = 3*3/(4*2) = 9/8, w01 = 3*1/(4*1) = 3/4, w10 = 1*3/(4*1) = 3/4
        assert_eq!(
            local_reweigh(&shard, &train),
            vec![1.125, 1.125, 0.75, 0.75]
        );
    }

    #[test]
    fn pooled_counts_by_hand() {
        let w = global_reweigh(&[CellCounts([10, 5, 5, 10])]).unwrap();
        // n=30, every marginal 15: w = 225 / (30 * c)
        assert_eq!(w.0, [0.75, 1.5, 1.5, 0.75]);
        let w = global_reweigh(&[CellCounts([1, 4, 0, 0]), CellCounts([0, 0, 2, 8])]).unwrap();
        assert_eq!(w.0, [1.0; 4]);
    }

    #[test]
    fn single_client_pooling_matches_local() {
        let train = ds(&[0, 0, 0, 1, 2, 3, 3]);
        let shard = ClientShard::new(0, (0..7).collect());
        let pooled = global_reweigh(&[CellCounts::from_shard(&shard, &train)]).unwrap();
        assert_eq!(
            pooled.sample_weights(&shard, &train),
            local_reweigh(&shard, &train)
        );
        assert!(global_reweigh(&[]).is_err());
    }
}
