use alloc::vec::Vec;

use rand::seq::{index, SliceRandom};
use rand::Rng;

use crate::dataset::TabularDataset;
use crate::error::{CoreError, Result};
use crate::nn::{self, LocalTrainConfig};
use crate::params::ModelParams;
use crate::partition::ClientShard;
use crate::seed;

use super::ClientUpdate;

/// Mini-batch SGD on one client's shard, starting from the global model.
///
/// Batch order is reshuffled every epoch from `cfg.rng_seed`; the last
/// partial batch is kept. Each batch uses the shard's sample weights.
pub fn client_local_update(
    global: &ModelParams,
    shard: &ClientShard,
    train: &TabularDataset,
    cfg: &LocalTrainConfig,
) -> Result<ClientUpdate> {
    if shard.is_empty() {
        return Err(CoreError::EmptyShard);
    }
    cfg.validate()?;
    if shard.sample_weights.len() != shard.len() {
        return Err(CoreError::LengthMismatch {
            what: "sample weights",
            expected: shard.len(),
            actual: shard.sample_weights.len(),
        });
    }
    if let Some(&bad) = shard.indices.iter().find(|&&i| i >= train.len()) {
        return Err(CoreError::LengthMismatch {
            what: "training split",
            expected: bad + 1,
            actual: train.len(),
        });
    }
    if train.dim() != global.shape().input_dim {
        return Err(CoreError::DimensionMismatch {
            expected: global.shape().input_dim,
            actual: train.dim(),
        });
    }

    let mut rng = seed::stream(cfg.rng_seed);
    let mut params = global.clone();
    let mut order: Vec<usize> = (0..shard.len()).collect();
    let mut rows = Vec::with_capacity(cfg.batch_size);
    let mut weights = Vec::with_capacity(cfg.batch_size);
    let mut hidden = alloc::vec![0.0; global.shape().hidden_dim];
    let mut grad = alloc::vec![0.0; global.len()];
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            rows.clear();
            weights.clear();
            for &pos in batch {
                rows.push(shard.indices[pos]);
                weights.push(shard.sample_weights[pos]);
            }
            nn::batch_loss_grad(
                &params,
                train.features(),
                train.labels(),
                &weights,
                &rows,
                &mut hidden,
                &mut grad,
            )?;
            for (p, g) in params.values_mut().iter_mut().zip(&grad) {
                *p -= cfg.learning_rate * g;
            }
        }
    }
    if params.values().iter().any(|v| !v.is_finite()) {
        return Err(CoreError::NonFinite("client parameters"));
    }
    Ok(ClientUpdate {
        client_id: shard.client_id,
        params,
        num_samples: shard.len(),
    })
}

/// Uniform sample of `per_round` distinct client ids out of `num_clients`,
/// returned in ascending order.
pub fn select_client_subset<R: Rng + ?Sized>(
    num_clients: usize,
    per_round: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if per_round == 0 || per_round >= num_clients {
        return Err(CoreError::SubsetTooLarge {
            requested: per_round,
            available: num_clients,
        });
    }
    let mut ids = index::sample(rng, num_clients, per_round).into_vec();
    ids.sort_unstable();
    Ok(ids)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Matrix;
    use crate::params::ModelShape;
    use alloc::vec;

    fn train() -> TabularDataset {
        let x = Matrix::new(4, 2, vec![0.1, 0.9, 0.4, 0.2, 0.8, 0.5, 0.3, 0.3]).unwrap();
        TabularDataset::new(
            x,
            vec![true, false, true, false],
            vec![true, true, false, false],
        )
        .unwrap()
    }

    #[test]
    fn zero_epochs_or_zero_lr_is_identity() {
        let global = nn::init_params(ModelShape::new(2, 3).unwrap(), 5);
        let shard = ClientShard::new(0, vec![0, 1, 2]);
        let cfg = LocalTrainConfig {
            epochs: 0,
            ..LocalTrainConfig::default()
        };
        let up = client_local_update(&global, &shard, &train(), &cfg).unwrap();
        assert_eq!(up.params, global);
        assert_eq!(up.num_samples, 3);
        let cfg = LocalTrainConfig {
            learning_rate: 0.0,
            ..LocalTrainConfig::default()
        };
        assert_eq!(
            client_local_update(&global, &shard, &train(), &cfg)
                .unwrap()
                .params,
            global
        );
    }

    #[test]
    fn empty_shard_is_an_error() {
        let global = ModelParams::zeros(ModelShape::new(2, 3).unwrap());
        let shard = ClientShard::new(0, vec![]);
        assert_eq!(
            client_local_update(&global, &shard, &train(), &LocalTrainConfig::default()),
            Err(CoreError::EmptyShard)
        );
    }

    #[test]
    fn subset_selection() {
        let mut rng = seed::stream(11);
        let ids = select_client_subset(10, 3, &mut rng).unwrap();
        assert_eq!(ids.len(), 3);
        assert!(ids.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(
            ids,
            select_client_subset(10, 3, &mut seed::stream(11)).unwrap()
        );
        assert_eq!(select_client_subset(5, 1, &mut rng).unwrap().len(), 1);
        assert!(select_client_subset(3, 3, &mut rng).is_err());
    }
}
