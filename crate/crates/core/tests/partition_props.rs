use fairfate_core::partition::{partition_clients, PartitionMode, PartitionSpec};
use fairfate_core::{Matrix, TabularDataset};
use proptest::prelude::*;

fn dataset(n: usize, salt: u64) -> TabularDataset {
    let mut state = salt;
    let mut bit = move || {
        state = fairfate_core::seed::mix(state);
        state & 1 == 1
    };
    let labels = (0..n).map(|_| bit()).collect();
    let sensitive = (0..n).map(|_| bit()).collect();
    TabularDataset::new(Matrix::zeros(n, 1), labels, sensitive).unwrap()
}

fn cell_counts(ds: &TabularDataset, rows: &[usize]) -> [usize; 4] {
    let mut c = [0; 4];
    for &i in rows {
        c[ds.cell(i)] += 1;
    }
    c
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn shards_are_disjoint_and_exhaustive(
        alpha in 0.2f64..50.0,
        k in 2usize..=12,
        seed in any::<u64>(),
        salt in any::<u64>(),
    ) {
        let ds = dataset(600, salt);
        let spec = PartitionSpec { mode: PartitionMode::Dirichlet { alpha }, num_clients: k, seed };
        let part = partition_clients(&ds, &spec).unwrap();
        prop_assert_eq!(part.shards.len(), k);
        let mut all: Vec<usize> = part.shards.iter().flat_map(|s| s.indices.iter().copied()).collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..600).collect::<Vec<_>>());
        for shard in &part.shards {
            prop_assert!(!shard.is_empty());
            prop_assert!(shard.sample_weights.iter().all(|w| *w == 1.0));
        }
        prop_assert_eq!(part.cell_proportions.len(), 4);
        for p in &part.cell_proportions {
            prop_assert_eq!(p.len(), k);
            prop_assert!(p.iter().all(|v| *v >= 0.0));
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        // per-cell sums are exact
        let total = cell_counts(&ds, &(0..600).collect::<Vec<_>>());
        let mut summed = [0; 4];
        for shard in &part.shards {
            let c = cell_counts(&ds, &shard.indices);
            for i in 0..4 {
                summed[i] += c[i];
            }
        }
        prop_assert_eq!(summed, total);
    }

    #[test]
    fn partitioning_is_deterministic(alpha in 0.3f64..5.0, seed in any::<u64>()) {
        let ds = dataset(300, 5);
        let spec = PartitionSpec { mode: PartitionMode::Dirichlet { alpha }, num_clients: 5, seed };
        prop_assert_eq!(partition_clients(&ds, &spec).unwrap(), partition_clients(&ds, &spec).unwrap());
    }
}

#[test]
fn huge_alpha_approaches_iid_shares() {
    let ds = dataset(4000, 17);
    let k = 10;
    let spec = PartitionSpec {
        mode: PartitionMode::Dirichlet { alpha: 1e6 },
        num_clients: k,
        seed: 99,
    };
    let part = partition_clients(&ds, &spec).unwrap();
    let total = cell_counts(&ds, &(0..4000).collect::<Vec<_>>());
    for shard in &part.shards {
        let c = cell_counts(&ds, &shard.indices);
        for cell in 0..4 {
            let share = c[cell] as f64 / total[cell] as f64;
            assert!((share - 0.1).abs() <= 0.02, "cell {cell}: share {share}");
        }
    }
}

#[test]
fn small_alpha_is_heterogeneous() {
    let ds = dataset(2000, 3);
    let spec = PartitionSpec {
        mode: PartitionMode::Dirichlet { alpha: 0.5 },
        num_clients: 10,
        seed: 4,
    };
    let part = partition_clients(&ds, &spec).unwrap();
    let sizes: Vec<usize> = part.shards.iter().map(|s| s.len()).collect();
    let (min, max) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
    assert!(max > &(2 * min), "sizes {sizes:?}");
}
