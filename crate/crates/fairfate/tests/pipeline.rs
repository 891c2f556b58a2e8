use std::path::{Path, PathBuf};

use fairfate::config::{ConfigFile, ExperimentConfig};
use fairfate::harness::{run_experiment, run_seed, simulate, Federation, Simulation};
use fairfate::ingest::ingest_csv;
use fairfate::output::{read_metric_rows, read_summary, write_experiment, MetricRow};
use fairfate::preprocess::{encode_targets, preprocess_and_split};
use fairfate::DatasetSchema;
use fairfate_core::federated::{client_local_update, select_client_subset};
use fairfate_core::nn::init_params;
use fairfate_core::seed::{self, derive_seed};
use fairfate_core::{Algorithm, ClientShard, LocalTrainConfig, Matrix, ModelShape, TabularDataset};

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn compas() -> DatasetSchema {
    DatasetSchema::load(&repo().join("schemas/compas.toml")).unwrap()
}

#[test]
fn compas_ingest_matches_published_size_and_outcome_share() {
    let schema = compas();
    let raw = ingest_csv(&schema.data, &schema).unwrap();
    assert!(raw.rows <= 6167, "{} rows", raw.rows);
    let (labels, _) =
        encode_targets(&raw, &schema, schema.resolve_sensitive(None).unwrap()).unwrap();
    let share = labels.iter().filter(|&&y| y).count() as f64 / labels.len() as f64;
    assert!((share - 0.544).abs() < 0.005, "positive share {share}");
}

#[test]
fn compas_split_is_disjoint_and_scaled_on_train() {
    let schema = compas();
    let raw = ingest_csv(&schema.data, &schema).unwrap();
    let b = preprocess_and_split(&raw, &schema, None, 3).unwrap();
    assert_eq!(
        (b.train.len(), b.validation.len(), b.test.len()),
        (3701, 1233, 1233)
    );
    let mut all: Vec<usize> = [&b.origin.train, &b.origin.validation, &b.origin.test]
        .into_iter()
        .flatten()
        .copied()
        .collect();
    all.sort_unstable();
    all.dedup();
    assert_eq!(all.len(), raw.rows);
    for i in 0..b.train.len() {
        assert!(b
            .train
            .features()
            .row(i)
            .iter()
            .all(|v| (0.0..=1.0).contains(v)));
    }
    assert_eq!(b.feature_names.last().map(String::as_str), Some("race"));
}

fn config(text: &str) -> ExperimentConfig {
    let file: ConfigFile = toml::from_str(text).unwrap();
    ExperimentConfig::resolve(file, &repo()).unwrap()
}

const SMALL: &str = r#"
dataset = "compas"
schema = "schemas/compas.toml"
rounds = 3
runs = 2
seed = 5
[partition]
mode = "dirichlet"
alpha = 1.0
[local]
epochs = 1
[algorithm]
kind = "fed_avg_gr"
"#;

#[test]
fn same_config_gives_identical_records_in_range() {
    let cfg = config(SMALL);
    let a = run_experiment(&cfg).unwrap();
    let b = run_experiment(&cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.records.len(), 6);
    for r in &a.records {
        let t = r.test;
        for v in [Some(t.accuracy), Some(t.f1), t.sp, t.eo, t.eqo]
            .into_iter()
            .flatten()
        {
            assert!((0.0..=1.0).contains(&v));
        }
    }
}

#[test]
fn written_results_read_back() {
    let cfg = config(SMALL);
    let out = run_experiment(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_experiment(dir.path(), &cfg, &out).unwrap();
    let rows = read_metric_rows(&dir.path().join("rounds.csv")).unwrap();
    let expected: Vec<MetricRow> = out
        .records
        .iter()
        .map(|r| MetricRow::new(r.run, r.round, &r.test))
        .collect();
    assert_eq!(rows, expected);
    let summary = read_summary(&dir.path().join("summary.json")).unwrap();
    assert_eq!(summary.summary, out.summary);
    assert_eq!(summary.config.algorithm, Algorithm::FedAvgGr);
    assert_eq!(summary.config.num_clients, 10);
    assert_eq!(summary.config.rounds, 3);
}

#[test]
fn one_round_two_clients_matches_hand_trace() {
    let rows: Vec<Vec<f64>> = (0..12)
        .map(|i| vec![i as f64 / 12.0, (i % 3) as f64])
        .collect();
    let y: Vec<bool> = (0..12).map(|i| i % 2 == 0).collect();
    let s: Vec<bool> = (0..12).map(|i| i < 6).collect();
    let train = TabularDataset::new(Matrix::from_rows(&rows).unwrap(), y, s).unwrap();
    let shards = [
        ClientShard::new(0, (0..6).collect()),
        ClientShard::new(1, (6..12).collect()),
    ];
    let local = LocalTrainConfig {
        learning_rate: 0.1,
        epochs: 3,
        batch_size: 4,
        rng_seed: 0,
    };
    let sim = Simulation {
        clients_per_round: 1,
        rounds: 1,
        hidden_units: 3,
        local,
    };
    let fed = Federation {
        train: &train,
        validation: &train,
        test: &train,
        shards: &shards,
    };
    let run_seed = run_seed(17, 0);
    let trace = simulate(fed, &sim, &Algorithm::FedAvg, 0, run_seed).unwrap();

    // by hand: same init, same selection, one local update, average of one
    let theta0 = init_params(
        ModelShape::new(2, 3).unwrap(),
        derive_seed(run_seed, &[seed::INIT]),
    );
    let mut rng = seed::stream(derive_seed(run_seed, &[seed::SELECT]));
    let k = select_client_subset(2, 1, &mut rng).unwrap()[0];
    let cfg = local.with_seed(derive_seed(run_seed, &[1, k as u64]));
    let update = client_local_update(&theta0, &shards[k], &train, &cfg).unwrap();
    for (a, b) in trace
        .final_state
        .theta
        .values()
        .iter()
        .zip(update.params.values())
    {
        assert!((a - b).abs() < 1e-15);
    }
    assert_eq!(trace.final_state.round, 1);
}
