//! Multi-run federated simulation, summaries and grid search.

use fairfate_core::fairness::evaluate_model;
use fairfate_core::federated::{
    aggregate_round, client_local_update, global_reweigh, local_reweigh, select_client_subset,
    CellCounts, Reweighing,
};
use fairfate_core::nn::init_params;
use fairfate_core::seed::{self, derive_seed};
use fairfate_core::stats::mean_std;
use fairfate_core::{
    Algorithm, ClientShard, CoreError, FairFateConfig, FairnessMetric, FairnessReport,
    LocalTrainConfig, ModelShape, PartitionSpec, ServerState, TabularDataset,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, DEFAULT_ACCURACY_SLACK};
use crate::error::{Error, Result};
use crate::ingest::{ingest_csv, RawTable};
use crate::preprocess::preprocess_and_split;
use crate::schema::DatasetSchema;

/// Caps the worker pool when set to a positive integer.
pub const THREADS_ENV: &str = "FAIRFED_THREADS";

/// Global model quality after one round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub run: usize,
    pub round: usize,
    pub test: FairnessReport,
    pub validation: FairnessReport,
}

/// Final-round statistics of one metric across runs. Runs where the metric
/// is undefined are left out of the mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub finals: Vec<Option<f64>>,
}

impl MetricSummary {
    fn from_finals(finals: Vec<Option<f64>>) -> Self {
        let present: Vec<f64> = finals.iter().flatten().copied().collect();
        let stats = mean_std(&present);
        Self {
            mean: stats.map(|s| s.0),
            std: stats.map(|s| s.1),
            finals,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub runs: usize,
    pub final_round: usize,
    pub accuracy: MetricSummary,
    pub f1: MetricSummary,
    pub sp: MetricSummary,
    pub eo: MetricSummary,
    pub eqo: MetricSummary,
}

impl RunSummary {
    /// `"acc"`, `"f1"`, `"sp"`, `"eo"` or `"eqo"`.
    pub fn metric(&self, name: &str) -> Option<&MetricSummary> {
        match name {
            "acc" | "accuracy" => Some(&self.accuracy),
            "f1" => Some(&self.f1),
            "sp" => Some(&self.sp),
            "eo" => Some(&self.eo),
            "eqo" => Some(&self.eqo),
            _ => None,
        }
    }

    pub fn fairness(&self, metric: FairnessMetric) -> &MetricSummary {
        match metric {
            FairnessMetric::Sp => &self.sp,
            FairnessMetric::Eo => &self.eo,
            FairnessMetric::Eqo => &self.eqo,
        }
    }
}

/// Mean and sample standard deviation of each test metric at round
/// `rounds`, over runs `0..runs`.
pub fn summarize_runs(records: &[RoundRecord], runs: usize, rounds: usize) -> Result<RunSummary> {
    let finals = (0..runs)
        .map(|run| {
            records
                .iter()
                .find(|r| r.run == run && r.round == rounds)
                .map(|r| r.test)
                .ok_or(Error::MissingFinalRound { run })
        })
        .collect::<Result<Vec<_>>>()?;
    let pick = |f: fn(&FairnessReport) -> Option<f64>| {
        MetricSummary::from_finals(finals.iter().map(f).collect())
    };
    Ok(RunSummary {
        runs,
        final_round: rounds,
        accuracy: pick(|r| Some(r.accuracy)),
        f1: pick(|r| Some(r.f1)),
        sp: pick(|r| r.sp),
        eo: pick(|r| r.eo),
        eqo: pick(|r| r.eqo),
    })
}

/// Round-loop settings independent of the data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Simulation {
    pub clients_per_round: usize,
    pub rounds: usize,
    pub hidden_units: usize,
    pub local: LocalTrainConfig,
}

/// Data one run trains and evaluates on. The validation split is only read
/// by the server.
#[derive(Debug, Clone, Copy)]
pub struct Federation<'a> {
    pub train: &'a TabularDataset,
    pub validation: &'a TabularDataset,
    pub test: &'a TabularDataset,
    pub shards: &'a [ClientShard],
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub records: Vec<RoundRecord>,
    pub final_state: ServerState,
}

/// One federated training run. Client `k` in round `t` trains with the
/// stream `derive_seed(run_seed, [t, k])`; updates are aggregated in
/// ascending client order, so the result does not depend on scheduling.
pub fn simulate(
    fed: Federation<'_>,
    sim: &Simulation,
    algorithm: &Algorithm,
    run: usize,
    run_seed: u64,
) -> Result<RunTrace, CoreError> {
    algorithm.validate()?;
    let shape = ModelShape::new(fed.train.dim(), sim.hidden_units)?;
    let theta = init_params(shape, derive_seed(run_seed, &[seed::INIT]));
    let mut state = ServerState::new(theta, sim.rounds);
    let mut select_rng = seed::stream(derive_seed(run_seed, &[seed::SELECT]));
    let mut records = Vec::with_capacity(sim.rounds);

    for t in 1..=sim.rounds {
        let ids = select_client_subset(fed.shards.len(), sim.clients_per_round, &mut select_rng)?;
        let chosen: Vec<&ClientShard> = ids.iter().map(|&k| &fed.shards[k]).collect();
        let shards = reweigh(&chosen, fed.train, algorithm.reweighing())?;
        let updates = shards
            .par_iter()
            .map(|shard| {
                let cfg = sim
                    .local
                    .with_seed(derive_seed(run_seed, &[t as u64, shard.client_id as u64]));
                client_local_update(&state.theta, shard, fed.train, &cfg)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let step = aggregate_round(&state, &updates, fed.validation, algorithm)?;
        state.commit(step);
        records.push(RoundRecord {
            run,
            round: t,
            test: evaluate_model(&state.theta, fed.test)?,
            validation: evaluate_model(&state.theta, fed.validation)?,
        });
    }
    Ok(RunTrace {
        records,
        final_state: state,
    })
}

fn reweigh(
    chosen: &[&ClientShard],
    train: &TabularDataset,
    mode: Reweighing,
) -> Result<Vec<ClientShard>, CoreError> {
    match mode {
        Reweighing::None => Ok(chosen.iter().map(|s| (*s).clone()).collect()),
        Reweighing::Local => chosen
            .iter()
            .map(|s| s.with_weights(local_reweigh(s, train)))
            .collect(),
        Reweighing::Global => {
            let counts: Vec<CellCounts> = chosen
                .iter()
                .map(|s| CellCounts::from_shard(s, train))
                .collect();
            let weights = global_reweigh(&counts)?;
            chosen
                .iter()
                .map(|s| s.with_weights(weights.sample_weights(s, train)))
                .collect()
        }
    }
}

/// A schema and its ingested table, shared by every run.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub schema: DatasetSchema,
    pub raw: RawTable,
}

impl Prepared {
    pub fn load(cfg: &ExperimentConfig) -> Result<Self> {
        let schema = DatasetSchema::load(&cfg.schema_path)?;
        schema.resolve_sensitive(cfg.sensitive.as_deref())?;
        let raw = ingest_csv(&schema.data, &schema)?;
        Ok(Self { schema, raw })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    /// Ordered by run, then round.
    pub records: Vec<RoundRecord>,
    pub summary: RunSummary,
}

/// Seed of run `run` under `master`.
pub fn run_seed(master: u64, run: usize) -> u64 {
    derive_seed(master, &[run as u64])
}

/// Split, partition and train one run.
pub fn run_single(
    cfg: &ExperimentConfig,
    data: &Prepared,
    algorithm: &Algorithm,
    run: usize,
) -> Result<Vec<RoundRecord>> {
    let seed = run_seed(cfg.seed, run);
    let at_run = |source| Error::Run { run, source };
    let bundle = preprocess_and_split(&data.raw, &data.schema, cfg.sensitive.as_deref(), seed)?;
    let spec = PartitionSpec {
        mode: cfg.partition,
        num_clients: cfg.num_clients,
        seed: derive_seed(seed, &[seed::PARTITION]),
    };
    let partition =
        fairfate_core::partition::partition_clients(&bundle.train, &spec).map_err(at_run)?;
    let fed = Federation {
        train: &bundle.train,
        validation: &bundle.validation,
        test: &bundle.test,
        shards: &partition.shards,
    };
    let sim = Simulation {
        clients_per_round: cfg.clients_per_round,
        rounds: cfg.rounds,
        hidden_units: cfg.hidden_units,
        local: cfg.local,
    };
    Ok(simulate(fed, &sim, algorithm, run, seed)
        .map_err(at_run)?
        .records)
}

/// All runs of `algorithm` under `cfg`, in parallel.
pub fn run_algorithm(
    cfg: &ExperimentConfig,
    data: &Prepared,
    algorithm: &Algorithm,
) -> Result<ExperimentOutput> {
    let per_run = (0..cfg.runs)
        .into_par_iter()
        .map(|run| run_single(cfg, data, algorithm, run))
        .collect::<Result<Vec<_>>>()?;
    let records: Vec<RoundRecord> = per_run.into_iter().flatten().collect();
    let summary = summarize_runs(&records, cfg.runs, cfg.rounds)?;
    Ok(ExperimentOutput { records, summary })
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let data = Prepared::load(cfg)?;
    run_algorithm(cfg, &data, &cfg.algorithm)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub config: FairFateConfig,
    pub output: ExperimentOutput,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridOutcome {
    /// FedAvg under the same splits, partitions and seeds.
    pub reference: ExperimentOutput,
    pub points: Vec<GridPoint>,
    pub selected: usize,
}

/// Index of the point with the highest mean fairness among those whose mean
/// accuracy is at least `reference_accuracy - slack`. When none qualifies,
/// the most accurate point. Ties keep the earliest point.
pub fn select_grid_point(
    reference_accuracy: f64,
    points: &[(f64, Option<f64>)],
    slack: f64,
) -> Option<usize> {
    let floor = reference_accuracy - slack;
    let best_by = |key: &dyn Fn(&(f64, Option<f64>)) -> Option<f64>| {
        let mut best: Option<(usize, f64)> = None;
        for (i, p) in points.iter().enumerate() {
            if let Some(v) = key(p) {
                if best.is_none_or(|(_, b)| v > b) {
                    best = Some((i, v));
                }
            }
        }
        best.map(|(i, _)| i)
    };
    best_by(&|&(acc, fair)| fair.filter(|_| acc >= floor))
        .or_else(|| best_by(&|&(acc, _)| Some(acc)))
}

/// Runs FedAvg and every grid point of the fair momentum rule.
pub fn run_grid(cfg: &ExperimentConfig) -> Result<GridOutcome> {
    let points = cfg.grid_points()?;
    let slack = cfg
        .grid
        .as_ref()
        .map_or(DEFAULT_ACCURACY_SLACK, |g| g.accuracy_slack);
    let data = Prepared::load(cfg)?;
    let reference = run_algorithm(cfg, &data, &Algorithm::FedAvg)?;
    let outputs = points
        .par_iter()
        .map(|p| run_algorithm(cfg, &data, &Algorithm::FairFate(*p)))
        .collect::<Result<Vec<_>>>()?;
    let scores: Vec<(f64, Option<f64>)> = points
        .iter()
        .zip(&outputs)
        .map(|(p, o)| {
            (
                o.summary.accuracy.mean.unwrap_or(0.0),
                o.summary.fairness(p.metric).mean,
            )
        })
        .collect();
    let reference_accuracy = reference.summary.accuracy.mean.unwrap_or(0.0);
    let selected = select_grid_point(reference_accuracy, &scores, slack).unwrap_or(0);
    Ok(GridOutcome {
        reference,
        points: points
            .into_iter()
            .zip(outputs)
            .map(|(config, output)| GridPoint { config, output })
            .collect(),
        selected,
    })
}

/// Runs `f` inside a pool sized by `FAIRFED_THREADS`, or on the global pool
/// when the variable is unset.
pub fn with_worker_pool<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(f());
    };
    let threads = value
        .trim()
        .parse::<usize>()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| {
            Error::Config(format!(
                "{THREADS_ENV} must be a positive integer, got `{value}`"
            ))
        })?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}
