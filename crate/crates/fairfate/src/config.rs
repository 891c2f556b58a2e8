//! Experiment configuration files.

use std::path::{Path, PathBuf};

use fairfate_core::{Algorithm, FairFateConfig, FairnessMetric, LocalTrainConfig, PartitionMode};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_ROUNDS: usize = 100;
pub const DEFAULT_RUNS: usize = 10;
/// Grid points must keep mean accuracy within this margin of FedAvg.
pub const DEFAULT_ACCURACY_SLACK: f64 = 0.07;

/// `(clients, clients per round)` for the benchmark datasets.
pub fn default_clients(dataset: &str) -> Option<(usize, usize)> {
    match dataset {
        "compas" => Some((10, 3)),
        "adult" => Some((15, 5)),
        "law_school" | "law" => Some((12, 4)),
        "dutch_census" | "dutch" => Some((20, 6)),
        _ => None,
    }
}

/// The file as written; see [`ExperimentConfig`] for the resolved form.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub dataset: String,
    /// Relative to the config file unless absolute.
    pub schema: PathBuf,
    #[serde(default)]
    pub sensitive: Option<String>,
    pub partition: PartitionMode,
    #[serde(default)]
    pub num_clients: Option<usize>,
    #[serde(default)]
    pub clients_per_round: Option<usize>,
    #[serde(default = "default_rounds")]
    pub rounds: usize,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_hidden")]
    pub hidden_units: usize,
    #[serde(default)]
    pub local: LocalTrainConfig,
    pub algorithm: Algorithm,
    #[serde(default)]
    pub grid: Option<GridSpec>,
}

fn default_rounds() -> usize {
    DEFAULT_ROUNDS
}

fn default_runs() -> usize {
    DEFAULT_RUNS
}

fn default_hidden() -> usize {
    fairfate_core::ModelShape::DEFAULT_HIDDEN
}

/// Hyperparameter lists for the fair momentum rule. Unset lists take the
/// standard values; an unset metric list keeps the algorithm's metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default = "GridSpec::default_lambda0")]
    pub lambda0: Vec<f64>,
    #[serde(default = "GridSpec::default_rho")]
    pub rho: Vec<f64>,
    #[serde(default = "GridSpec::default_max_lambda")]
    pub max_lambda: Vec<f64>,
    #[serde(default = "GridSpec::default_beta0")]
    pub beta0: Vec<f64>,
    #[serde(default)]
    pub metric: Vec<FairnessMetric>,
    #[serde(default = "GridSpec::default_slack")]
    pub accuracy_slack: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            lambda0: Self::default_lambda0(),
            rho: Self::default_rho(),
            max_lambda: Self::default_max_lambda(),
            beta0: Self::default_beta0(),
            metric: Vec::new(),
            accuracy_slack: DEFAULT_ACCURACY_SLACK,
        }
    }
}

impl GridSpec {
    fn default_lambda0() -> Vec<f64> {
        vec![0.1, 0.5]
    }
    fn default_rho() -> Vec<f64> {
        vec![0.04, 0.05]
    }
    fn default_max_lambda() -> Vec<f64> {
        vec![0.8, 0.9, 1.0]
    }
    fn default_beta0() -> Vec<f64> {
        vec![0.8, 0.9, 0.99]
    }
    fn default_slack() -> f64 {
        DEFAULT_ACCURACY_SLACK
    }

    /// Cross product in the order metric, λ0, ρ, MAX, β0 (last varies
    /// fastest).
    pub fn points(&self, base: &FairFateConfig) -> Vec<FairFateConfig> {
        let metrics = if self.metric.is_empty() {
            vec![base.metric]
        } else {
            self.metric.clone()
        };
        let mut out = Vec::new();
        for &metric in &metrics {
            for &lambda0 in &self.lambda0 {
                for &rho in &self.rho {
                    for &max_lambda in &self.max_lambda {
                        for &beta0 in &self.beta0 {
                            out.push(FairFateConfig {
                                beta0,
                                lambda0,
                                rho,
                                max_lambda,
                                metric,
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

/// Fully resolved settings; this is what `summary.json` echoes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: String,
    /// As written in the config file.
    pub schema: PathBuf,
    pub sensitive: Option<String>,
    pub partition: PartitionMode,
    pub num_clients: usize,
    pub clients_per_round: usize,
    pub rounds: usize,
    pub runs: usize,
    pub seed: u64,
    pub hidden_units: usize,
    pub local: LocalTrainConfig,
    pub algorithm: Algorithm,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    /// Schema location used for loading.
    #[serde(skip)]
    pub schema_path: PathBuf,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: ConfigFile = toml::from_str(&text).map_err(|source| Error::Toml {
            path: path.into(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::resolve(file, base)
    }

    /// Fills dataset defaults and checks every bound. `base` is the
    /// directory relative schema paths start from.
    pub fn resolve(file: ConfigFile, base: &Path) -> Result<Self> {
        let defaults = default_clients(&file.dataset);
        let (num_clients, clients_per_round) = match (
            file.num_clients,
            file.clients_per_round,
            defaults,
        ) {
            (Some(k), Some(m), _) => (k, m),
            (k, m, Some((dk, dm))) => (k.unwrap_or(dk), m.unwrap_or(dm)),
            _ => return Err(Error::Config(format!(
                "dataset `{}` has no default client counts; set num_clients and clients_per_round",
                file.dataset
            ))),
        };
        let schema_path = if file.schema.is_relative() {
            base.join(&file.schema)
        } else {
            file.schema.clone()
        };
        let cfg = Self {
            dataset: file.dataset,
            schema: file.schema,
            sensitive: file.sensitive,
            partition: file.partition,
            num_clients,
            clients_per_round,
            rounds: file.rounds,
            runs: file.runs,
            seed: file.seed,
            hidden_units: file.hidden_units,
            local: file.local,
            algorithm: file.algorithm,
            grid: file.grid,
            schema_path,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::Config(msg.into()));
        if self.num_clients < 2 {
            return fail("num_clients must be at least 2");
        }
        if self.clients_per_round == 0 || self.clients_per_round >= self.num_clients {
            return fail("clients_per_round must lie in [1, num_clients)");
        }
        if self.rounds == 0 || self.runs == 0 {
            return fail("rounds and runs must be positive");
        }
        if self.hidden_units == 0 {
            return fail("hidden_units must be positive");
        }
        if let PartitionMode::Dirichlet { alpha } = self.partition {
            if !(alpha > 0.0 && alpha.is_finite()) {
                return fail("partition alpha must be positive");
            }
        }
        self.local.validate()?;
        self.algorithm.validate()?;
        if let Some(grid) = &self.grid {
            let lists = [&grid.lambda0, &grid.rho, &grid.max_lambda, &grid.beta0];
            if lists.iter().any(|l| l.is_empty()) {
                return fail("grid lists must be non-empty");
            }
            if lists.iter().flat_map(|l| l.iter()).any(|v| !(*v > 0.0)) {
                return fail("grid values must be positive");
            }
        }
        Ok(())
    }

    /// The fair momentum settings a grid expands around.
    pub fn grid_points(&self) -> Result<Vec<FairFateConfig>> {
        let Algorithm::FairFate(base) = self.algorithm else {
            return Err(Error::Config(
                "grid mode needs algorithm kind `fair_fate`".into(),
            ));
        };
        let grid = self.grid.clone().unwrap_or_default();
        let points = grid.points(&base);
        for p in &points {
            p.validate()?;
        }
        Ok(points)
    }
}
