//! Result files: `rounds.csv`, `validation.csv`, `summary.json` and, in
//! grid mode, `grid.json`.

use std::fs;
use std::path::Path;

use fairfate_core::{FairFateConfig, FairnessReport};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::harness::{ExperimentOutput, GridOutcome, RoundRecord, RunSummary};

pub const ROUNDS_FILE: &str = "rounds.csv";
pub const VALIDATION_FILE: &str = "validation.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const GRID_FILE: &str = "grid.json";

/// One line of `rounds.csv` / `validation.csv`. Undefined metrics are empty
/// cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub run: usize,
    pub round: usize,
    pub acc: f64,
    pub f1: f64,
    pub sp: Option<f64>,
    pub eo: Option<f64>,
    pub eqo: Option<f64>,
}

impl MetricRow {
    pub fn new(run: usize, round: usize, r: &FairnessReport) -> Self {
        Self {
            run,
            round,
            acc: r.accuracy,
            f1: r.f1,
            sp: r.sp,
            eo: r.eo,
            eqo: r.eqo,
        }
    }

    pub fn report(&self) -> FairnessReport {
        FairnessReport {
            accuracy: self.acc,
            f1: self.f1,
            sp: self.sp,
            eo: self.eo,
            eqo: self.eqo,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryFile {
    pub algorithm: String,
    pub config: ExperimentConfig,
    pub summary: RunSummary,
}

pub fn write_metric_rows(path: &Path, rows: impl IntoIterator<Item = MetricRow>) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| Error::csv(path, e))?;
    w.write_record(["run", "round", "acc", "f1", "sp", "eo", "eqo"])
        .map_err(|e| Error::csv(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_metric_rows(path: &Path) -> Result<Vec<MetricRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    r.deserialize()
        .map(|row| row.map_err(|e| Error::csv(path, e)))
        .collect()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        path: path.into(),
        source,
    })?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_summary(path: &Path) -> Result<SummaryFile> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.into(),
        source,
    })
}

/// Writes the three per-experiment files into `out_dir`, creating it.
pub fn write_results(
    out_dir: &Path,
    config: &ExperimentConfig,
    algorithm: &str,
    records: &[RoundRecord],
    summary: &RunSummary,
) -> Result<()> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    write_metric_rows(
        &out_dir.join(ROUNDS_FILE),
        records
            .iter()
            .map(|r| MetricRow::new(r.run, r.round, &r.test)),
    )?;
    write_metric_rows(
        &out_dir.join(VALIDATION_FILE),
        records
            .iter()
            .map(|r| MetricRow::new(r.run, r.round, &r.validation)),
    )?;
    write_json(
        &out_dir.join(SUMMARY_FILE),
        &SummaryFile {
            algorithm: algorithm.into(),
            config: config.clone(),
            summary: summary.clone(),
        },
    )
}

pub fn write_experiment(
    out_dir: &Path,
    config: &ExperimentConfig,
    output: &ExperimentOutput,
) -> Result<()> {
    write_results(
        out_dir,
        config,
        &config.algorithm.label(),
        &output.records,
        &output.summary,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridEntry {
    pub dir: String,
    pub config: FairFateConfig,
    pub accuracy: Option<f64>,
    pub fairness: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridIndex {
    pub reference_dir: String,
    pub reference_accuracy: Option<f64>,
    pub accuracy_slack: f64,
    pub selected: usize,
    pub points: Vec<GridEntry>,
}

/// `out_dir/fedavg/`, `out_dir/point_NN/` per grid point, and `grid.json`
/// naming the selected point.
pub fn write_grid(
    out_dir: &Path,
    config: &ExperimentConfig,
    grid: &GridOutcome,
    slack: f64,
) -> Result<GridIndex> {
    let mut reference_cfg = config.clone();
    reference_cfg.algorithm = fairfate_core::Algorithm::FedAvg;
    reference_cfg.grid = None;
    write_experiment(&out_dir.join("fedavg"), &reference_cfg, &grid.reference)?;
    let mut points = Vec::with_capacity(grid.points.len());
    for (i, p) in grid.points.iter().enumerate() {
        let dir = format!("point_{i:02}");
        let mut cfg = config.clone();
        cfg.algorithm = fairfate_core::Algorithm::FairFate(p.config);
        cfg.grid = None;
        write_experiment(&out_dir.join(&dir), &cfg, &p.output)?;
        points.push(GridEntry {
            dir,
            config: p.config,
            accuracy: p.output.summary.accuracy.mean,
            fairness: p.output.summary.fairness(p.config.metric).mean,
        });
    }
    let index = GridIndex {
        reference_dir: "fedavg".into(),
        reference_accuracy: grid.reference.summary.accuracy.mean,
        accuracy_slack: slack,
        selected: grid.selected,
        points,
    };
    write_json(&out_dir.join(GRID_FILE), &index)?;
    Ok(index)
}
