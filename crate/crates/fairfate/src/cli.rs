//! `fairfate` command line.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use fairfate_core::dataset::dataset_summary;
use fairfate_core::partition::partition_clients;
use fairfate_core::seed::{self, derive_seed};
use fairfate_core::stats::{wilcoxon_greater, SIGNIFICANCE_LEVEL};
use fairfate_core::{Matrix, PartitionMode, PartitionSpec, TabularDataset};

use crate::config::{ExperimentConfig, DEFAULT_ACCURACY_SLACK};
use crate::error::{Error, Result};
use crate::harness::{self, run_seed, with_worker_pool};
use crate::ingest::ingest_csv;
use crate::output::{self, read_summary};
use crate::preprocess::{encode_targets, preprocess_and_split};
use crate::schema::DatasetSchema;

#[derive(Debug, Parser)]
#[command(
    name = "fairfate",
    version,
    about = "Fairness-aware federated learning experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment config and write rounds.csv, validation.csv and summary.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Sweep the fair momentum hyperparameter grid against FedAvg.
        #[arg(long)]
        grid: bool,
    },
    /// Per-client (S, Y) proportions of a partition, as CSV.
    PartitionPreview {
        #[arg(long)]
        schema: PathBuf,
        /// CSV to read instead of the schema's data path.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        sensitive: Option<String>,
        /// Dirichlet concentration; omit for an IID split.
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        clients: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// (S, Y) cell shares, positive share and label parity of a dataset.
    Summarize {
        #[arg(long)]
        schema: PathBuf,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        sensitive: Option<String>,
    },
    /// One-sided Wilcoxon signed-rank test that A's final-round metric exceeds B's.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value = "sp")]
        metric: String,
    },
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn dispatch<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    dispatch_to(
        args,
        &mut std::io::stdout().lock(),
        &mut std::io::stderr().lock(),
    )
}

pub fn dispatch_to<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return e.exit_code();
        }
    };
    match execute(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let line = e.to_string().replace('\n', " ");
            let _ = writeln!(err, "error: {line}");
            1
        }
    }
}

fn execute(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Run {
            config,
            out: dir,
            seed,
            grid,
        } => run(&config, &dir, seed, grid, out),
        Command::PartitionPreview {
            schema,
            data,
            sensitive,
            alpha,
            clients,
            seed,
            out: file,
        } => partition_preview(
            &schema,
            data,
            sensitive.as_deref(),
            alpha,
            clients,
            seed,
            file,
            out,
        ),
        Command::Summarize {
            schema,
            data,
            sensitive,
        } => summarize(&schema, data, sensitive.as_deref(), out),
        Command::Compare { a, b, metric } => compare(&a, &b, &metric, out),
    }
}

fn console(out: &mut dyn Write, text: std::fmt::Arguments<'_>) -> Result<()> {
    out.write_fmt(text)
        .and_then(|()| out.write_all(b"\n"))
        .map_err(|e| Error::io("<stdout>", e))
}

macro_rules! say {
    ($out:expr, $($arg:tt)*) => { console($out, format_args!($($arg)*)) };
}

fn fmt_stat(mean: Option<f64>, std: Option<f64>) -> String {
    match (mean, std) {
        (Some(m), Some(s)) => format!("{m:.3}±{s:.3}"),
        _ => "n/a".into(),
    }
}

fn run(
    config: &Path,
    dir: &Path,
    seed: Option<u64>,
    grid: bool,
    out: &mut dyn Write,
) -> Result<()> {
    let mut cfg = ExperimentConfig::load(config)?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    if grid {
        let outcome = with_worker_pool(|| harness::run_grid(&cfg))??;
        let slack = cfg
            .grid
            .as_ref()
            .map_or(DEFAULT_ACCURACY_SLACK, |g| g.accuracy_slack);
        let index = output::write_grid(dir, &cfg, &outcome, slack)?;
        let chosen = &index.points[index.selected];
        let reference = &outcome.reference.summary;
        say!(
            out,
            "fedavg: acc {}",
            fmt_stat(reference.accuracy.mean, reference.accuracy.std)
        )?;
        say!(
            out,
            "selected {} ({:?}): acc {:.3}, {} {:.3}",
            chosen.dir,
            chosen.config,
            chosen.accuracy.unwrap_or(f64::NAN),
            chosen.config.metric,
            chosen.fairness.unwrap_or(f64::NAN)
        )?;
    } else {
        let result = with_worker_pool(|| harness::run_experiment(&cfg))??;
        output::write_experiment(dir, &cfg, &result)?;
        let s = &result.summary;
        say!(
            out,
            "{}: acc {} f1 {} sp {} eo {} eqo {}",
            cfg.algorithm.label(),
            fmt_stat(s.accuracy.mean, s.accuracy.std),
            fmt_stat(s.f1.mean, s.f1.std),
            fmt_stat(s.sp.mean, s.sp.std),
            fmt_stat(s.eo.mean, s.eo.std),
            fmt_stat(s.eqo.mean, s.eqo.std)
        )?;
    }
    say!(out, "results written to {}", dir.display())
}

fn load_schema(path: &Path, data: Option<PathBuf>) -> Result<DatasetSchema> {
    let mut schema = DatasetSchema::load(path)?;
    if let Some(data) = data {
        schema.data = data;
    }
    Ok(schema)
}

#[allow(clippy::too_many_arguments)]
fn partition_preview(
    schema: &Path,
    data: Option<PathBuf>,
    sensitive: Option<&str>,
    alpha: Option<f64>,
    clients: usize,
    seed: u64,
    file: Option<PathBuf>,
    out: &mut dyn Write,
) -> Result<()> {
    let schema = load_schema(schema, data)?;
    let raw = ingest_csv(&schema.data, &schema)?;
    // The same split and partition run 0 of an experiment with this seed uses.
    let run = run_seed(seed, 0);
    let bundle = preprocess_and_split(&raw, &schema, sensitive, run)?;
    let mode = match alpha {
        Some(alpha) => PartitionMode::Dirichlet { alpha },
        None => PartitionMode::Iid,
    };
    let spec = PartitionSpec {
        mode,
        num_clients: clients,
        seed: derive_seed(run, &[seed::PARTITION]),
    };
    let partition = partition_clients(&bundle.train, &spec)?;
    let mut text = String::from("client,rows,s0_y0,s0_y1,s1_y0,s1_y1\n");
    for shard in &partition.shards {
        let mut counts = [0usize; 4];
        for &i in &shard.indices {
            counts[bundle.train.cell(i)] += 1;
        }
        let n = shard.len() as f64;
        text.push_str(&format!("{},{}", shard.client_id, shard.len()));
        for c in counts {
            text.push_str(&format!(",{}", c as f64 / n));
        }
        text.push('\n');
    }
    match file {
        Some(path) => std::fs::write(&path, text).map_err(|e| Error::io(path, e)),
        None => out
            .write_all(text.as_bytes())
            .map_err(|e| Error::io("<stdout>", e)),
    }
}

fn summarize(
    schema: &Path,
    data: Option<PathBuf>,
    sensitive: Option<&str>,
    out: &mut dyn Write,
) -> Result<()> {
    let schema = load_schema(schema, data)?;
    let attr = schema.resolve_sensitive(sensitive)?;
    let raw = ingest_csv(&schema.data, &schema)?;
    let (labels, groups) = encode_targets(&raw, &schema, attr)?;
    let n = labels.len();
    let ds = TabularDataset::new(Matrix::zeros(n, 1), labels, groups)?;
    let s = dataset_summary(&ds)?;
    say!(out, "dataset: {} (sensitive: {})", schema.name, attr.name)?;
    say!(
        out,
        "rows: {} (read {}, filtered {}, dropped for missing values {})",
        raw.rows,
        raw.rows_read,
        raw.filtered,
        raw.dropped_missing
    )?;
    let names = [
        "unprivileged, negative",
        "unprivileged, positive",
        "privileged, negative",
        "privileged, positive",
    ];
    for (name, share) in names.iter().zip(s.cell_share) {
        say!(out, "  {name}: {:.1}%", 100.0 * share)?;
    }
    say!(
        out,
        "positive outcome share: {:.2}%",
        100.0 * s.positive_share
    )?;
    say!(
        out,
        "P[Y=1|S=0] = {:.4}, P[Y=1|S=1] = {:.4}",
        s.positive_rate_unprivileged,
        s.positive_rate_privileged
    )?;
    say!(out, "SP*: {:.4}", s.label_parity)
}

fn compare(a: &Path, b: &Path, metric: &str, out: &mut dyn Write) -> Result<()> {
    let (sa, sb) = (read_summary(a)?, read_summary(b)?);
    let finals = |s: &output::SummaryFile, path: &Path| -> Result<Vec<f64>> {
        let m = s
            .summary
            .metric(metric)
            .ok_or_else(|| Error::Config(format!("unknown metric `{metric}`")))?;
        m.finals
            .iter()
            .copied()
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| {
                Error::Config(format!(
                    "{}: `{metric}` is undefined in some runs",
                    path.display()
                ))
            })
    };
    let (xa, xb) = (finals(&sa, a)?, finals(&sb, b)?);
    if xa.len() != xb.len() {
        return Err(Error::Config(format!(
            "run counts differ: {} vs {}",
            xa.len(),
            xb.len()
        )));
    }
    let w = wilcoxon_greater(&xa, &xb)?;
    let mean = |x: &[f64]| x.iter().sum::<f64>() / x.len() as f64;
    say!(
        out,
        "{metric}: A ({}) mean {:.4}, B ({}) mean {:.4}",
        sa.algorithm,
        mean(&xa),
        sb.algorithm,
        mean(&xb)
    )?;
    say!(
        out,
        "wilcoxon A > B: n = {}, W+ = {}, p = {:.6} ({}), significant at {}: {}",
        w.n,
        w.w_plus,
        w.p_value,
        if w.exact {
            "exact"
        } else {
            "normal approximation"
        },
        SIGNIFICANCE_LEVEL,
        if w.significant() { "yes" } else { "no" }
    )
}
