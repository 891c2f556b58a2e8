use std::path::PathBuf;

use fairfate_core::CoreError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{}: {source}", path.display())]
    Toml {
        path: PathBuf,
        #[source]
        source: toml::de::Error,
    },
    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("column `{column}`, data row {row}: cannot parse `{value}` as a number")]
    ParseNumeric {
        column: String,
        row: usize,
        value: String,
    },
    #[error("no data rows")]
    NoDataRows,
    #[error("column `{0}` has a single distinct value")]
    SingleValued(String),
    #[error("unknown sensitive attribute `{0}`")]
    UnknownSensitive(String),
    #[error("invalid schema: {0}")]
    Schema(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("run {run} has no record for the final round")]
    MissingFinalRound { run: usize },
    #[error("run {run}: {source}")]
    Run {
        run: usize,
        #[source]
        source: CoreError,
    },
    #[error("{0}")]
    Core(#[from] CoreError),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Self::Csv {
            path: path.into(),
            source,
        }
    }
}
