use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("attribute {index} has value {value}, expected a value in [0, 1]")]
    Domain { index: usize, value: f64 },

    #[error("{what} {value} is out of range {range}")]
    Range {
        what: &'static str,
        value: String,
        range: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("structural error: {0}")]
    Structure(String),

    #[error("degenerate weight range: every minterm weight equals {0}")]
    DegenerateRange(f64),

    #[error("partition cell {0} is not covered by the bit tensor")]
    UncoveredCell(u32),

    #[error("relative energy is undefined for a tensor with zero energy")]
    ZeroEnergy,

    #[error("ingestion error in column `{column}`: {message}")]
    Ingest { column: String, message: String },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn range(what: &'static str, value: impl ToString, range: impl ToString) -> Self {
        Error::Range {
            what,
            value: value.to_string(),
            range: range.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Whether the error stems from invalid user input rather than a runtime failure.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Domain { .. }
            | Error::Range { .. }
            | Error::Config(_)
            | Error::Ingest { .. }
            | Error::Parse { .. } => true,
            Error::Stage { source, .. } => source.is_validation(),
            _ => false,
        }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|source| Error::Stage {
            stage,
            source: Box::new(source),
        })
    }
}
