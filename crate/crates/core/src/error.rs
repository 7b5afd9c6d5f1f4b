use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate paper_id `{0}`")]
    DuplicatePaper(String),

    #[error("duplicate journal_id `{0}` in JIF table")]
    DuplicateJournal(String),

    #[error("duplicate item_id `{0}` in journal item file")]
    DuplicateItem(String),

    #[error("window year {year} outside 1..={horizon}")]
    WindowYear { year: u32, horizon: u32 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("journal `{0}` has no citable items in the counting window")]
    NoCitableItems(String),

    #[error("paper `{0}` is not in any eligible reference set")]
    PaperExcluded(String),

    #[error("no percentile for paper `{paper_id}` at year {year}")]
    MissingPercentile { paper_id: String, year: u32 },

    #[error("insufficient data: {n} rows for {params} parameters")]
    InsufficientData { n: usize, params: usize },

    #[error("design matrix is rank deficient (covariate `{covariate}`, condition estimate {condition:.3e})")]
    RankDeficient { covariate: String, condition: f64 },

    #[error("year {year}, model {model}: {source}")]
    Sweep {
        year: u32,
        model: u8,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
