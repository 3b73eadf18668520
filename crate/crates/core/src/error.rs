use std::path::PathBuf;

use chrono::NaiveDate;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("county name is empty after trimming")]
    EmptyName,
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("parse error at row {row}, column `{column}`: {detail}")]
    Parse {
        row: usize,
        column: String,
        detail: String,
    },
    #[error("duplicate county `{0}`")]
    DuplicateCounty(String),
    #[error("name column `{0}` not found in header")]
    MissingNameColumn(String),
    #[error("column `{0}` has zero variance")]
    DegenerateColumn(String),
    #[error("need at least {needed} feature columns, got {got}")]
    TooFewColumns { needed: usize, got: usize },
    #[error("no observations for county `{0}`")]
    EmptySeries(String),
    #[error("period does not overlap the series")]
    EmptySlice,
    #[error("invalid period: {0}")]
    InvalidPeriod(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("k = {k} exceeds the number of rows ({n})")]
    KTooLarge { k: usize, n: usize },
    #[error("feature matrix has no rows")]
    EmptyMatrix,
    #[error("elbow curve needs at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("silhouette needs at least two non-empty clusters")]
    SingleCluster,

    #[error("value {0} has no leading digit (must be positive and finite)")]
    NonPositive(f64),
    #[error("no positive finite values left after filtering")]
    EmptyAfterFilter,
    #[error("cumulative total {total} does not exceed the audit threshold {min_total}")]
    SkippedBelowThreshold { total: u64, min_total: u64 },

    #[error("series too short: need more than {needed} observations, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("series has zero variance")]
    ZeroVariance,
    #[error("Durbin-Levinson recursion broke down at lag {0}")]
    NumericalBreakdown(usize),
    #[error("parameters violate stationarity or invertibility")]
    NonInvertibleParams,
    #[error("series is constant after differencing")]
    DegenerateSeries,
    #[error("every candidate model failed to fit")]
    AllFitsFailed,
    #[error("forecast horizon must be at least 1")]
    HorizonZero,
    #[error("holdout of {holdout} leaves at most 10 training points (series length {len})")]
    HoldoutTooLarge { holdout: usize, len: usize },
    #[error("malformed model spec `{0}`; expected (p,d,q)(P,D,Q)[s]")]
    SpecSyntax(String),
    #[error("invalid model spec: {0}")]
    InvalidSpec(String),

    #[error("no parameter table entry for cluster {0}")]
    MissingCluster(usize),
    #[error("config error: {0}")]
    Config(String),
    #[error("missing case series for county `{0}`")]
    MissingSeries(String),
    #[error("date {0} is out of range")]
    DateRange(NaiveDate),
    #[error("{stage} stage failed: {detail}")]
    StageFailed { stage: String, detail: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
