use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failures while reading and preparing a dataset.
#[derive(Debug, Error)]
pub enum DataError {
    #[error("dataset file not found: {0}")]
    MissingFile(PathBuf),
    #[error("unknown column `{0}` referenced by the schema")]
    UnknownColumn(String),
    #[error("label column `{0}` not present in the input")]
    MissingLabelColumn(String),
    #[error("label column `{column}` has {distinct} distinct value(s), need at least 2")]
    DegenerateLabels { column: String, distinct: usize },
    #[error("empty dataset{0}")]
    Empty(String),
    #[error("no anomaly classes given")]
    NoAnomalyClasses,
    #[error("anomaly class `{0}` never occurs in the label column")]
    UnobservedClass(String),
    #[error("anomaly classes cover every observed class; nothing would be normal")]
    AllClassesAnomalous,
    #[error("feature matrix has {got} columns, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("malformed cache {path}: {reason}")]
    BadCache { path: PathBuf, reason: String },
    #[error("invalid schema: {0}")]
    Schema(String),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Error)]
pub enum SplitError {
    #[error("split needs at least one anomaly and two normals (have {anomalies} anomalies, {normals} normals)")]
    TooFewSamples { anomalies: usize, normals: usize },
    #[error("normal_train_fraction must lie in (0, 1), got {0}")]
    BadFraction(f64),
    #[error("split would leave the {0} set empty")]
    EmptyPartition(&'static str),
    #[error("balanced test set needs {anomalies} held-out normals but only {available} remain")]
    NotEnoughNormals { anomalies: usize, available: usize },
    #[error("corruption ratio must lie in [0, 1), got {0}")]
    BadCorruptionRatio(f64),
    #[error("corruption is only defined for the proposed strategy")]
    CorruptionNotAllowed,
    #[error("corruption would move {requested} of {available} test anomalies")]
    CorruptionOutOfRange { requested: usize, available: usize },
    #[error("index list {path}: {reason}")]
    BadIndexList { path: PathBuf, reason: String },
}

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("score set is empty")]
    Empty,
    #[error("scores and labels differ in length ({scores} vs {labels})")]
    LengthMismatch { scores: usize, labels: usize },
    #[error("non-finite score at position {0}")]
    NonFinite(usize),
    #[error("both classes must be present")]
    SingleClass,
    #[error("anomaly ratio must lie in (0, 1), got {0}")]
    BadRatio(f64),
    #[error("score file {path}: {reason}")]
    BadScoreFile { path: PathBuf, reason: String },
}

#[derive(Debug, Error)]
pub enum DetectorError {
    #[error("k = {k} must satisfy 1 <= k < {n} training rows")]
    BadNeighbourCount { k: usize, n: usize },
    #[error("training data needs at least two distinct points")]
    DegenerateTrainingSet,
    #[error("expected {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("latent dimension {latent} must be below the input dimension {input}")]
    BadLatentDim { latent: usize, input: usize },
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error("model blob: {0}")]
    BadModel(String),
    #[error("detector failed in run {run}: {source}")]
    Run {
        run: usize,
        #[source]
        source: Box<Error>,
    },
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot parse {path}: {reason}")]
    Parse { path: PathBuf, reason: String },
    #[error("bad override `{0}`, expected key=value")]
    BadOverride(String),
    #[error("unknown {kind} `{name}`")]
    UnknownReference { kind: &'static str, name: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Split(#[from] SplitError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Detector(#[from] DetectorError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Coarse failure class, used by the command line to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Detector,
    Io,
}

impl Error {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) => ErrorKind::Config,
            Error::Data(_) | Error::Split(_) | Error::Metrics(_) => ErrorKind::Data,
            Error::Detector(_) => ErrorKind::Detector,
            Error::Io { .. } | Error::Json(_) => ErrorKind::Io,
        }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Data(DataError::Csv(e))
    }
}
