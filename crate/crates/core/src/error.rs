use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every domain failure the toolkit can report.
///
/// [`Error::kind`] gives the stable name printed by the CLI.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{file}:{location}: {message}")]
    MalformedFile {
        file: PathBuf,
        location: String,
        message: String,
    },
    #[error("corpus is empty: {0}")]
    EmptyCorpus(String),
    #[error("invalid corpus: {0}")]
    InvalidCorpus(String),
    #[error("duplicate dialogue {0}")]
    DuplicateDialogue(String),
    #[error("plot {plot_id} references missing dialogue {dialogue}")]
    DanglingPlot { plot_id: String, dialogue: String },
    #[error("{context}: {message}")]
    BadSpan { context: String, message: String },
    #[error("unknown dialogue {0}")]
    UnknownDialogue(String),
    #[error("query set is empty")]
    EmptyQuerySet,
    #[error("query id {0} occurs more than once")]
    DuplicateQueryId(String),
    #[error("random split requires a seed")]
    MissingSeed,
    #[error("query {0} has no plot provenance")]
    MissingProvenance(String),
    #[error("query {0} has no split assignment")]
    UnassignedQuery(String),
    #[error("prediction for unknown query {0}")]
    UnknownQueryId(String),
    #[error("more than one prediction for query {0}")]
    DuplicatePrediction(String),
    #[error("variable {variable} is not legal for {task} query {query_id}")]
    IllegalVariable {
        query_id: String,
        task: String,
        variable: String,
    },
    #[error("query {0} has no candidate entities")]
    EmptyCandidates(String),
    #[error("no trainable queries ({skipped} skipped as unanswerable)")]
    NoTrainableQueries { skipped: usize },
    #[error("training diverged at epoch {epoch}: loss is {loss}")]
    DivergenceDetected { epoch: usize, loss: f64 },
    #[error("model has {model} weights but features have {features} dimensions")]
    DimensionMismatch { model: usize, features: usize },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn kind(&self) -> &'static str {
        match self {
            Error::MalformedFile { .. } => "MalformedFile",
            Error::EmptyCorpus(_) => "EmptyCorpus",
            Error::InvalidCorpus(_) => "InvalidCorpus",
            Error::DuplicateDialogue(_) => "DuplicateDialogue",
            Error::DanglingPlot { .. } => "DanglingPlot",
            Error::BadSpan { .. } => "BadSpan",
            Error::UnknownDialogue(_) => "UnknownDialogue",
            Error::EmptyQuerySet => "EmptyQuerySet",
            Error::DuplicateQueryId(_) => "DuplicateQueryId",
            Error::MissingSeed => "MissingSeed",
            Error::MissingProvenance(_) => "MissingProvenance",
            Error::UnassignedQuery(_) => "UnassignedQuery",
            Error::UnknownQueryId(_) => "UnknownQueryId",
            Error::DuplicatePrediction(_) => "DuplicatePrediction",
            Error::IllegalVariable { .. } => "IllegalVariable",
            Error::EmptyCandidates(_) => "EmptyCandidates",
            Error::NoTrainableQueries { .. } => "NoTrainableQueries",
            Error::DivergenceDetected { .. } => "DivergenceDetected",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::Io { .. } => "IoFailure",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn malformed(
        file: impl Into<PathBuf>,
        location: impl Into<String>,
        message: impl Into<String>,
    ) -> Self {
        Error::MalformedFile {
            file: file.into(),
            location: location.into(),
            message: message.into(),
        }
    }
}
