use std::path::PathBuf;

use thiserror::Error;

use crate::community::AgreementMatrix;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure classes, used by the CLI to choose an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Convergence,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid year-month `{0}` (expected YYYY-MM)")]
    InvalidDate(String),

    #[error("window contains no articles")]
    EmptyWindow,

    #[error("requested {requested} topics but only {found} candidates exist")]
    NotEnoughCandidates { requested: usize, found: usize },

    #[error("association undefined: occurrence vector has a zero marginal")]
    UndefinedAssociation,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("no reachable node pairs")]
    NoReachablePairs,

    #[error("reference networks are degenerate: {0}")]
    DegenerateReferences(String),

    #[error("network has no edges")]
    NoEdges,

    #[error("consensus did not converge after {meta_iterations} meta-iterations")]
    NoConvergence {
        meta_iterations: usize,
        last_agreement: Box<AgreementMatrix>,
    },

    #[error("correlation undefined: input is constant after ranking")]
    UndefinedCorrelation,

    #[error("design matrix is rank deficient; collinear columns: {}", columns.join(", "))]
    RankDeficient { columns: Vec<String> },

    #[error("cannot take log of non-positive prevalence for topic `{topic}`")]
    LogDomain { topic: String },

    #[error("unknown format `{format}`; supported: {}", supported.join(", "))]
    UnknownFormat {
        format: String,
        supported: Vec<&'static str>,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("graphml: {0}")]
    GraphMl(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config(_) | Error::UnknownFormat { .. } | Error::File { .. } => ErrorClass::Config,
            Error::NoConvergence { .. } => ErrorClass::Convergence,
            Error::Stage { source, .. } => source.class(),
            _ => ErrorClass::Data,
        }
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    pub(crate) fn file(path: impl Into<PathBuf>, source: std::io::Error) -> Error {
        Error::File {
            path: path.into(),
            source,
        }
    }
}
