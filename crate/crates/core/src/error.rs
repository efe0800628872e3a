use std::path::PathBuf;

/// Errors raised by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("input contains no edges")]
    EmptyGraph,

    #[error("infeasible split: could only remove {removed} of {requested} edges without disconnecting the graph")]
    InfeasibleSplit { requested: usize, removed: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("gate column {dim} of the {space} space has an all-zero numerator")]
    DegenerateGate { space: &'static str, dim: usize },

    #[error("graph has {n} nodes, above the full-likelihood ceiling of {ceiling}; use the sampled estimator")]
    FullLikelihoodCeiling { n: usize, ceiling: usize },

    #[error("estimator error: {0}")]
    Estimator(String),

    #[error("non-finite gradient in `{tensor}` at iteration {iteration}")]
    NonFiniteGradient { tensor: String, iteration: usize },

    #[error("training data error: {0}")]
    TrainingData(String),

    #[error("AUC undefined for task {0}: only one class present")]
    UndefinedAuc(String),

    #[error("BNMI undefined: both solutions have zero self-information")]
    UndefinedBnmi,

    #[error("PCA undefined: input has zero variance")]
    DegeneratePca,

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
