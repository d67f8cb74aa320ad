use std::fmt;

use thiserror::Error;

/// Pipeline stage, attached to errors that escape a multi-stage estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    MaximumLikelihood,
    Basis,
    ConvexSet,
    Witness,
    EntropyMaximization,
    PatternSearch,
    SteepestAscent,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::MaximumLikelihood => "ml",
            Stage::Basis => "basis",
            Stage::ConvexSet => "convex-set",
            Stage::Witness => "witness",
            Stage::EntropyMaximization => "entropy",
            Stage::PatternSearch => "pattern-search",
            Stage::SteepestAscent => "steepest-ascent",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("operator is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPositive { min_eigenvalue: f64 },

    #[error("operator does not have unit trace (trace {trace})")]
    InvalidTrace { trace: f64 },

    #[error("operator is rank deficient (min eigenvalue {min_eigenvalue:.3e})")]
    RankDeficient { min_eigenvalue: f64 },

    #[error("invalid subsystem dimensions: {0}")]
    InvalidDims(String),

    #[error("invalid measurement: {0}")]
    InvalidPom(String),

    #[error("invalid count data: {0}")]
    InvalidData(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("degenerate construction: {0}")]
    Degenerate(String),

    #[error("target probabilities are infeasible (residual {residual:.3e})")]
    Infeasible { residual: f64 },

    #[error("solver stalled after {iterations} iterations")]
    SolverStall { iterations: usize },

    #[error("eigensolver failed to converge")]
    EigenFailure,

    #[error("[{stage}] {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn at(self, stage: Stage) -> Error {
        match self {
            e @ Error::Stage { .. } => e,
            e => Error::Stage {
                stage,
                source: Box::new(e),
            },
        }
    }

    /// The innermost error, with stage tags stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            e => e,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) trait StageExt<T> {
    fn stage(self, stage: Stage) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: Stage) -> Result<T> {
        self.map_err(|e| e.at(stage))
    }
}
