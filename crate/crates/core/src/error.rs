use thiserror::Error;

use crate::regression::IterationRecord;

/// Which regression submodel a quantity belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Submodel {
    Mean,
    Precision,
}

impl std::fmt::Display for Submodel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Submodel::Mean => f.write_str("mean"),
            Submodel::Precision => f.write_str("precision"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error in {function}: {detail}")]
    Domain {
        function: &'static str,
        detail: String,
    },

    #[error("invalid {submodel} parameter {value} at observation {index}")]
    InvalidPredictor {
        index: usize,
        submodel: Submodel,
        value: f64,
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("{matrix} design matrix is rank deficient (rank {rank} < {columns} columns)")]
    RankDeficient {
        matrix: &'static str,
        rank: usize,
        columns: usize,
    },

    #[error("response must be strictly positive and finite; observation {index} is {value}")]
    NonPositiveResponse { index: usize, value: f64 },

    #[error("{0} matrix is singular")]
    Singular(&'static str),

    #[error("{0} matrix is not positive definite")]
    NotPositiveDefinite(&'static str),

    #[error("fit did not converge after {iterations} iterations")]
    NotConverged {
        iterations: usize,
        trace: Vec<IterationRecord>,
    },

    #[error("invalid perturbation scheme: {0}")]
    InvalidScheme(String),

    #[error("models are not nested: {0}")]
    NotNested(String),

    #[error("{failed} of {total} fits failed, above the allowed fraction {allowed}")]
    TooManyFailures {
        failed: usize,
        total: usize,
        allowed: f64,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(function: &'static str, detail: impl Into<String>) -> Error {
    Error::Domain {
        function,
        detail: detail.into(),
    }
}
