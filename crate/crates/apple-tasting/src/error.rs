//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A loss/dimension/horizon combination violates the game invariants.
    #[error("invalid game specification: {0}")]
    InvalidGame(String),

    /// A prior covariance (or other matrix required to be SPD) failed its
    /// Cholesky factorization.
    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    /// Mismatched vector/matrix dimensions.
    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    DimensionMismatch {
        expected: usize,
        got: usize,
        context: String,
    },

    /// The Polya-Gamma rejection loop exceeded its proposal cap. With the
    /// exact sampler the acceptance probability exceeds 0.9992, so this
    /// indicates a numerical problem rather than bad luck.
    #[error("PG(1, {c}) rejection sampler exceeded {cap} proposals")]
    PgProposalCap { c: f64, cap: usize },

    /// A configuration file failed validation; each entry names one
    /// offending field.
    #[error("invalid configuration:\n{}", .0.join("\n"))]
    InvalidConfig(Vec<String>),

    #[error("unknown builtin problem id {0:?} (expected \"i\", \"ii\" or \"iii\")")]
    UnknownProblem(String),

    #[error("policy {policy} failed in round {round}: {source}")]
    EpisodeAborted {
        policy: String,
        round: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
