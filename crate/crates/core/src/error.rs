use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the solvers, estimators and experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not Hermitian (relative asymmetry {0:.3e})")]
    NotHermitian(f64),

    #[error("{what} is not positive semidefinite (min eigenvalue {min_eig:.3e})")]
    NotPsd { what: &'static str, min_eig: f64 },

    #[error("rank deficient: {0}")]
    RankDeficient(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("modeling assumption violated: {0}")]
    Assumption(String),

    #[error(
        "exhaustive ordering search needs {pairs:.3e} permutation pairs (limit {limit:.0e}); \
         use heuristic_ordering instead"
    )]
    SearchTooLarge { pairs: f64, limit: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{}: malformed CSV: {message}", path.display())]
    Csv { path: PathBuf, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for errors that come from numerical infeasibility of a design
    /// rather than from bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Infeasible(_) | Error::RankDeficient(_) | Error::NotPsd { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
