use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A value violates a documented invariant (bad generator spec, weights, budgets).
    #[error("invalid input: {0}")]
    Validation(String),

    /// A document failed to parse or validate; `path` points at the offending element.
    #[error("{path}: {message}")]
    Parse { path: String, message: String },

    #[error("unknown node id {0}")]
    UnknownNode(u32),

    #[error("qubo file line {line}: {message}")]
    QuboFormat { line: usize, message: String },

    #[error("instance has {n_vars} variables, exhaustive search is capped at {cap}")]
    TooLarge { n_vars: usize, cap: usize },

    #[error("unknown solver `{0}` (expected one of: exhaustive, tabu, anneal, hybrid)")]
    UnknownSolver(String),

    #[error("iteration {iteration}: {source}")]
    Iteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Remote(#[from] crate::solvers::remote::RemoteError),
}

impl Error {
    pub(crate) fn parse(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }
}
