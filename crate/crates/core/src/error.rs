use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("function `{label}` is not finite at t = {t} (got {value})")]
    Evaluation { label: String, t: f64, value: f64 },

    #[error("{what}: value {value} outside [{lower}, {upper}]")]
    Domain {
        what: String,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("invalid input: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("{0}")]
    State(String),

    #[error("singular matrix: pivot vanished at elimination step {step} (|pivot| = {pivot:e})")]
    Singular { step: usize, pivot: f64 },

    #[error("interior collocation residual {residual:e} at node {node} exceeds {limit:e}")]
    Residual {
        node: usize,
        residual: f64,
        limit: f64,
    },

    #[error("exact Picard depth {depth} exceeds the cost cap {cap} (2^depth evaluations per point)")]
    CostGuard { depth: usize, cap: usize },

    #[error("order fit needs at least 2 positive points, got {0}")]
    Fit(usize),

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(vec![msg.into()])
    }

    /// True for failures of the numerics (singular systems, non-finite
    /// values, failed fits) as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Evaluation { .. }
                | Error::Singular { .. }
                | Error::Residual { .. }
                | Error::Fit(_)
        )
    }
}
