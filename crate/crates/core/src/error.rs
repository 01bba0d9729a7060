use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{name} out of range: {detail}")]
    OutOfRange { name: &'static str, detail: String },

    #[error("domain error in {func}: {detail}")]
    Domain { func: &'static str, detail: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("quadrature did not converge ({context}): value {value:e}, error estimate {error:e}")]
    Quadrature {
        context: String,
        value: f64,
        error: f64,
    },

    #[error("series {name} did not converge after {terms} terms (partial value {partial:e})")]
    Series {
        name: &'static str,
        terms: usize,
        partial: f64,
    },

    #[error("divergent integral: {0}")]
    Divergent(String),

    #[error("rejection sampler exceeded {cap} proposals at |x| = {x_norm:e}")]
    RejectionCap { cap: usize, x_norm: f64 },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn out_of_range(name: &'static str, detail: impl Into<String>) -> Self {
        Error::OutOfRange {
            name,
            detail: detail.into(),
        }
    }

    pub(crate) fn domain(func: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            func,
            detail: detail.into(),
        }
    }
}
