use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("parse error at line {line}, field `{field}`: {message}")]
    Parse {
        line: usize,
        field: String,
        message: String,
    },

    #[error("unit error: {0}")]
    Unit(String),

    #[error("singular Jacobian at the initial point ({0}); try a different initialization")]
    SingularJacobian(String),

    #[error("model returned a non-finite value at parameters {params:?}")]
    NonFinite { params: Vec<f64> },

    #[error("unknown model `{name}`; available: {available}")]
    UnknownModel { name: String, available: String },

    #[error("inconsistent input: {0}")]
    Inconsistent(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
