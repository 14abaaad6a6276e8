use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid space: {0}")]
    InvalidSpace(String),

    #[error("invalid expression: {0}")]
    InvalidExpression(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("linear program failed: {0}")]
    Lp(String),

    #[error("vector {0:?} is not in the positive wedge")]
    NotPositive(Vec<f64>),

    #[error("not a positive contraction: {0}")]
    Infeasible(String),

    #[error("function is not positively homogeneous: {0}")]
    NotHomogeneous(String),

    #[error("combinatorial budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: line {line}, column {column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
