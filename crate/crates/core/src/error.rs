use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("internal consistency error: {0}")]
    Consistency(String),

    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("no convergence after {iterations} iterations (last increment {last_increment:e})")]
    NonConvergence {
        iterations: usize,
        last_increment: f64,
        increments: Vec<f64>,
    },

    #[error("iterate left the contraction ball at iteration {iteration}: |h| = {norm:e} > {limit:e}")]
    Divergence {
        iteration: usize,
        norm: f64,
        limit: f64,
        increments: Vec<f64>,
    },

    #[error("invalid field JSON: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
