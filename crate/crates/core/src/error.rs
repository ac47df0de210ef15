use thiserror::Error;

use crate::symexpr::{EvalError, ParseError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("evaluation failed at {point:?}: {source}")]
    Eval {
        point: Vec<f64>,
        #[source]
        source: EvalError,
    },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("sampling failed: {0}")]
    Sampling(String),
    #[error("hypothesis `{check}` fails, max residual {residual:e}")]
    Hypothesis { check: &'static str, residual: f64 },
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("inconsistent input: {0}")]
    Inconsistent(String),
    #[error("left the admissible set: {0}")]
    Admissibility(String),
    #[error("json: {0}")]
    Json(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Evaluates `f` at `p`, attaching the point to any failure.
pub(crate) fn eval_at(f: &crate::symexpr::ScalarField, p: &[f64]) -> Result<f64> {
    f.eval(p).map_err(|source| Error::Eval {
        point: p.to_vec(),
        source,
    })
}
