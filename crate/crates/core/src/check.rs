//! Pointwise residual checks.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;

/// Outcome of a tolerance check: whether it held, and the worst residual seen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Verdict {
    pub holds: bool,
    pub max_residual: f64,
    pub tol: f64,
}

impl Verdict {
    pub fn new(max_residual: f64, tol: f64) -> Self {
        Verdict {
            holds: max_residual <= tol,
            max_residual,
            tol,
        }
    }
}

/// Maximum of `f` over `points`, evaluated in parallel. NaN counts as +inf.
pub fn max_over<P: Sync>(points: &[P], f: impl Fn(&P) -> Result<f64> + Sync) -> Result<f64> {
    points
        .par_iter()
        .map(|p| f(p).map(|r| if r.is_nan() { f64::INFINITY } else { r }))
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}

/// Largest absolute entry.
pub fn max_abs<'a>(xs: impl IntoIterator<Item = &'a f64>) -> f64 {
    xs.into_iter()
        .map(|x| if x.is_nan() { f64::INFINITY } else { x.abs() })
        .fold(0.0, f64::max)
}
