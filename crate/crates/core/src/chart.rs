//! Coordinate charts: a sampling box plus excluded loci.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symexpr::ScalarField;

pub const DEFAULT_SEED: u64 = 24389;
pub const DEFAULT_SAMPLES: usize = 100;
/// Sample points closer than this to an excluded locus are rejected.
pub const LOCUS_MARGIN: f64 = 1e-3;
const MAX_ATTEMPTS_PER_POINT: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sampling {
    pub count: usize,
    pub seed: u64,
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling {
            count: DEFAULT_SAMPLES,
            seed: DEFAULT_SEED,
        }
    }
}

#[derive(Debug, Clone)]
struct Locus {
    f: ScalarField,
    grad: Vec<ScalarField>,
}

/// An `N`-dimensional chart: closed box, excluded zero sets, sampling setup.
#[derive(Debug, Clone)]
pub struct Chart<const N: usize> {
    bounds: [[f64; 2]; N],
    loci: Vec<Locus>,
    pub sampling: Sampling,
}

pub type Chart2 = Chart<2>;
pub type Chart4 = Chart<4>;

impl<const N: usize> Chart<N> {
    pub fn new(bounds: [[f64; 2]; N]) -> Result<Self> {
        for (i, [lo, hi]) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::InvalidInput(format!(
                    "empty or unbounded interval [{lo}, {hi}] for coordinate {}",
                    i + 1
                )));
            }
        }
        Ok(Chart {
            bounds,
            loci: Vec::new(),
            sampling: Sampling::default(),
        })
    }

    pub fn with_excluded(mut self, loci: impl IntoIterator<Item = ScalarField>) -> Result<Self> {
        for f in loci {
            if f.max_var().is_some_and(|v| v >= N) {
                return Err(Error::InvalidInput(format!(
                    "excluded locus `{f}` uses a coordinate outside the chart"
                )));
            }
            let grad = (0..N).map(|j| f.diff(j)).collect();
            self.loci.push(Locus { f, grad });
        }
        Ok(self)
    }

    pub fn with_sampling(mut self, sampling: Sampling) -> Self {
        self.sampling = sampling;
        self
    }

    pub fn bounds(&self) -> &[[f64; 2]; N] {
        &self.bounds
    }

    pub fn excluded(&self) -> impl Iterator<Item = &ScalarField> {
        self.loci.iter().map(|l| &l.f)
    }

    pub fn contains(&self, p: &[f64; N]) -> bool {
        p.iter()
            .zip(&self.bounds)
            .all(|(x, [lo, hi])| *lo <= *x && *x <= *hi)
    }

    /// First-order distance estimate to the nearest excluded locus.
    /// Points where a locus itself cannot be evaluated count as distance 0.
    pub fn locus_distance(&self, p: &[f64; N]) -> f64 {
        let mut best = f64::INFINITY;
        for l in &self.loci {
            let Ok(v) = l.f.eval(p) else { return 0.0 };
            let mut g2 = 0.0;
            for g in &l.grad {
                match g.eval(p) {
                    Ok(x) => g2 += x * x,
                    Err(_) => return 0.0,
                }
            }
            let d = if v == 0.0 { 0.0 } else { v.abs() / g2.sqrt() };
            best = best.min(d);
        }
        best
    }

    /// Deterministic samples from the chart's own sampling setup.
    pub fn points(&self) -> Result<Vec<[f64; N]>> {
        self.sample(self.sampling.count, self.sampling.seed)
    }

    /// `count` points drawn uniformly from the box, off all excluded loci.
    pub fn sample(&self, count: usize, seed: u64) -> Result<Vec<[f64; N]>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(count);
        let mut attempts = 0usize;
        while out.len() < count {
            attempts += 1;
            if attempts > MAX_ATTEMPTS_PER_POINT * count.max(1) {
                return Err(Error::Sampling(format!(
                    "only {} of {count} points found off the excluded loci",
                    out.len()
                )));
            }
            let mut p = [0.0; N];
            for (x, [lo, hi]) in p.iter_mut().zip(&self.bounds) {
                *x = if lo == hi { *lo } else { rng.gen_range(*lo..=*hi) };
            }
            if self.locus_distance(&p) >= LOCUS_MARGIN {
                out.push(p);
            }
        }
        Ok(out)
    }
}

/// Serialized chart: `{"box": [[a, b], ...], "excluded": [expr, ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartSpec {
    #[serde(rename = "box")]
    pub bounds: Vec<[f64; 2]>,
    #[serde(default)]
    pub excluded: Vec<String>,
}

impl<const N: usize> Chart<N> {
    pub fn to_spec(&self) -> ChartSpec {
        ChartSpec {
            bounds: self.bounds.to_vec(),
            excluded: self.excluded().map(|f| f.to_string()).collect(),
        }
    }

    pub fn from_spec(spec: &ChartSpec) -> Result<Self> {
        let bounds: [[f64; 2]; N] = spec.bounds.as_slice().try_into().map_err(|_| {
            Error::InvalidInput(format!(
                "chart box has {} intervals, expected {N}",
                spec.bounds.len()
            ))
        })?;
        let loci = spec
            .excluded
            .iter()
            .map(|t| ScalarField::parse(t, N))
            .collect::<Result<Vec<_>, _>>()?;
        Chart::new(bounds)?.with_excluded(loci)
    }
}
