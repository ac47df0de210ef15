//! Neutral-signature metrics on the cotangent bundle of a surface: the
//! Riemann extension of a torsion-free connection, its Levi-Civita
//! curvature, the self-dual Weyl operator with Petrov classification, and
//! the Walker-structure checks.
//!
//! Coordinates are `(y¹, y², x₁, x₂)`, the `x_j` being fibre coordinates of
//! `T*Σ`, so indices `0, 1` are horizontal and `2, 3` vertical.

mod certify;
mod weyl;

use nalgebra::Matrix4;

pub use certify::{
    certify, project_connection, CertReport, CertSummary, PointRecord, WalkerChecks, ASD_TOL,
    PETROV_SCALE_TOL, PROJECTION_TOL, RHO_III_MIN, RICCI_TOL, RVU_TOL, WALKER_TOL,
};
pub use weyl::{hodge_star, petrov_type, Matrix6, PetrovType, WeylOperator, WeylSplit, PETROV_REL_TOL};

use crate::chart::{Chart2, Chart4};
use crate::check::{max_abs, max_over};
use crate::error::{eval_at, Error, Result};
use crate::surface::Connection2;
use crate::symexpr::ScalarField;
use crate::tensor::{self, Coeffs};

/// Smallest `|det g|` accepted at a sample point.
pub const DET_MIN: f64 = 1e-10;
/// Default fibre box for extension charts.
pub const FIBRE_BOUNDS: [f64; 2] = [-1.0, 1.0];

/// Symmetric 2×2 array of fields on the base.
pub type Sym2 = [[ScalarField; 2]; 2];

pub fn zero_sym2() -> Sym2 {
    std::array::from_fn(|_| std::array::from_fn(|_| ScalarField::zero()))
}

/// A metric on a 4D chart, stored as a full symmetric array of fields.
#[derive(Debug, Clone)]
pub struct Metric4 {
    chart: Chart4,
    g: [[ScalarField; 4]; 4],
}

impl Metric4 {
    /// Checks symmetry and nondegeneracy at the sample points.
    pub fn new(chart: Chart4, g: [[ScalarField; 4]; 4]) -> Result<Self> {
        for a in 0..4 {
            for b in 0..a {
                if g[a][b] != g[b][a] {
                    return Err(Error::InvalidInput(format!(
                        "metric is not symmetric in ({}, {})",
                        a + 1,
                        b + 1
                    )));
                }
            }
        }
        let m = Metric4 { chart, g };
        for p in m.chart.points()? {
            let gp = m.eval(&p)?;
            let det = gp.determinant();
            if det.abs() <= DET_MIN {
                return Err(Error::Degenerate(format!("|det g| = {:e} at {p:?}", det.abs())));
            }
        }
        Ok(m)
    }

    /// Errors unless the signature is `(−,−,+,+)` at every sample point.
    pub fn check_neutral(&self) -> Result<()> {
        for p in self.chart.points()? {
            let eig = self.eval(&p)?.symmetric_eigenvalues();
            let negative = eig.iter().filter(|e| **e < 0.0).count();
            if negative != 2 {
                return Err(Error::InvalidInput(format!(
                    "metric has {negative} negative directions at {p:?}, expected neutral signature"
                )));
            }
        }
        Ok(())
    }

    pub fn chart(&self) -> &Chart4 {
        &self.chart
    }

    pub fn component(&self, a: usize, b: usize) -> &ScalarField {
        &self.g[a][b]
    }

    pub fn eval(&self, p: &[f64; 4]) -> Result<Matrix4<f64>> {
        let mut m = Matrix4::zeros();
        for a in 0..4 {
            for b in a..4 {
                let v = eval_at(&self.g[a][b], p)?;
                m[(a, b)] = v;
                m[(b, a)] = v;
            }
        }
        Ok(m)
    }

    /// Adds `f` to `g_ab` (and `g_ba`); used to build controls that break
    /// the Walker structure.
    pub fn with_added(&self, a: usize, b: usize, f: &ScalarField) -> Result<Self> {
        let mut g = self.g.clone();
        g[a][b] = (&g[a][b] + f).fold_constants();
        if a != b {
            g[b][a] = g[a][b].clone();
        }
        Metric4::new(self.chart.clone(), g)
    }

    /// Cofactor inverse, simplified.
    pub fn inverse(&self) -> [[ScalarField; 4]; 4] {
        let minor = |skip_r: usize, skip_c: usize| -> ScalarField {
            let rows: Vec<usize> = (0..4).filter(|r| *r != skip_r).collect();
            let cols: Vec<usize> = (0..4).filter(|c| *c != skip_c).collect();
            let e = |i: usize, j: usize| &self.g[rows[i]][cols[j]];
            let terms: Vec<ScalarField> = [(0, 1, 2), (1, 2, 0), (2, 0, 1)]
                .iter()
                .flat_map(|&(i, j, k)| {
                    [
                        e(0, i) * e(1, j) * e(2, k),
                        -(e(0, i) * e(1, k) * e(2, j)),
                    ]
                })
                .collect();
            ScalarField::sum(&terms).fold_constants()
        };
        let cof: [[ScalarField; 4]; 4] = std::array::from_fn(|r| {
            std::array::from_fn(|c| {
                let m = minor(r, c);
                if (r + c) % 2 == 0 {
                    m
                } else {
                    (-m).fold_constants()
                }
            })
        });
        let det_terms: Vec<ScalarField> = (0..4).map(|c| &self.g[0][c] * &cof[0][c]).collect();
        let det = ScalarField::sum(&det_terms).fold_constants();
        std::array::from_fn(|a| std::array::from_fn(|b| (&cof[b][a] / &det).fold_constants()))
    }
}

/// `g = 2dx_j dy^j + (λ_kl − 2x_jΓ^j_kl) dy^k dy^l` on `chart`.
pub fn riemann_extension_on(c: &Connection2, lambda: &Sym2, chart: Chart4) -> Result<Metric4> {
    if lambda[0][1] != lambda[1][0] {
        return Err(Error::InvalidInput("λ must be symmetric".into()));
    }
    let theta = c.torsion_form();
    let points = c.chart().points()?;
    let torsion = max_over(&points, |p| Ok(max_abs(&theta.eval(p)?)))?;
    if torsion > 0.0 {
        return Err(Error::Hypothesis {
            check: "connection is torsion-free",
            residual: torsion,
        });
    }
    let x = [ScalarField::var(2), ScalarField::var(3)];
    let mut g: [[ScalarField; 4]; 4] = std::array::from_fn(|_| std::array::from_fn(|_| ScalarField::zero()));
    for k in 0..2 {
        for l in 0..2 {
            let mut terms = vec![lambda[k][l].clone()];
            for (j, xj) in x.iter().enumerate() {
                terms.push(ScalarField::constant(-2.0) * xj * c.gamma(j, k, l));
            }
            g[k][l] = ScalarField::sum(&terms).fold_constants();
        }
        g[k][k + 2] = ScalarField::one();
        g[k + 2][k] = ScalarField::one();
    }
    let m = Metric4::new(chart, g)?;
    m.check_neutral()?;
    Ok(m)
}

/// [`riemann_extension_on`] over the base box times [`FIBRE_BOUNDS`]², with
/// the base chart's sampling.
pub fn riemann_extension(c: &Connection2, lambda: &Sym2) -> Result<Metric4> {
    riemann_extension_on(c, lambda, extension_chart(c.chart())?)
}

pub fn extension_chart(base: &Chart2) -> Result<Chart4> {
    let [b1, b2] = *base.bounds();
    Ok(Chart4::new([b1, b2, FIBRE_BOUNDS, FIBRE_BOUNDS])?.with_sampling(base.sampling))
}

/// Levi-Civita connection and curvature of a [`Metric4`], all symbolic.
#[derive(Debug, Clone)]
pub struct Geometry4 {
    pub metric: Metric4,
    /// `gamma[c][a][b] = Γ̃^c_ab`.
    pub gamma: Coeffs,
    /// Same index convention as the surface curvature.
    pub riemann: Coeffs,
    pub ricci: Coeffs,
}

impl Geometry4 {
    pub fn new(metric: Metric4) -> Self {
        let inv = metric.inverse();
        let g = &metric.g;
        // First-kind symbols [ab, d] = ½(∂_a g_db + ∂_b g_da − ∂_d g_ab).
        let half = ScalarField::constant(0.5);
        let first: Vec<ScalarField> = (0..64)
            .map(|i| {
                let (a, b, d) = (i / 16, (i / 4) % 4, i % 4);
                (&half * (g[d][b].diff(a) + g[d][a].diff(b) - g[a][b].diff(d))).fold_constants()
            })
            .collect();
        let mut gamma = Coeffs::zeros(4, 3);
        for c in 0..4 {
            for a in 0..4 {
                for b in a..4 {
                    let terms: Vec<_> = (0..4)
                        .filter(|d| !inv[c][*d].is_zero())
                        .map(|d| &inv[c][d] * &first[a * 16 + b * 4 + d])
                        .collect();
                    let f = ScalarField::sum(&terms).fold_constants();
                    gamma.set(&[c, b, a], f.clone());
                    gamma.set(&[c, a, b], f);
                }
            }
        }
        let riemann = tensor::riemann(&gamma).fold_constants();
        let ricci = tensor::ricci(&riemann).fold_constants();
        Geometry4 {
            metric,
            gamma,
            riemann,
            ricci,
        }
    }

    pub fn points(&self) -> Result<Vec<[f64; 4]>> {
        self.metric.chart.points()
    }

    /// `max |∂_c g_ab − Γ̃^d_ca g_db − Γ̃^d_cb g_ad|` at `p`.
    pub fn compatibility_residual(&self, p: &[f64; 4]) -> Result<f64> {
        let g = self.metric.eval(p)?;
        let gam = self.gamma.eval(p)?;
        let gi = |c: usize, a: usize, b: usize| gam[c * 16 + a * 4 + b];
        let mut worst: f64 = 0.0;
        for c in 0..4 {
            for a in 0..4 {
                for b in 0..4 {
                    let mut r = eval_at(&self.metric.g[a][b].diff(c), p)?;
                    for d in 0..4 {
                        r -= gi(d, c, a) * g[(d, b)] + gi(d, c, b) * g[(a, d)];
                    }
                    worst = worst.max(r.abs());
                }
            }
        }
        Ok(worst)
    }

    /// Max of the cyclic sum `R(∂_l,∂_j)∂_k + R(∂_j,∂_k)∂_l + R(∂_k,∂_l)∂_j` at `p`.
    pub fn bianchi_residual(&self, p: &[f64; 4]) -> Result<f64> {
        let r = self.riemann.eval(p)?;
        let at = |l: usize, j: usize, k: usize, m: usize| r[((l * 4 + j) * 4 + k) * 4 + m];
        let mut worst: f64 = 0.0;
        for l in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    for m in 0..4 {
                        let s = at(l, j, k, m) + at(j, k, l, m) + at(k, l, j, m);
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
        Ok(worst)
    }

    pub fn ricci_residual(&self, p: &[f64; 4]) -> Result<f64> {
        Ok(max_abs(&self.ricci.eval(p)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::Sampling;
    use crate::surface::wong_connection;

    fn base() -> Chart2 {
        Chart2::new([[0.5, 2.0], [0.5, 2.0]])
            .unwrap()
            .with_sampling(Sampling { count: 20, seed: 7 })
    }

    fn wong() -> Connection2 {
        wong_connection(&ScalarField::parse("y1*y2", 2).unwrap(), base())
    }

    #[test]
    fn flat_extension() {
        let g = riemann_extension(&Connection2::flat(base()), &zero_sym2()).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                let expect = if a + 2 == b || b + 2 == a { Some(1.0) } else { Some(0.0) };
                assert_eq!(g.component(a, b).as_const(), expect);
            }
        }
        let geo = Geometry4::new(g);
        assert!(geo.gamma.iter().all(ScalarField::is_zero));
        assert!(geo.riemann.iter().all(ScalarField::is_zero));
    }

    #[test]
    fn wong_extension_components() {
        let g = riemann_extension(&wong(), &zero_sym2()).unwrap();
        assert_eq!(g.component(0, 0).to_string(), "2*(y2*x1)");
        assert_eq!(g.component(1, 1).to_string(), "(-2)*(y1*x2)");
        assert!(g.component(0, 1).is_zero());
        let inv = g.inverse();
        assert!(inv[2][2].to_string().contains("y2"));
        assert!(inv[0][0].is_zero() && inv[0][2].is_one());
    }

    #[test]
    fn levi_civita_compatible_and_bianchi() {
        let lam = [
            [ScalarField::parse("sin(y1)", 2).unwrap(), ScalarField::zero()],
            [ScalarField::zero(), ScalarField::parse("y2^2", 2).unwrap()],
        ];
        let geo = Geometry4::new(riemann_extension(&wong(), &lam).unwrap());
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    assert_eq!(geo.gamma.get(&[c, a, b]), geo.gamma.get(&[c, b, a]));
                }
            }
        }
        for p in geo.points().unwrap() {
            assert!(geo.compatibility_residual(&p).unwrap() <= 1e-10);
            assert!(geo.bianchi_residual(&p).unwrap() <= 1e-9);
            assert!(geo.ricci_residual(&p).unwrap() <= 1e-8);
        }
    }

    #[test]
    fn torsion_rejected() {
        let mut gamma = Coeffs::zeros(2, 3);
        gamma.set(&[0, 0, 1], ScalarField::var(1));
        let c = Connection2::new(base(), gamma).unwrap();
        assert!(matches!(
            riemann_extension(&c, &zero_sym2()),
            Err(Error::Hypothesis { .. })
        ));
    }

    #[test]
    fn degenerate_metric_rejected() {
        let chart = Chart4::new([[0.0, 1.0]; 4]).unwrap();
        let g = std::array::from_fn(|_| std::array::from_fn(|_| ScalarField::zero()));
        assert!(matches!(Metric4::new(chart, g), Err(Error::Degenerate(_))));
    }
}
