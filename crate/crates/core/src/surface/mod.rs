//! Connections on two-dimensional charts.
//!
//! A [`Connection2`] stores the eight coefficients `Γ^l_jk` (0-based
//! indices, `Γ^l_jk` the `∂_l` component of `∇_{∂_j}∂_k`). Everything
//! derived from it (torsion, curvature, Ricci) is symbolic; the `is_*`
//! checks evaluate those fields at the chart's deterministic sample points.

mod canonical;
mod json;

use serde::Serialize;

pub use canonical::{connection_from_coframe, wong_connection, wong_gauge};
pub use json::ConnectionSpec;

use crate::chart::Chart2;
use crate::check::{max_abs, max_over, Verdict};
use crate::error::{eval_at, Error, Result};
use crate::symexpr::ScalarField;
use crate::tensor::{self, Coeffs};

/// Points with `|ρ₁₂|` below this are masked out of the recurrence check.
pub const RECURRENCE_MASK: f64 = 1e-8;

/// A 1-form `ξ₁dy¹ + ξ₂dy²`.
#[derive(Debug, Clone, PartialEq)]
pub struct OneForm2(pub [ScalarField; 2]);

/// A 2-form `ρ₁₂ dy¹∧dy²`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoForm2(pub ScalarField);

/// A bilinear form, `[j][k]` holding its value on `(∂_j, ∂_k)`.
pub type Bilinear2 = [[ScalarField; 2]; 2];

impl OneForm2 {
    pub fn new(a: ScalarField, b: ScalarField) -> Self {
        OneForm2([a, b])
    }

    pub fn zero() -> Self {
        OneForm2([ScalarField::zero(), ScalarField::zero()])
    }

    /// Parses both components on the 2D chart.
    pub fn parse(a: &str, b: &str) -> Result<Self> {
        Ok(OneForm2([ScalarField::parse(a, 2)?, ScalarField::parse(b, 2)?]))
    }

    /// The differential `dφ`.
    pub fn exact(phi: &ScalarField) -> Self {
        OneForm2([phi.diff(0), phi.diff(1)])
    }

    pub fn component(&self, j: usize) -> &ScalarField {
        &self.0[j]
    }

    pub fn scale(&self, c: &ScalarField) -> Self {
        OneForm2([c * &self.0[0], c * &self.0[1]])
    }

    pub fn add(&self, other: &Self) -> Self {
        OneForm2([&self.0[0] + &other.0[0], &self.0[1] + &other.0[1]])
    }

    pub fn fold_constants(&self) -> Self {
        OneForm2(self.0.clone().map(|f| f.fold_constants()))
    }

    pub fn eval(&self, p: &[f64]) -> Result<[f64; 2]> {
        Ok([eval_at(&self.0[0], p)?, eval_at(&self.0[1], p)?])
    }

    /// `(dξ)₁₂ = ∂₁ξ₂ − ∂₂ξ₁`.
    pub fn exterior_d(&self) -> TwoForm2 {
        TwoForm2(&self.0[1].diff(0) - &self.0[0].diff(1))
    }
}

impl TwoForm2 {
    pub fn component(&self) -> &ScalarField {
        &self.0
    }
}

/// Curvature components, `get(l, j, k, m)` being the `∂_m` part of `R(∂_l,∂_j)∂_k`.
#[derive(Debug, Clone)]
pub struct Curvature2(Coeffs);

impl Curvature2 {
    pub fn get(&self, l: usize, j: usize, k: usize, m: usize) -> &ScalarField {
        self.0.get(&[l, j, k, m])
    }

    pub fn coeffs(&self) -> &Coeffs {
        &self.0
    }

    /// `M[m][k]`: the endomorphism `R(∂₁,∂₂)` as a matrix.
    pub fn endomorphism(&self) -> [[ScalarField; 2]; 2] {
        std::array::from_fn(|m| std::array::from_fn(|k| self.get(0, 1, k, m).clone()))
    }

    pub fn max_abs_at(&self, p: &[f64]) -> Result<f64> {
        Ok(max_abs(&self.0.eval(p)?))
    }
}

/// Residuals reported by [`Connection2::decompose_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecompositionReport {
    pub hypothesis_residual: f64,
    pub flatness_residual: f64,
}

/// Output of [`Connection2::recurrence_form`].
#[derive(Debug, Clone)]
pub struct Recurrence {
    pub phi: OneForm2,
    pub masked: usize,
    pub evaluated: usize,
    pub verdict: Verdict,
}

#[derive(Debug, Clone)]
pub struct Connection2 {
    chart: Chart2,
    gamma: Coeffs,
}

impl Connection2 {
    /// Builds a connection from coefficients `gamma[l][j][k]`.
    pub fn new(chart: Chart2, gamma: Coeffs) -> Result<Self> {
        if gamma.dim() != 2 || gamma.iter().count() != 8 {
            return Err(Error::InvalidInput("surface connections need 2x2x2 coefficients".into()));
        }
        if let Some(f) = gamma.iter().find(|f| f.max_var().is_some_and(|v| v >= 2)) {
            return Err(Error::InvalidInput(format!(
                "coefficient `{f}` uses a fibre coordinate"
            )));
        }
        Ok(Connection2 { chart, gamma })
    }

    pub fn from_fn(chart: Chart2, f: impl Fn(usize, usize, usize) -> ScalarField) -> Result<Self> {
        let mut gamma = Coeffs::zeros(2, 3);
        for l in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    gamma.set(&[l, j, k], f(l, j, k));
                }
            }
        }
        Self::new(chart, gamma)
    }

    /// The standard flat connection `Γ ≡ 0`.
    pub fn flat(chart: Chart2) -> Self {
        Connection2 {
            chart,
            gamma: Coeffs::zeros(2, 3),
        }
    }

    pub fn chart(&self) -> &Chart2 {
        &self.chart
    }

    pub fn with_chart(mut self, chart: Chart2) -> Self {
        self.chart = chart;
        self
    }

    pub fn gamma(&self, l: usize, j: usize, k: usize) -> &ScalarField {
        self.gamma.get(&[l, j, k])
    }

    pub fn coeffs(&self) -> &Coeffs {
        &self.gamma
    }

    pub fn fold_constants(&self) -> Self {
        Connection2 {
            chart: self.chart.clone(),
            gamma: self.gamma.fold_constants(),
        }
    }

    /// Structural equality of the coefficient trees.
    pub fn same_coefficients(&self, other: &Self) -> bool {
        self.gamma == other.gamma
    }

    /// Largest coefficient difference over the given points.
    pub fn max_difference(&self, other: &Self, points: &[[f64; 2]]) -> Result<f64> {
        max_over(points, |p| {
            let a = self.gamma.eval(p)?;
            let b = other.gamma.eval(p)?;
            Ok(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
        })
    }

    /// `θ_j = Γ^k_jk − Γ^k_kj`.
    pub fn torsion_form(&self) -> OneForm2 {
        let theta = |j: usize| {
            let terms: Vec<_> = (0..2)
                .map(|k| self.gamma(k, j, k) - self.gamma(k, k, j))
                .collect();
            ScalarField::sum(&terms)
        };
        OneForm2([theta(0), theta(1)])
    }

    /// `Θ^l_jk = Γ^l_jk − Γ^l_kj`, stored as `[l][j][k]`.
    pub fn torsion_tensor(&self) -> Coeffs {
        let mut t = Coeffs::zeros(2, 3);
        for l in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    t.set(&[l, j, k], self.gamma(l, j, k) - self.gamma(l, k, j));
                }
            }
        }
        t
    }

    pub fn curvature(&self) -> Curvature2 {
        Curvature2(tensor::riemann(&self.gamma))
    }

    /// `ric(v,w) = tr(u ↦ R(v,u)w)`.
    pub fn ricci(&self) -> Bilinear2 {
        let ric = tensor::ricci(&tensor::riemann(&self.gamma));
        std::array::from_fn(|j| std::array::from_fn(|k| ric.get(&[j, k]).clone()))
    }

    /// Skew part `ρ₁₂ = (ric₁₂ − ric₂₁)/2` of the Ricci tensor.
    pub fn ricci_two_form(&self) -> TwoForm2 {
        let ric = self.ricci();
        TwoForm2(&(&ric[0][1] - &ric[1][0]) * &ScalarField::constant(0.5))
    }

    fn points(&self) -> Result<Vec<[f64; 2]>> {
        self.chart.points()
    }

    /// Max of `|ric₁₁|`, `|ric₂₂|`, `|ric₁₂ + ric₂₁|` over the sample points.
    pub fn is_ricci_skew(&self, tol: f64) -> Result<Verdict> {
        let ric = self.ricci();
        let sym = [
            ric[0][0].clone(),
            ric[1][1].clone(),
            &ric[0][1] + &ric[1][0],
        ];
        let r = max_over(&self.points()?, |p| {
            Ok(max_abs(&[eval_at(&sym[0], p)?, eval_at(&sym[1], p)?, eval_at(&sym[2], p)?]))
        })?;
        Ok(Verdict::new(r, tol))
    }

    /// Max entry of the traceless part of `R(∂₁,∂₂)` over the sample points.
    pub fn is_projectively_flat(&self, tol: f64) -> Result<Verdict> {
        let m = self.curvature().endomorphism();
        let traceless = [
            &(&m[0][0] - &m[1][1]) * &ScalarField::constant(0.5),
            m[0][1].clone(),
            m[1][0].clone(),
        ];
        let r = max_over(&self.points()?, |p| {
            let v: Vec<f64> = traceless.iter().map(|f| eval_at(f, p)).collect::<Result<_>>()?;
            Ok(max_abs(&v))
        })?;
        Ok(Verdict::new(r, tol))
    }

    /// `Γ'^l_jk = Γ^l_jk + sign·ξ_j δ^l_k`.
    pub fn shift(&self, xi: &OneForm2, sign: f64) -> Self {
        let s = ScalarField::constant(sign);
        let mut gamma = self.gamma.clone();
        for j in 0..2 {
            let add = &s * xi.component(j);
            for k in 0..2 {
                gamma.set(&[k, j, k], self.gamma(k, j, k) + &add);
            }
        }
        Connection2 {
            chart: self.chart.clone(),
            gamma,
        }
    }

    /// `D = ∇ + ξ⊗Id`, after checking `dξ = ric` and then `R^D = 0`.
    pub fn decompose_with(&self, xi: &OneForm2, tol: f64) -> Result<(Connection2, DecompositionReport)> {
        let ric = self.ricci();
        let dxi = xi.exterior_d().0;
        let mismatch = [
            ric[0][0].clone(),
            ric[1][1].clone(),
            &ric[0][1] - &dxi,
            &ric[1][0] + &dxi,
        ];
        let points = self.points()?;
        let hypothesis_residual = max_over(&points, |p| {
            let v: Vec<f64> = mismatch.iter().map(|f| eval_at(f, p)).collect::<Result<_>>()?;
            Ok(max_abs(&v))
        })?;
        if hypothesis_residual > tol {
            return Err(Error::Hypothesis {
                check: "dξ equals the Ricci tensor",
                residual: hypothesis_residual,
            });
        }
        let d = self.shift(xi, 1.0);
        let curv = d.curvature();
        let flatness_residual = max_over(&points, |p| curv.max_abs_at(p))?;
        if flatness_residual > tol {
            return Err(Error::Hypothesis {
                check: "shifted connection is flat",
                residual: flatness_residual,
            });
        }
        Ok((
            d,
            DecompositionReport {
                hypothesis_residual,
                flatness_residual,
            },
        ))
    }

    /// `(∇_j ξ)_k = ∂_j ξ_k − Γ^l_jk ξ_l`, as `[j][k]`.
    pub fn covariant_d(&self, xi: &OneForm2) -> [[ScalarField; 2]; 2] {
        std::array::from_fn(|j| {
            std::array::from_fn(|k| {
                let contraction: Vec<_> = (0..2)
                    .map(|l| self.gamma(l, j, k) * xi.component(l))
                    .collect();
                xi.component(k).diff(j) - ScalarField::sum(&contraction)
            })
        })
    }

    /// Residual of `dξ = ∇ξ − (∇ξ)* + θ∧ξ` over the sample points.
    pub fn exterior_d_identity_residual(&self, xi: &OneForm2) -> Result<f64> {
        let nabla = self.covariant_d(xi);
        let theta = self.torsion_form();
        let lhs = xi.exterior_d().0;
        let rhs = &nabla[0][1] - &nabla[1][0] + theta.component(0) * xi.component(1)
            - theta.component(1) * xi.component(0);
        let diff = lhs - rhs;
        max_over(&self.points()?, |p| Ok(eval_at(&diff, p)?.abs()))
    }

    /// Recurrence form `φ` with `∇ρ = φ⊗ρ`, checked against `dφ = 2ρ`.
    pub fn recurrence_form(&self, tol: f64) -> Result<Recurrence> {
        self.recurrence_form_masked(tol, RECURRENCE_MASK)
    }

    /// As [`Self::recurrence_form`], masking points with `|ρ₁₂| < mask`.
    pub fn recurrence_form_masked(&self, tol: f64, mask: f64) -> Result<Recurrence> {
        let skew = self.is_ricci_skew(tol)?;
        if !skew.holds {
            return Err(Error::Hypothesis {
                check: "Ricci tensor is skew-symmetric",
                residual: skew.max_residual,
            });
        }
        let rho = self.ricci_two_form().0;
        let phi_l = |l: usize| {
            let log_derivative = &rho.diff(l) / &rho;
            log_derivative - self.gamma(0, l, 0) - self.gamma(1, l, 1)
        };
        let phi = OneForm2([phi_l(0), phi_l(1)]);
        let dphi = phi.exterior_d().0;
        let residual = &dphi - &(&ScalarField::constant(2.0) * &rho);
        let points = self.points()?;
        let mut kept = Vec::with_capacity(points.len());
        for p in &points {
            if eval_at(&rho, p)?.abs() >= mask {
                kept.push(*p);
            }
        }
        if kept.is_empty() {
            return Err(Error::Degenerate(
                "Ricci form vanishes at every sample point; recurrence form undefined".into(),
            ));
        }
        let r = max_over(&kept, |p| Ok(eval_at(&residual, p)?.abs()))?;
        Ok(Recurrence {
            phi,
            masked: points.len() - kept.len(),
            evaluated: kept.len(),
            verdict: Verdict::new(r, tol),
        })
    }
}
