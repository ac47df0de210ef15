//! Dimension-generic connection coefficients and curvature.
//!
//! Index conventions, shared by the surface and four-dimensional code:
//! `Γ^l_jk` is the `∂_l` component of `∇_{∂_j} ∂_k`, and `R[l][j][k][m]` is
//! the `∂_m` component of `R(∂_l, ∂_j) ∂_k` with
//! `R(u,v) = ∇_v∇_u − ∇_u∇_v + ∇_[u,v]`.

use crate::error::{eval_at, Result};
use crate::symexpr::ScalarField;

/// Flat storage for coefficient arrays of rank `r` in dimension `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Coeffs {
    n: usize,
    rank: u32,
    data: Vec<ScalarField>,
}

impl Coeffs {
    pub fn zeros(n: usize, rank: u32) -> Self {
        Coeffs {
            n,
            rank,
            data: vec![ScalarField::zero(); n.pow(rank)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank as usize);
        idx.iter().fold(0, |acc, i| {
            debug_assert!(*i < self.n);
            acc * self.n + i
        })
    }

    pub fn get(&self, idx: &[usize]) -> &ScalarField {
        &self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], f: ScalarField) {
        let o = self.offset(idx);
        self.data[o] = f;
    }

    pub fn iter(&self) -> impl Iterator<Item = &ScalarField> {
        self.data.iter()
    }

    pub fn map(&self, f: impl Fn(&ScalarField) -> ScalarField) -> Self {
        Coeffs {
            n: self.n,
            rank: self.rank,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn fold_constants(&self) -> Self {
        self.map(ScalarField::fold_constants)
    }

    /// Every component evaluated at `p`, in storage order.
    pub fn eval(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.data.iter().map(|f| eval_at(f, p)).collect()
    }
}

/// Curvature components `R[l][j][k][m]` from `gamma[l][j][k] = Γ^l_jk`.
pub fn riemann(gamma: &Coeffs) -> Coeffs {
    let n = gamma.dim();
    let g = |l: usize, j: usize, k: usize| gamma.get(&[l, j, k]);
    let mut r = Coeffs::zeros(n, 4);
    for l in 0..n {
        for j in 0..n {
            if l == j {
                continue;
            }
            for k in 0..n {
                for m in 0..n {
                    if j < l {
                        let mirrored = -r.get(&[j, l, k, m]);
                        r.set(&[l, j, k, m], mirrored);
                        continue;
                    }
                    let mut terms = vec![g(m, l, k).diff(j), -g(m, j, k).diff(l)];
                    for s in 0..n {
                        terms.push(g(m, j, s) * g(s, l, k));
                        terms.push(-(g(m, l, s) * g(s, j, k)));
                    }
                    r.set(&[l, j, k, m], ScalarField::sum(&terms));
                }
            }
        }
    }
    r
}

/// Ricci contraction `ric_jk = Σ_l R[j][l][k][l]`, the trace of `u ↦ R(∂_j,u)∂_k`.
pub fn ricci(riem: &Coeffs) -> Coeffs {
    let n = riem.dim();
    let mut out = Coeffs::zeros(n, 2);
    for j in 0..n {
        for k in 0..n {
            let terms: Vec<_> = (0..n).map(|l| riem.get(&[j, l, k, l]).clone()).collect();
            out.set(&[j, k], ScalarField::sum(&terms));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_connection_is_flat() {
        let r = riemann(&Coeffs::zeros(3, 3));
        assert!(r.iter().all(ScalarField::is_zero));
    }

    #[test]
    fn antisymmetric_in_first_pair() {
        let mut g = Coeffs::zeros(2, 3);
        g.set(&[0, 0, 1], ScalarField::parse("y1*y2^2", 2).unwrap());
        g.set(&[1, 1, 0], ScalarField::parse("sin(y1)", 2).unwrap());
        let r = riemann(&g);
        let p = [0.3, -0.7];
        for k in 0..2 {
            for m in 0..2 {
                let a = r.get(&[0, 1, k, m]).eval(&p).unwrap();
                let b = r.get(&[1, 0, k, m]).eval(&p).unwrap();
                assert_eq!(a, -b);
            }
        }
    }
}
