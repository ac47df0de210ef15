use nalgebra::{Matrix3, Matrix4, SMatrix, SVector};
use serde::Serialize;

use super::Geometry4;
use crate::error::{Error, Result};

pub type Matrix6 = SMatrix<f64, 6, 6>;
type Vector6 = SVector<f64, 6>;

/// Relative singular-value threshold of the Petrov rank profile.
pub const PETROV_REL_TOL: f64 = 1e-7;

/// Coordinate bivectors `∂_a∧∂_b`, `a < b`, in lexicographic order.
const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Sign applied to `g∧g` for the inner product on bivectors, chosen so the
/// self-dual 3-space has Gram matrix `diag(−1, 1, 1)`.
const BIVECTOR_SIGN: f64 = -1.0;

fn permutation_sign(idx: [usize; 4]) -> f64 {
    let mut sign = 1.0;
    for i in 0..4 {
        for j in i + 1..4 {
            if idx[i] == idx[j] {
                return 0.0;
            }
            if idx[i] > idx[j] {
                sign = -sign;
            }
        }
    }
    sign
}

/// `⟨∂_a∧∂_b, ∂_c∧∂_d⟩ = g_ac g_bd − g_ad g_bc`.
fn bivector_gram(g: &Matrix4<f64>) -> Matrix6 {
    Matrix6::from_fn(|i, j| {
        let ((a, b), (c, d)) = (PAIRS[i], PAIRS[j]);
        g[(a, c)] * g[(b, d)] - g[(a, d)] * g[(b, c)]
    })
}

/// Hodge star on bivectors, as a matrix acting on coefficient columns in the
/// lexicographic basis, with `ε_{1234} = orientation·√|det g|`.
pub fn hodge_star(g: &Matrix4<f64>, orientation: f64) -> Result<Matrix6> {
    let det = g.determinant();
    if det.abs() <= super::DET_MIN {
        return Err(Error::Degenerate(format!("|det g| = {:e}", det.abs())));
    }
    let vol = orientation.signum() * det.abs().sqrt();
    let eps = Matrix6::from_fn(|i, j| {
        let ((a, b), (c, d)) = (PAIRS[i], PAIRS[j]);
        vol * permutation_sign([a, b, c, d])
    });
    let gram_inv = bivector_gram(g)
        .try_inverse()
        .ok_or_else(|| Error::Degenerate("bivector inner product is singular".into()))?;
    Ok(gram_inv * eps)
}

/// A self-adjoint operator on the self-dual 3-space, in a basis whose Gram
/// matrix is `diag(−1, 1, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeylOperator {
    pub matrix: Matrix3<f64>,
    pub gram: Matrix3<f64>,
}

impl WeylOperator {
    pub fn self_adjoint_residual(&self) -> f64 {
        let lowered = self.gram * self.matrix;
        (lowered - lowered.transpose()).amax()
    }

    pub fn trace_residual(&self) -> f64 {
        self.matrix.trace().abs()
    }

    pub fn norm(&self) -> f64 {
        self.matrix.singular_values().max()
    }
}

/// Self-dual part plus the size of the anti-self-dual part at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct WeylSplit {
    pub plus: WeylOperator,
    /// Max entry of `P₋ W P₋` in the coordinate bivector basis.
    pub asd_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PetrovType {
    O,
    III,
    #[serde(rename = "other")]
    Other,
}

impl std::fmt::Display for PetrovType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PetrovType::O => "O",
            PetrovType::III => "III",
            PetrovType::Other => "other",
        })
    }
}

fn numeric_rank(m: &Matrix3<f64>, scale: f64) -> usize {
    m.singular_values()
        .iter()
        .filter(|s| **s > PETROV_REL_TOL * scale)
        .count()
}

/// `O` when `‖W‖ ≤ scale_tol`; `III` when `W, W², W³` have ranks `2, 1, 0`
/// relative to `‖W‖, ‖W‖², ‖W‖³`; otherwise `other`.
pub fn petrov_type(w: &WeylOperator, scale_tol: f64) -> PetrovType {
    let m = w.matrix;
    let s1 = w.norm();
    if s1 <= scale_tol {
        return PetrovType::O;
    }
    let m2 = m * m;
    let m3 = m2 * m;
    let profile = (
        numeric_rank(&m, s1),
        numeric_rank(&m2, s1 * s1),
        numeric_rank(&m3, s1 * s1 * s1),
    );
    if profile == (2, 1, 0) {
        PetrovType::III
    } else {
        PetrovType::Other
    }
}

/// Orthonormalizes the projected coordinate bivectors, largest `|norm²|`
/// first with ties to the lowest index, then puts the negative vector first.
fn self_dual_basis(proj: &Matrix6, eta: &Matrix6) -> Result<([Vector6; 3], [f64; 3])> {
    let ip = |u: &Vector6, v: &Vector6| (u.transpose() * eta * v)[(0, 0)];
    let scale = proj.amax().powi(2) * eta.amax();
    let tol = 1e-10 * scale.max(f64::MIN_POSITIVE);
    let mut chosen: Vec<(Vector6, f64)> = Vec::new();
    while chosen.len() < 3 {
        let cands: Vec<Vector6> = (0..6)
            .map(|i| {
                let mut c: Vector6 = proj.column(i).into();
                for (e, s) in &chosen {
                    c -= e * (s * ip(e, &c));
                }
                c
            })
            .collect();
        let mut best = 0;
        for i in 1..6 {
            if ip(&cands[i], &cands[i]).abs() > ip(&cands[best], &cands[best]).abs() * (1.0 + 1e-12) {
                best = i;
            }
        }
        let mut pick = cands[best];
        if ip(&pick, &pick).abs() <= tol {
            let mut pair = (0, 1);
            for i in 0..6 {
                for j in i + 1..6 {
                    if ip(&cands[i], &cands[j]).abs()
                        > ip(&cands[pair.0], &cands[pair.1]).abs() * (1.0 + 1e-12)
                    {
                        pair = (i, j);
                    }
                }
            }
            pick = cands[pair.0] + cands[pair.1];
        }
        let q = ip(&pick, &pick);
        if q.abs() <= tol {
            return Err(Error::Degenerate("self-dual 3-space has a degenerate inner product".into()));
        }
        chosen.push((pick / q.abs().sqrt(), q.signum()));
    }
    chosen.sort_by(|a, b| a.1.total_cmp(&b.1));
    Ok((
        [chosen[0].0, chosen[1].0, chosen[2].0],
        [chosen[0].1, chosen[1].1, chosen[2].1],
    ))
}

impl Geometry4 {
    /// Weyl tensor `W_abcd = g(W(∂_a,∂_b)∂_c, ∂_d)` at `p`, flat index `((a·4+b)·4+c)·4+d`.
    pub fn weyl_tensor(&self, p: &[f64; 4]) -> Result<Vec<f64>> {
        let g = self.metric.eval(p)?;
        let gi = g
            .try_inverse()
            .ok_or_else(|| Error::Degenerate(format!("metric is singular at {p:?}")))?;
        let r = self.riemann.eval(p)?;
        let idx = |a: usize, b: usize, c: usize, d: usize| ((a * 4 + b) * 4 + c) * 4 + d;
        // The stored curvature has the opposite sign to g(R(∂_a,∂_b)∂_c, ∂_d).
        let mut rm = vec![0.0; 256];
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    for d in 0..4 {
                        rm[idx(a, b, c, d)] = -(0..4).map(|m| r[idx(a, b, c, m)] * g[(m, d)]).sum::<f64>();
                    }
                }
            }
        }
        let ric = Matrix4::from_fn(|b, c| {
            let mut s = 0.0;
            for a in 0..4 {
                for d in 0..4 {
                    s += gi[(a, d)] * rm[idx(a, b, c, d)];
                }
            }
            s
        });
        let scalar = (gi.component_mul(&ric)).sum();
        let h = ric - g * (scalar / 6.0);
        let mut w = rm;
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    for d in 0..4 {
                        let kn = h[(b, c)] * g[(a, d)] + h[(a, d)] * g[(b, c)]
                            - h[(a, c)] * g[(b, d)]
                            - h[(b, d)] * g[(a, c)];
                        w[idx(a, b, c, d)] -= 0.5 * kn;
                    }
                }
            }
        }
        Ok(w)
    }

    /// Weyl tensor as an operator on bivectors, in the coordinate basis.
    pub fn weyl_operator_bivectors(&self, p: &[f64; 4]) -> Result<Matrix6> {
        let g = self.metric.eval(p)?;
        let w = self.weyl_tensor(p)?;
        let pairing = Matrix6::from_fn(|i, j| {
            let ((a, b), (c, d)) = (PAIRS[i], PAIRS[j]);
            w[((a * 4 + b) * 4 + c) * 4 + d]
        });
        let gram_inv = bivector_gram(&g)
            .try_inverse()
            .ok_or_else(|| Error::Degenerate(format!("bivector inner product singular at {p:?}")))?;
        Ok(gram_inv * pairing)
    }

    /// Self-dual Weyl operator for the given orientation, plus the size of
    /// the anti-self-dual part.
    pub fn weyl_split(&self, orientation: f64, p: &[f64; 4]) -> Result<WeylSplit> {
        let g = self.metric.eval(p)?;
        let star = hodge_star(&g, orientation)?;
        let id = Matrix6::identity();
        let plus = (id + star) * 0.5;
        let minus = (id - star) * 0.5;
        let w = self.weyl_operator_bivectors(p)?;
        let eta = bivector_gram(&g) * BIVECTOR_SIGN;
        let (basis, signs) = self_dual_basis(&plus, &eta)?;
        let matrix = Matrix3::from_fn(|i, j| {
            signs[i] * (basis[i].transpose() * eta * w * basis[j])[(0, 0)]
        });
        Ok(WeylSplit {
            plus: WeylOperator {
                matrix,
                gram: Matrix3::from_diagonal(&nalgebra::Vector3::from(signs)),
            },
            asd_residual: (minus * w * minus).amax(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::super::{riemann_extension, zero_sym2};
    use super::*;
    use crate::chart::{Chart2, Sampling};
    use crate::surface::{wong_connection, Connection2};
    use crate::symexpr::ScalarField;

    fn base() -> Chart2 {
        Chart2::new([[0.5, 2.0], [0.5, 2.0]])
            .unwrap()
            .with_sampling(Sampling { count: 10, seed: 3 })
    }

    fn flat_metric() -> Matrix4<f64> {
        let mut g = Matrix4::zeros();
        for k in 0..2 {
            g[(k, k + 2)] = 1.0;
            g[(k + 2, k)] = 1.0;
        }
        g
    }

    #[test]
    fn star_squares_to_identity() {
        let g = flat_metric();
        for o in [1.0, -1.0] {
            let s = hodge_star(&g, o).unwrap();
            assert_eq!(s * s, Matrix6::identity());
            let plus_rank = ((Matrix6::identity() + s) * 0.5).rank(1e-12);
            assert_eq!(plus_rank, 3);
        }
        assert_eq!(hodge_star(&g, -1.0).unwrap(), -hodge_star(&g, 1.0).unwrap());
    }

    #[test]
    fn star_on_curved_metric() {
        let c = wong_connection(&ScalarField::parse("y1*y2", 2).unwrap(), base());
        let m = riemann_extension(&c, &zero_sym2()).unwrap();
        let g = m.eval(&[0.7, 1.3, 0.2, -0.4]).unwrap();
        let s = hodge_star(&g, 1.0).unwrap();
        assert!((s * s - Matrix6::identity()).amax() < 1e-10);
    }

    #[test]
    fn self_dual_gram_signature() {
        let geo = Geometry4::new(riemann_extension(&Connection2::flat(base()), &zero_sym2()).unwrap());
        for o in [1.0, -1.0] {
            let split = geo.weyl_split(o, &[1.0, 1.0, 0.0, 0.0]).unwrap();
            assert_eq!(split.plus.gram, Matrix3::from_diagonal(&nalgebra::Vector3::new(-1.0, 1.0, 1.0)));
            assert_eq!(split.plus.matrix, Matrix3::zeros());
            assert_eq!(petrov_type(&split.plus, 1e-8), PetrovType::O);
        }
    }

    #[test]
    fn petrov_examples() {
        let gram = Matrix3::from_diagonal(&nalgebra::Vector3::new(-1.0, 1.0, 1.0));
        let diag = WeylOperator {
            matrix: Matrix3::from_diagonal(&nalgebra::Vector3::new(2.0, -1.0, -1.0)),
            gram,
        };
        assert_eq!(petrov_type(&diag, 1e-8), PetrovType::Other);
        let shift = WeylOperator {
            matrix: Matrix3::new(0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0),
            gram,
        };
        assert_eq!(petrov_type(&shift, 1e-8), PetrovType::III);
    }

    #[test]
    fn wong_extension_is_self_dual_type_three() {
        let c = wong_connection(&ScalarField::parse("y1*y2", 2).unwrap(), base());
        let geo = Geometry4::new(riemann_extension(&c, &zero_sym2()).unwrap());
        let residual = |o: f64| {
            geo.points()
                .unwrap()
                .iter()
                .map(|p| geo.weyl_split(o, p).unwrap().asd_residual)
                .fold(0.0, f64::max)
        };
        let (rp, rm) = (residual(1.0), residual(-1.0));
        let o = if rp <= rm { 1.0 } else { -1.0 };
        assert!(rp.min(rm) <= 1e-8, "{rp:e} {rm:e}");
        for p in geo.points().unwrap() {
            let split = geo.weyl_split(o, &p).unwrap();
            assert!(split.plus.self_adjoint_residual() <= 1e-8);
            assert!(split.plus.trace_residual() <= 1e-8);
            assert_eq!(petrov_type(&split.plus, 1e-8), PetrovType::III, "{p:?}");
        }
    }
}
