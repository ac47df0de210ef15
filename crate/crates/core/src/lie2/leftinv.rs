use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use super::{commutator, max_entry, Matrix2};
use crate::error::{Error, Result};

const TRACE_TOL: f64 = 1e-12;
/// Singular-value threshold for the rank of `u ↦ Ψu` after unit normalization.
pub const RANK_TOL: f64 = 1e-9;
/// Tolerance of the homomorphism precondition in [`LeftInvConn::ricci`].
pub const HOMOMORPHISM_TOL: f64 = 1e-9;

/// Two-dimensional Lie algebra with `[e₁,e₂] = c¹e₁ + c²e₂`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LieAlgebra2 {
    pub c: [f64; 2],
}

impl LieAlgebra2 {
    pub fn abelian() -> Self {
        LieAlgebra2 { c: [0.0, 0.0] }
    }

    /// The non-Abelian algebra with `[e₁,e₂] = e₁`.
    pub fn affine() -> Self {
        LieAlgebra2 { c: [1.0, 0.0] }
    }

    pub fn is_abelian(&self) -> bool {
        self.c == [0.0, 0.0]
    }

    pub fn bracket(&self, u: Vector2<f64>, v: Vector2<f64>) -> Vector2<f64> {
        Vector2::from(self.c) * (u.x * v.y - u.y * v.x)
    }
}

/// Left-invariant connection `∇_u v = (Ψu)v + f(u)v` given by the images
/// `Ψe₁`, `Ψe₂` (traceless) and the covector `f`.
#[derive(Debug, Clone, PartialEq)]
pub struct LeftInvConn {
    pub algebra: LieAlgebra2,
    pub psi: [Matrix2; 2],
    pub f: [f64; 2],
}

/// JSON layout: `{"algebra": [c1, c2], "psi": [[4 reals], [4 reals]], "f": [f1, f2]}`,
/// matrices row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeftInvSpec {
    pub algebra: [f64; 2],
    pub psi: [[f64; 4]; 2],
    pub f: [f64; 2],
}

fn row_major(m: &Matrix2) -> [f64; 4] {
    [m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]]
}

impl LeftInvConn {
    pub fn new(algebra: LieAlgebra2, psi: [Matrix2; 2], f: [f64; 2]) -> Result<Self> {
        for (i, m) in psi.iter().enumerate() {
            if m.trace().abs() > TRACE_TOL {
                return Err(Error::InvalidInput(format!(
                    "Ψe{} has trace {:e}, expected traceless",
                    i + 1,
                    m.trace()
                )));
            }
        }
        Ok(LeftInvConn { algebra, psi, f })
    }

    /// `Ψu = q(u)B`.
    pub fn rank_one(algebra: LieAlgebra2, q: [f64; 2], b: Matrix2, f: [f64; 2]) -> Result<Self> {
        Self::new(algebra, [b * q[0], b * q[1]], f)
    }

    pub fn psi_of(&self, u: Vector2<f64>) -> Matrix2 {
        self.psi[0] * u.x + self.psi[1] * u.y
    }

    /// `R(u,v) = f([u,v])Id + Ψ[u,v] − [Ψu, Ψv]`.
    pub fn curvature(&self, u: Vector2<f64>, v: Vector2<f64>) -> Matrix2 {
        let br = self.algebra.bracket(u, v);
        Matrix2::identity() * Vector2::from(self.f).dot(&br) + self.psi_of(br)
            - commutator(&self.psi_of(u), &self.psi_of(v))
    }

    /// Max entry of `Ψ[e₁,e₂] − [Ψe₁,Ψe₂]`.
    pub fn homomorphism_defect(&self) -> f64 {
        let br = Vector2::from(self.algebra.c);
        max_entry(&(self.psi_of(br) - commutator(&self.psi[0], &self.psi[1])))
    }

    pub fn is_homomorphism(&self, tol: f64) -> bool {
        self.homomorphism_defect() <= tol
    }

    /// `ρ(e₁,e₂) = f([e₁,e₂])`.
    pub fn ricci(&self) -> Result<f64> {
        let defect = self.homomorphism_defect();
        if defect > HOMOMORPHISM_TOL {
            return Err(Error::Hypothesis {
                check: "Ψ is a Lie-algebra homomorphism",
                residual: defect,
            });
        }
        Ok(self.algebra.c[0] * self.f[0] + self.algebra.c[1] * self.f[1])
    }

    /// Rank of `u ↦ Ψu`.
    pub fn rank_class(&self) -> Result<usize> {
        let defect = self.homomorphism_defect();
        if defect > HOMOMORPHISM_TOL {
            return Err(Error::Hypothesis {
                check: "Ψ is a Lie-algebra homomorphism",
                residual: defect,
            });
        }
        let stack = nalgebra::Matrix4x2::from_columns(&[
            nalgebra::Vector4::from(row_major(&self.psi[0])),
            nalgebra::Vector4::from(row_major(&self.psi[1])),
        ]);
        let norm = stack.norm();
        if norm == 0.0 {
            return Ok(0);
        }
        let sv = (stack / norm).singular_values();
        let rank = sv.iter().filter(|s| **s > RANK_TOL).count();
        if rank == 2 && self.algebra.is_abelian() {
            return Err(Error::Inconsistent(
                "rank 2 on an Abelian algebra would give a two-dimensional Abelian subalgebra of sl(2,R)"
                    .into(),
            ));
        }
        Ok(rank)
    }

    pub fn to_spec(&self) -> LeftInvSpec {
        LeftInvSpec {
            algebra: self.algebra.c,
            psi: [row_major(&self.psi[0]), row_major(&self.psi[1])],
            f: self.f,
        }
    }

    pub fn from_spec(spec: &LeftInvSpec) -> Result<Self> {
        let m = |r: &[f64; 4]| Matrix2::new(r[0], r[1], r[2], r[3]);
        Self::new(
            LieAlgebra2 { c: spec.algebra },
            [m(&spec.psi[0]), m(&spec.psi[1])],
            spec.f,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::super::subalgebra_from_line;
    use super::*;

    fn e(i: usize) -> Vector2<f64> {
        if i == 0 {
            Vector2::new(1.0, 0.0)
        } else {
            Vector2::new(0.0, 1.0)
        }
    }

    fn rank_two() -> LeftInvConn {
        let (a, b) = subalgebra_from_line([0.0, 1.0]).unwrap();
        LeftInvConn::new(LieAlgebra2::affine(), [a, b], [0.0, 0.0]).unwrap()
    }

    #[test]
    fn zero_datum_is_flat() {
        let c = LeftInvConn::new(LieAlgebra2::affine(), [Matrix2::zeros(); 2], [0.0, 0.0]).unwrap();
        assert_eq!(c.curvature(e(0), e(1)), Matrix2::zeros());
        assert_eq!(c.rank_class().unwrap(), 0);
    }

    #[test]
    fn normal_form_is_flat_homomorphism_of_rank_two() {
        let c = rank_two();
        assert!(c.is_homomorphism(0.0));
        assert_eq!(c.curvature(e(0), e(1)), Matrix2::zeros());
        assert_eq!(c.rank_class().unwrap(), 2);
        assert_eq!(c.ricci().unwrap(), 0.0);
    }

    #[test]
    fn commuting_images_on_abelian_algebra() {
        let h = Matrix2::new(1.0, 0.0, 0.0, -1.0);
        let c = LeftInvConn::new(LieAlgebra2::abelian(), [h, h * 3.0], [2.0, -5.0]).unwrap();
        assert_eq!(c.curvature(e(0), e(1)), Matrix2::zeros());
        assert_eq!(c.ricci().unwrap(), 0.0);
        assert_eq!(c.rank_class().unwrap(), 1);
    }

    #[test]
    fn rank_one_criterion() {
        let b = Matrix2::new(0.3, 1.0, -2.0, -0.3);
        let good = LeftInvConn::rank_one(LieAlgebra2::affine(), [0.0, 1.0], b, [3.0, 0.0]).unwrap();
        assert!(good.is_homomorphism(1e-12));
        assert_eq!(good.rank_class().unwrap(), 1);
        assert_eq!(good.ricci().unwrap(), 3.0);
        let bad = LeftInvConn::rank_one(LieAlgebra2::affine(), [1.0, 1.0], b, [0.0, 0.0]).unwrap();
        assert!(!bad.is_homomorphism(1e-9));
        assert!(bad.ricci().is_err());
    }

    #[test]
    fn rank_two_on_abelian_is_inconsistent() {
        let (a, b) = subalgebra_from_line([1.0, 2.0]).unwrap();
        // Not a homomorphism on the Abelian algebra, so the precondition fires first.
        let c = LeftInvConn::new(LieAlgebra2::abelian(), [a, b], [0.0, 0.0]).unwrap();
        assert!(matches!(c.rank_class(), Err(Error::Hypothesis { .. })));
    }

    #[test]
    fn trace_checked() {
        assert!(LeftInvConn::new(LieAlgebra2::abelian(), [Matrix2::identity(), Matrix2::zeros()], [0.0; 2]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let c = rank_two();
        let text = serde_json::to_string(&c.to_spec()).unwrap();
        assert_eq!(text, r#"{"algebra":[1.0,0.0],"psi":[[0.0,0.0,1.0,0.0],[0.5,0.0,0.0,-0.5]],"f":[0.0,0.0]}"#);
        let back = LeftInvConn::from_spec(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, c);
    }
}
