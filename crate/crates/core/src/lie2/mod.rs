//! Two-dimensional Lie algebras, `sl(2,R)` with its Killing form, and
//! left-invariant connections.

mod examples;
mod leftinv;

use nalgebra::Vector2;

pub use examples::{cnc_example_connection, halfplane_connection, halfplane_potential, CncExample};
pub use leftinv::{LeftInvConn, LeftInvSpec, LieAlgebra2};

use crate::error::{Error, Result};

pub type Matrix2 = nalgebra::Matrix2<f64>;

pub fn commutator(a: &Matrix2, b: &Matrix2) -> Matrix2 {
    a * b - b * a
}

/// `⟨A,B⟩ = tr(AB)/2`; on traceless matrices `⟨A,A⟩ = −det A`.
pub fn killing(a: &Matrix2, b: &Matrix2) -> f64 {
    (a * b).trace() / 2.0
}

/// Coordinates of a traceless matrix in [`sl2_basis`].
pub fn sl2_coords(x: &Matrix2) -> nalgebra::Vector3<f64> {
    let (p, q, r) = (x[(0, 0)], x[(0, 1)], x[(1, 0)]);
    nalgebra::Vector3::new((q - r) / 2.0, (q + r) / 2.0, p)
}

/// Volume form `μ(A,B,C) = det[A B C]` in the coordinates of [`sl2_basis`].
pub fn mu(a: &Matrix2, b: &Matrix2, c: &Matrix2) -> f64 {
    nalgebra::Matrix3::from_columns(&[sl2_coords(a), sl2_coords(b), sl2_coords(c)]).determinant()
}

/// The orthonormal basis of `sl(2,R)` with `μ = 1`: a rotation generator,
/// a symmetric off-diagonal matrix, and `diag(1,−1)`.
pub fn sl2_basis() -> [Matrix2; 3] {
    [
        Matrix2::new(0.0, 1.0, -1.0, 0.0),
        Matrix2::new(0.0, 1.0, 1.0, 0.0),
        Matrix2::new(1.0, 0.0, 0.0, -1.0),
    ]
}

/// Gram matrix of the Killing form in the basis [`sl2_basis`].
pub fn sl2_gram() -> nalgebra::Matrix3<f64> {
    let b = sl2_basis();
    nalgebra::Matrix3::from_fn(|i, j| killing(&b[i], &b[j]))
}

fn max_entry(m: &Matrix2) -> f64 {
    m.iter().fold(0.0, |a, x| a.max(x.abs()))
}

/// Matrices `(A, B)` realizing `Aw = w′, Aw′ = 0, Bw = w/2, Bw′ = −w′/2`.
pub fn normal_form_in_basis(w: Vector2<f64>, w_prime: Vector2<f64>) -> Result<(Matrix2, Matrix2)> {
    let basis = Matrix2::from_columns(&[w, w_prime]);
    let inv = basis
        .try_inverse()
        .ok_or_else(|| Error::Degenerate("w and w′ are linearly dependent".into()))?;
    // Adding 0.0 clears negative zeros so printed output stays clean.
    let a = (Matrix2::from_columns(&[w_prime, Vector2::zeros()]) * inv).map(|x| x + 0.0);
    let b = (Matrix2::from_columns(&[w * 0.5, w_prime * -0.5]) * inv).map(|x| x + 0.0);
    Ok((a, b))
}

/// Basis `(A, B)` of the subalgebra of `sl(2,R)` preserving `span(direction)`,
/// in the normal form with `[A,B] = A` and `A` killing the line.
pub fn subalgebra_from_line(direction: [f64; 2]) -> Result<(Matrix2, Matrix2)> {
    let d = Vector2::from(direction);
    let n = d.norm();
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::InvalidInput("direction of the invariant line is zero".into()));
    }
    let w_prime = d / n;
    let w = Vector2::new(w_prime.y, -w_prime.x);
    normal_form_in_basis(w, w_prime)
}

/// Normal form of a two-dimensional subalgebra of `sl(2,R)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubalgebraNormalForm {
    /// Null generator of `g⊥ = [g,g]`.
    pub a: Matrix2,
    pub b: Matrix2,
    pub w: Vector2<f64>,
    pub w_prime: Vector2<f64>,
}

/// Finds `A, B` spanning `span{A0, B0}` with `[A,B] = A`, plus the basis
/// `(w, w′)` of the plane in which they take the normal form.
pub fn classify_subalgebra(a0: &Matrix2, b0: &Matrix2, tol: f64) -> Result<SubalgebraNormalForm> {
    for (name, m) in [("A0", a0), ("B0", b0)] {
        if m.trace().abs() > tol {
            return Err(Error::InvalidInput(format!("{name} is not traceless")));
        }
    }
    let scale = max_entry(a0).max(max_entry(b0)).max(f64::MIN_POSITIVE);
    let stack = nalgebra::Matrix4x2::from_columns(&[
        nalgebra::Vector4::from_iterator(a0.iter().copied()),
        nalgebra::Vector4::from_iterator(b0.iter().copied()),
    ]) / scale;
    let sv = stack.svd(false, false).singular_values;
    if sv.min() <= tol {
        return Err(Error::InvalidInput("A0 and B0 are linearly dependent".into()));
    }
    let c = commutator(a0, b0);
    if max_entry(&c) <= tol * scale * scale {
        return Err(Error::Inconsistent(
            "span is Abelian, which no two-dimensional subalgebra of sl(2,R) is".into(),
        ));
    }
    // Closure: the commutator must lie in the span.
    let target = nalgebra::Vector4::from_iterator(c.iter().copied()) / scale;
    let coef = stack
        .svd(true, true)
        .solve(&target, 0.0)
        .map_err(|e| Error::Inconsistent(e.to_string()))?;
    let closure = (stack * coef - target).amax();
    if closure > tol * scale.max(1.0) {
        return Err(Error::InvalidInput(format!(
            "span is not closed under the bracket (residual {closure:e})"
        )));
    }
    // [C, X] = κ(X) C on the span; rescale the better-conditioned generator.
    let kappa = |x: &Matrix2| commutator(&c, x).dot(&c) / c.dot(&c);
    let (ka, kb) = (kappa(a0), kappa(b0));
    let b = if ka.abs() >= kb.abs() { a0 / ka } else { b0 / kb };
    let a = c;
    let w = eigenvector(&(b - Matrix2::identity() * 0.5));
    let w_prime = a * w;
    Ok(SubalgebraNormalForm { a, b, w, w_prime })
}

/// Unit vector spanning the kernel of a rank-one 2×2 matrix.
fn eigenvector(m: &Matrix2) -> Vector2<f64> {
    let r0 = Vector2::new(m[(0, 0)], m[(0, 1)]);
    let r1 = Vector2::new(m[(1, 0)], m[(1, 1)]);
    let row = if r0.norm() >= r1.norm() { r0 } else { r1 };
    Vector2::new(-row.y, row.x).normalize()
}
