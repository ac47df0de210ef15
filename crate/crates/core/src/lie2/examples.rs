use crate::chart::Chart2;
use crate::surface::{Connection2, OneForm2};
use crate::symexpr::ScalarField;

fn sf(text: &str) -> ScalarField {
    ScalarField::parse(text, 2).expect("builtin expression parses")
}

/// `ξ = y¹dy² − y²dy¹`, with `dξ = 2 dy¹∧dy²`.
pub fn halfplane_potential() -> OneForm2 {
    OneForm2::new(sf("-y2"), sf("y1"))
}

/// `∇ = D − ξ⊗Id` for the standard flat `D` and [`halfplane_potential`]:
/// torsion form `−ξ` and Ricci tensor `2 dy¹∧dy²`.
pub fn halfplane_connection(chart: Chart2) -> Connection2 {
    Connection2::flat(chart)
        .shift(&halfplane_potential(), -1.0)
        .fold_constants()
}

/// The flat example built on the frame `u = ∂₁`, `v = ∂₁ − e^{−2y¹}∂₂`.
#[derive(Debug, Clone)]
pub struct CncExample {
    pub connection: Connection2,
    pub u: [ScalarField; 2],
    pub v: [ScalarField; 2],
    /// `ξ = dφ` with `ξ(u) = ξ(v) = 4`.
    pub xi: OneForm2,
    pub phi: ScalarField,
}

impl CncExample {
    /// Lie bracket `[u,v]` in coordinates.
    pub fn bracket(&self) -> [ScalarField; 2] {
        lie_bracket(&self.u, &self.v)
    }
}

pub(crate) fn lie_bracket(u: &[ScalarField; 2], v: &[ScalarField; 2]) -> [ScalarField; 2] {
    std::array::from_fn(|l| {
        let terms: Vec<_> = (0..2)
            .map(|j| &u[j] * &v[l].diff(j) - &v[j] * &u[l].diff(j))
            .collect();
        ScalarField::sum(&terms).fold_constants()
    })
}

/// Coordinate coefficients of the connection with `∇_{X_A} X_B = ω[C][A][B] X_C`
/// for the frame `X_A = x[l][A] ∂_l`.
pub(crate) fn connection_from_frame(
    chart: Chart2,
    x: &[[ScalarField; 2]; 2],
    omega: &[[[ScalarField; 2]; 2]; 2],
) -> Connection2 {
    let det = (&x[0][0] * &x[1][1] - &x[0][1] * &x[1][0]).fold_constants();
    // y[A][l], the inverse of x: ∂_l = y[A][l] X_A.
    let y = [
        [&x[1][1] / &det, -(&x[0][1] / &det)],
        [-(&x[1][0] / &det), &x[0][0] / &det],
    ];
    Connection2::from_fn(chart, |l, j, k| {
        let mut terms = Vec::new();
        for b in 0..2 {
            terms.push(y[b][k].diff(j) * &x[l][b]);
            for a in 0..2 {
                for c in 0..2 {
                    terms.push(&y[a][j] * &y[b][k] * &omega[c][a][b] * &x[l][c]);
                }
            }
        }
        ScalarField::sum(&terms).fold_constants()
    })
    .expect("frame data lives on the base chart")
}

/// `∇_u u = u`, `∇_u v = −v`, `∇_v u = u + v`, `∇_v v = e^{−φ}u − v`
/// with `φ = 4y¹`, realized on the frame `u = ∂₁`, `v = ∂₁ − e^{−2y¹}∂₂`.
pub fn cnc_example_connection(chart: Chart2) -> CncExample {
    let (zero, one) = (ScalarField::zero(), ScalarField::one());
    let u = [one.clone(), zero.clone()];
    let v = [one.clone(), sf("-exp(-2*y1)")];
    let phi = sf("4*y1");
    let x = [[u[0].clone(), v[0].clone()], [u[1].clone(), v[1].clone()]];
    let minus = ScalarField::constant(-1.0);
    // omega[C][A][B], index 0 for u and 1 for v.
    let omega = [
        [[one.clone(), zero.clone()], [one.clone(), (-&phi).exp()]],
        [[zero.clone(), minus.clone()], [one.clone(), minus]],
    ];
    CncExample {
        connection: connection_from_frame(chart, &x, &omega),
        u,
        v,
        xi: OneForm2::exact(&phi),
        phi,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chart() -> Chart2 {
        Chart2::new([[-1.0, 1.0], [-1.0, 1.0]]).unwrap()
    }

    #[test]
    fn halfplane_coefficients() {
        let c = halfplane_connection(chart());
        let expect = |l, j, k| match (l, j, k) {
            (0, 0, 0) | (1, 0, 1) => "y2",
            (0, 1, 0) | (1, 1, 1) => "(-1)*y1",
            _ => "0",
        };
        for l in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    assert_eq!(c.gamma(l, j, k).to_string(), expect(l, j, k), "Γ^{l}_{j}{k}");
                }
            }
        }
    }

    #[test]
    fn cnc_frame_and_potential() {
        let ex = cnc_example_connection(chart());
        let two_u_minus_v: [ScalarField; 2] =
            std::array::from_fn(|l| (&(&ex.u[l] - &ex.v[l]) * &ScalarField::constant(2.0)).fold_constants());
        assert_eq!(ex.bracket(), two_u_minus_v);
        for w in [&ex.u, &ex.v] {
            let pairing = (ex.xi.component(0) * &w[0] + ex.xi.component(1) * &w[1]).fold_constants();
            assert_eq!(pairing.as_const(), Some(4.0));
        }
    }

    #[test]
    fn cnc_is_flat() {
        let ex = cnc_example_connection(chart());
        let curv = ex.connection.curvature();
        for p in chart().points().unwrap() {
            assert!(curv.max_abs_at(&p).unwrap() < 1e-10);
        }
    }

    #[test]
    fn cnc_table_recovered() {
        // ∇_v v = e^{−4y¹}u − v, read back through the coordinate coefficients.
        let ex = cnc_example_connection(chart());
        let c = &ex.connection;
        let p = [0.3, -0.2];
        let v: Vec<f64> = ex.v.iter().map(|f| f.eval(&p).unwrap()).collect();
        let nabla_vv: Vec<f64> = (0..2)
            .map(|l| {
                let mut s = 0.0;
                for j in 0..2 {
                    s += v[j] * ex.v[l].diff(j).eval(&p).unwrap();
                    for k in 0..2 {
                        s += c.gamma(l, j, k).eval(&p).unwrap() * v[j] * v[k];
                    }
                }
                s
            })
            .collect();
        let e = (-4.0 * p[0]).exp();
        let expect = [e - v[0], -v[1]];
        for l in 0..2 {
            assert!((nabla_vv[l] - expect[l]).abs() < 1e-13);
        }
    }
}
