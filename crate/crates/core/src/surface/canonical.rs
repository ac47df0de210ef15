use super::{Connection2, OneForm2};
use crate::chart::Chart2;
use crate::check::max_over;
use crate::error::{eval_at, Error, Result};
use crate::symexpr::ScalarField;

/// Torsion-free connection with `Γ¹₁₁ = −∂₁φ`, `Γ²₂₂ = ∂₂φ`, all else zero.
/// Its Ricci tensor is skew with `ρ₁₂ = −∂₁∂₂φ`.
pub fn wong_connection(phi: &ScalarField, chart: Chart2) -> Connection2 {
    let g111 = -phi.diff(0);
    let g222 = phi.diff(1);
    Connection2::from_fn(chart, |l, j, k| match (l, j, k) {
        (0, 0, 0) => g111.clone(),
        (1, 1, 1) => g222.clone(),
        _ => ScalarField::zero(),
    })
    .expect("wong coefficients live on the base chart")
}

/// Gauge potential `ξ = (0, −∂₂φ)` with `dξ = ρ`; shifting by it gives a flat
/// connection for which `e^{−φ}dy¹` and `dy²` are parallel.
pub fn wong_gauge(phi: &ScalarField) -> OneForm2 {
    OneForm2([ScalarField::zero(), -phi.diff(1)])
}

/// Smallest `|ζ∧η|` accepted at a sample point.
const COFRAME_DET_MIN: f64 = 1e-12;

/// The flat connection `D` making the coframe `(ζ, η)` parallel, and the
/// torsion-free `∇ = D − τ⊗Id` where `τ` is the torsion form of `D`.
pub fn connection_from_coframe(
    zeta: &OneForm2,
    eta: &OneForm2,
    chart: Chart2,
) -> Result<(Connection2, Connection2)> {
    let det = (zeta.component(0) * eta.component(1) - zeta.component(1) * eta.component(0))
        .fold_constants();
    let worst_inverse = max_over(&chart.points()?, |p| Ok(1.0 / eval_at(&det, p)?.abs()))?;
    let min_det = worst_inverse.recip();
    if min_det < COFRAME_DET_MIN {
        return Err(Error::Degenerate(format!(
            "ζ∧η has magnitude {min_det:e} at a sample point"
        )));
    }
    // Dual frame: E[l][A], with A = 0 for ζ and A = 1 for η.
    let e = [
        [eta.component(1) / &det, -(zeta.component(1) / &det)],
        [-(eta.component(0) / &det), zeta.component(0) / &det],
    ];
    let coframe = [zeta, eta];
    let d = Connection2::from_fn(chart, |l, j, k| {
        let terms: Vec<_> = (0..2)
            .map(|a| &e[l][a] * &coframe[a].component(k).diff(j))
            .collect();
        ScalarField::sum(&terms).fold_constants()
    })?;
    let tau = d.torsion_form();
    let nabla = d.shift(&tau, -1.0).fold_constants();
    Ok((d, nabla))
}
