use std::io::Write;

use nalgebra::Matrix4;
use rayon::prelude::*;
use serde::Serialize;

use super::{petrov_type, riemann_extension_on, Geometry4, PetrovType, Sym2};
use crate::chart::{Chart2, Chart4};
use crate::check::{max_abs, max_over};
use crate::error::{eval_at, Error, Result};
use crate::surface::Connection2;
use crate::symexpr::ScalarField;

/// `‖W⁺‖` at or below this counts as type O.
pub const PETROV_SCALE_TOL: f64 = 1e-8;
/// Structure tolerance for reading off the projected connection.
pub const PROJECTION_STRUCTURE_TOL: f64 = 1e-8;

pub const RICCI_TOL: f64 = 1e-8;
pub const ASD_TOL: f64 = 1e-8;
pub const WALKER_TOL: f64 = 1e-10;
pub const RVU_TOL: f64 = 1e-8;
pub const PROJECTION_TOL: f64 = 1e-9;
/// Points with `|ρ₁₂|` at least this must be type III.
pub const RHO_III_MIN: f64 = 0.1;
const SKEW_TOL: f64 = 1e-9;

/// Walker-structure residuals at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WalkerChecks {
    /// `max |g(∂_{x_i}, ∂_{x_j})|`.
    pub null: f64,
    /// Horizontal components of `∇̃_{∂_a} ∂_{x_j}`.
    pub parallel: f64,
    /// Horizontal components of a unit basis of `V⊥`.
    pub v_perp: f64,
    /// `max |R(v, ∂_a)u|` over vertical `v` and `u` in `V⊥`.
    pub rvu: f64,
}

impl Geometry4 {
    pub fn walker_checks(&self, p: &[f64; 4]) -> Result<WalkerChecks> {
        let g = self.metric.eval(p)?;
        let null = [g[(2, 2)], g[(2, 3)], g[(3, 3)]].iter().fold(0.0, |m: f64, x| m.max(x.abs()));
        let mut parallel: f64 = 0.0;
        for c in 0..2 {
            for a in 0..4 {
                for j in 2..4 {
                    parallel = parallel.max(eval_at(self.gamma.get(&[c, a, j]), p)?.abs());
                }
            }
        }
        let mut rows = Matrix4::zeros();
        for j in 0..2 {
            rows.set_row(j, &g.row(j + 2));
        }
        let svd = rows.svd(false, true);
        let vt = svd
            .v_t
            .ok_or_else(|| Error::Degenerate("SVD of the vertical pairing failed".into()))?;
        let kernel = [vt.row(2).transpose(), vt.row(3).transpose()];
        let v_perp = kernel
            .iter()
            .map(|u| u[0].abs().max(u[1].abs()))
            .fold(0.0, f64::max);
        let r = self.riemann.eval(p)?;
        let at = |l: usize, j: usize, k: usize, m: usize| r[((l * 4 + j) * 4 + k) * 4 + m];
        let mut rvu: f64 = 0.0;
        for v in 2..4 {
            for a in 0..4 {
                for u in &kernel {
                    for m in 0..4 {
                        let s: f64 = (0..4).map(|k| u[k] * at(v, a, k, m)).sum();
                        rvu = rvu.max(s.abs());
                    }
                }
            }
        }
        Ok(WalkerChecks {
            null,
            parallel,
            v_perp,
            rvu,
        })
    }
}

/// Reads off the surface connection from `∇̃_{∂_{y^j}} ∂_{x_k}`, the vertical
/// lift of `∇_{∂_j} dy^k`: `Γ^k_jm = −Γ̃^{x_m}_{y^j x_k}`.
pub fn project_connection(geo: &Geometry4, chart: Chart2) -> Result<Connection2> {
    let points = geo.points()?;
    let mut horizontal = Vec::new();
    for c in 0..2 {
        for j in 0..2 {
            for k in 2..4 {
                horizontal.push(geo.gamma.get(&[c, j, k]).clone());
            }
        }
    }
    let leak = max_over(&points, |p| {
        let v: Vec<f64> = horizontal.iter().map(|f| eval_at(f, p)).collect::<Result<_>>()?;
        Ok(max_abs(&v))
    })?;
    if leak > PROJECTION_STRUCTURE_TOL {
        return Err(Error::Inconsistent(format!(
            "covariant derivative of a vertical field along a horizontal one is not vertical (residual {leak:e})"
        )));
    }
    let zero = ScalarField::zero();
    let lifted = |k: usize, j: usize, m: usize| -(geo.gamma.get(&[2 + m, j, 2 + k]));
    let base = |f: &ScalarField| f.substitute(2, &zero).substitute(3, &zero).fold_constants();
    let mut fibre_dependence: f64 = 0.0;
    for k in 0..2 {
        for j in 0..2 {
            for m in 0..2 {
                let (full, at_zero) = (lifted(k, j, m), base(&lifted(k, j, m)));
                let d = max_over(&points, |p| Ok((eval_at(&full, p)? - eval_at(&at_zero, p)?).abs()))?;
                fibre_dependence = fibre_dependence.max(d);
            }
        }
    }
    if fibre_dependence > PROJECTION_STRUCTURE_TOL {
        return Err(Error::Inconsistent(format!(
            "projected coefficients depend on the fibre (residual {fibre_dependence:e})"
        )));
    }
    Connection2::from_fn(chart, |k, j, m| base(&lifted(k, j, m)))
}

/// Certification record at one sample point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointRecord {
    pub point: [f64; 4],
    pub rho12: f64,
    pub ricci_residual: f64,
    /// Anti-self-dual Weyl residual for orientations `+1` and `−1`.
    pub asd_weyl_residual: [f64; 2],
    pub sd_weyl_norm: f64,
    pub sd_self_adjoint_residual: f64,
    pub petrov_type: PetrovType,
    pub walker_null_residual: f64,
    pub walker_parallel_residual: f64,
    pub v_perp_residual: f64,
    pub rvu_residual: f64,
    pub projection_residual: f64,
}

impl PointRecord {
    fn certified_asd(&self, orientation: i8) -> f64 {
        self.asd_weyl_residual[if orientation > 0 { 0 } else { 1 }]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertSummary {
    pub ricci_residual: f64,
    pub asd_weyl_residual: f64,
    pub walker_residual: f64,
    pub v_perp_residual: f64,
    pub rvu_residual: f64,
    pub projection_residual: f64,
    pub type_iii_points: usize,
    pub type_o_points: usize,
    pub other_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertReport {
    /// Orientation (`±1`) with the smaller anti-self-dual residual.
    pub orientation: i8,
    pub records: Vec<PointRecord>,
    pub summary: CertSummary,
    pub passed: bool,
    /// Human-readable list of breached checks.
    pub failures: Vec<String>,
}

impl CertReport {
    fn new(orientation: i8, records: Vec<PointRecord>) -> Self {
        let max = |f: &dyn Fn(&PointRecord) -> f64| records.iter().map(f).fold(0.0, f64::max);
        let count = |t: PetrovType| records.iter().filter(|r| r.petrov_type == t).count();
        let summary = CertSummary {
            ricci_residual: max(&|r| r.ricci_residual),
            asd_weyl_residual: max(&|r| r.certified_asd(orientation)),
            walker_residual: max(&|r| r.walker_null_residual.max(r.walker_parallel_residual)),
            v_perp_residual: max(&|r| r.v_perp_residual),
            rvu_residual: max(&|r| r.rvu_residual),
            projection_residual: max(&|r| r.projection_residual),
            type_iii_points: count(PetrovType::III),
            type_o_points: count(PetrovType::O),
            other_points: count(PetrovType::Other),
        };
        let mut failures = Vec::new();
        let bound = |failures: &mut Vec<String>, name: &str, value: f64, tol: f64| {
            if !(value <= tol) {
                failures.push(format!("{name}: {value:e} > {tol:e}"));
            }
        };
        bound(&mut failures, "ricci", summary.ricci_residual, RICCI_TOL);
        bound(&mut failures, "walker", summary.walker_residual, WALKER_TOL);
        bound(&mut failures, "v_perp", summary.v_perp_residual, WALKER_TOL);
        bound(&mut failures, "rvu", summary.rvu_residual, RVU_TOL);
        bound(&mut failures, "projection", summary.projection_residual, PROJECTION_TOL);
        for r in &records {
            bound(&mut failures, "anti-self-dual weyl", r.certified_asd(orientation), ASD_TOL * (1.0 + r.sd_weyl_norm));
            if r.rho12.abs() >= RHO_III_MIN && r.petrov_type != PetrovType::III {
                failures.push(format!("petrov type {} at {:?} with ρ₁₂ = {}", r.petrov_type, r.point, r.rho12));
            }
            if r.rho12 == 0.0 && r.petrov_type != PetrovType::O {
                failures.push(format!("petrov type {} at {:?} where ρ₁₂ = 0", r.petrov_type, r.point));
            }
        }
        CertReport {
            orientation,
            records,
            summary,
            passed: failures.is_empty(),
            failures,
        }
    }

    /// One row per point: coordinates followed by the residual columns.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let io = |e: csv::Error| Error::InvalidInput(format!("csv output: {e}"));
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "y1", "y2", "x1", "x2", "rho12", "ricci", "asd_plus", "asd_minus", "sd_norm", "petrov",
            "walker_null", "walker_parallel", "v_perp", "rvu", "projection",
        ])
        .map_err(io)?;
        for r in &self.records {
            let mut row: Vec<String> = r.point.iter().map(|x| format!("{x:.16e}")).collect();
            row.extend(
                [r.rho12, r.ricci_residual, r.asd_weyl_residual[0], r.asd_weyl_residual[1], r.sd_weyl_norm]
                    .iter()
                    .map(|x| format!("{x:.16e}")),
            );
            row.push(r.petrov_type.to_string());
            row.extend(
                [
                    r.walker_null_residual,
                    r.walker_parallel_residual,
                    r.v_perp_residual,
                    r.rvu_residual,
                    r.projection_residual,
                ]
                .iter()
                .map(|x| format!("{x:.16e}")),
            );
            w.write_record(&row).map_err(io)?;
        }
        w.flush().map_err(|e| Error::InvalidInput(format!("csv output: {e}")))?;
        Ok(())
    }
}

/// Builds the Riemann extension of `c` with `λ` on `chart`, then checks
/// Ricci-flatness, self-duality for the better orientation, the Petrov type,
/// the Walker structure and the projected connection at every sample point.
pub fn certify(c: &Connection2, lambda: &Sym2, chart: Chart4) -> Result<CertReport> {
    let skew = c.is_ricci_skew(SKEW_TOL)?;
    if !skew.holds {
        return Err(Error::Hypothesis {
            check: "Ricci tensor is skew-symmetric",
            residual: skew.max_residual,
        });
    }
    let geo = Geometry4::new(riemann_extension_on(c, lambda, chart)?);
    certify_geometry(&geo, c)
}

/// As [`certify`] for an already assembled geometry, compared against `c`.
pub(crate) fn certify_geometry(geo: &Geometry4, c: &Connection2) -> Result<CertReport> {
    let points = geo.points()?;
    let projected = project_connection(geo, c.chart().clone())?;
    let rho = c.ricci_two_form().0;

    struct Raw {
        record: PointRecord,
        plus: [super::WeylOperator; 2],
    }
    let raws: Vec<Raw> = points
        .par_iter()
        .map(|p| {
            let y = [p[0], p[1]];
            let pos = geo.weyl_split(1.0, p)?;
            let neg = geo.weyl_split(-1.0, p)?;
            let wc = geo.walker_checks(p)?;
            let mut projection_residual: f64 = 0.0;
            for l in 0..2 {
                for j in 0..2 {
                    for k in 0..2 {
                        let d = eval_at(projected.gamma(l, j, k), &y)? - eval_at(c.gamma(l, j, k), &y)?;
                        projection_residual = projection_residual.max(d.abs());
                    }
                }
            }
            Ok(Raw {
                record: PointRecord {
                    point: *p,
                    rho12: eval_at(&rho, &y)? + 0.0,
                    ricci_residual: geo.ricci_residual(p)?,
                    asd_weyl_residual: [pos.asd_residual, neg.asd_residual],
                    sd_weyl_norm: 0.0,
                    sd_self_adjoint_residual: 0.0,
                    petrov_type: PetrovType::O,
                    walker_null_residual: wc.null,
                    walker_parallel_residual: wc.parallel,
                    v_perp_residual: wc.v_perp,
                    rvu_residual: wc.rvu,
                    projection_residual,
                },
                plus: [pos.plus, neg.plus],
            })
        })
        .collect::<Result<_>>()?;

    let worst = |i: usize| raws.iter().map(|r| r.record.asd_weyl_residual[i]).fold(0.0, f64::max);
    let (orientation, slot) = if worst(0) <= worst(1) { (1, 0) } else { (-1, 1) };
    let records = raws
        .into_iter()
        .map(|raw| {
            let w = &raw.plus[slot];
            PointRecord {
                sd_weyl_norm: w.norm(),
                sd_self_adjoint_residual: w.self_adjoint_residual(),
                petrov_type: petrov_type(w, PETROV_SCALE_TOL),
                ..raw.record
            }
        })
        .collect();
    Ok(CertReport::new(orientation, records))
}

#[cfg(test)]
mod tests {
    use super::super::{extension_chart, riemann_extension, zero_sym2};
    use super::*;
    use crate::chart::Sampling;
    use crate::surface::wong_connection;

    fn base() -> Chart2 {
        Chart2::new([[0.5, 2.0], [0.5, 2.0]])
            .unwrap()
            .with_sampling(Sampling { count: 12, seed: 5 })
    }

    fn wong(text: &str) -> Connection2 {
        wong_connection(&ScalarField::parse(text, 2).unwrap(), base())
    }

    fn sin_lambda() -> Sym2 {
        [
            [ScalarField::parse("sin(y1)", 2).unwrap(), ScalarField::zero()],
            [ScalarField::zero(), ScalarField::parse("y2^2", 2).unwrap()],
        ]
    }

    #[test]
    fn wong_certifies() {
        for lam in [zero_sym2(), sin_lambda()] {
            let c = wong("y1*y2");
            let report = certify(&c, &lam, extension_chart(c.chart()).unwrap()).unwrap();
            assert!(report.passed, "{:?}", report.failures);
            assert_eq!(report.summary.type_iii_points, 12);
        }
    }

    #[test]
    fn flat_certifies_type_o() {
        let c = Connection2::flat(base());
        let report = certify(&c, &zero_sym2(), extension_chart(c.chart()).unwrap()).unwrap();
        assert!(report.passed, "{:?}", report.failures);
        assert_eq!(report.summary.type_o_points, 12);
        assert_eq!(report.summary.ricci_residual, 0.0);
    }

    #[test]
    fn projection_ignores_lambda() {
        let c = wong("y1*y2");
        for lam in [zero_sym2(), sin_lambda()] {
            let geo = Geometry4::new(riemann_extension(&c, &lam).unwrap());
            let back = project_connection(&geo, base()).unwrap();
            assert!(back.same_coefficients(&c.fold_constants()) || back.max_difference(&c, &base().points().unwrap()).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn controls_break_walker_checks() {
        let c = wong("y1*y2");
        let g = riemann_extension(&c, &zero_sym2()).unwrap();
        let x1 = ScalarField::var(2);
        let bent = Geometry4::new(g.with_added(0, 0, &(&x1 * &x1)).unwrap());
        let p = bent.points().unwrap()[0];
        assert!(bent.walker_checks(&p).unwrap().rvu > 1e-8);
        let nonnull = Geometry4::new(g.with_added(2, 2, &ScalarField::one()).unwrap());
        assert!(nonnull.walker_checks(&p).unwrap().null >= 1.0);
    }

    #[test]
    fn report_summary_matches_records() {
        let c = wong("y1*y2");
        let report = certify(&c, &zero_sym2(), extension_chart(c.chart()).unwrap()).unwrap();
        let m = report.records.iter().map(|r| r.rvu_residual).fold(0.0, f64::max);
        assert_eq!(m, report.summary.rvu_residual);
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 13);
    }
}

#[cfg(test)]
mod degenerate_locus {
    use super::super::extension_chart;
    use super::*;
    use crate::chart::Sampling;
    use crate::surface::wong_connection;

    #[test]
    fn vanishing_ricci_line_reports_type_o() {
        // ρ₁₂ = −3y1² vanishes on the whole sampled segment y1 = 0.
        let base = Chart2::new([[0.0, 0.0], [0.5, 2.0]])
            .unwrap()
            .with_sampling(Sampling { count: 8, seed: 11 });
        let c = wong_connection(&ScalarField::parse("y1^3*y2", 2).unwrap(), base);
        let report = certify(&c, &super::super::zero_sym2(), extension_chart(c.chart()).unwrap()).unwrap();
        assert_eq!(report.summary.type_o_points, 8);
    }
}
