//! The five verification suites behind the subcommands.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use skewric::dynamics::{
    euler_lagrange_equivalence, first_integral_drift, integrate_geodesic, inverse_legendre, legendre,
    time_reversal_residual, write_trajectory_csv, CotangentState, FrameData, GeodesicState, PhaseState,
};
use skewric::lie2::{classify_subalgebra, subalgebra_from_line, LeftInvConn};
use skewric::walker4::{certify, extension_chart, zero_sym2};
use skewric::{Chart2, Chart4, Error, Result};

use crate::job::JobSpec;

/// Result of one suite: verdict, JSON payload, extra files for `--out`.
#[derive(Default)]
pub struct Outcome {
    pub failures: Vec<String>,
    pub result: Value,
    pub files: Vec<(String, Vec<u8>)>,
}

impl Outcome {
    fn require(&mut self, ok: bool, message: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(message());
        }
    }
}

/// Splits off hypothesis failures, which are verification outcomes rather than input errors.
fn hypothesis<T>(r: Result<T>) -> Result<Result<T, String>> {
    match r {
        Ok(v) => Ok(Ok(v)),
        Err(e @ (Error::Hypothesis { .. } | Error::Degenerate(_) | Error::Admissibility(_))) => {
            Ok(Err(e.to_string()))
        }
        Err(e) => Err(e),
    }
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report types serialize")
}

/// Seeded states in the middle half of the chart, velocity with `v1 ≥ 0.3`.
fn seeded_states(chart: &Chart2, n: usize, seed: u64) -> Vec<GeodesicState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let [b1, b2] = *chart.bounds();
    let mid = |b: [f64; 2]| {
        let (c, h) = ((b[0] + b[1]) / 2.0, (b[1] - b[0]) / 4.0);
        (c - h, c + h)
    };
    let (r1, r2) = (mid(b1), mid(b2));
    (0..n)
        .map(|_| {
            let y = [rng.gen_range(r1.0..r1.1), rng.gen_range(r2.0..r2.1)];
            let v = [rng.gen_range(0.3..1.0), rng.gen_range(-1.0..1.0)];
            GeodesicState::new(y, v)
        })
        .collect()
}

pub fn verify_surface(job: &JobSpec, tol: f64) -> Result<Outcome> {
    let r = job.resolve()?;
    let c = &r.connection;
    let mut out = Outcome::default();

    let skew = c.is_ricci_skew(tol)?;
    out.require(skew.holds, || {
        format!("Ricci symmetric part {:e} exceeds {tol:e}", skew.max_residual)
    });
    let pflat = c.is_projectively_flat(tol)?;
    out.require(pflat.holds, || {
        format!("traceless curvature {:e} exceeds {tol:e}", pflat.max_residual)
    });

    let decomposition = match &r.gauge {
        None => json!({"status": "skipped", "reason": "no gauge given"}),
        Some(xi) => match hypothesis(c.decompose_with(xi, tol))? {
            Ok((_, rep)) => json!({"status": "passed", "gauge": [xi.component(0).to_string(), xi.component(1).to_string()], "report": rep}),
            Err(msg) => {
                out.failures.push(format!("decomposition: {msg}"));
                json!({"status": "failed", "error": msg})
            }
        },
    };

    let mask = job.mask.unwrap_or(0.1);
    let recurrence = if !skew.holds {
        json!({"status": "skipped", "reason": "Ricci tensor is not skew"})
    } else {
        match hypothesis(c.recurrence_form_masked(tol, mask))? {
            Ok(rec) => {
                out.require(rec.verdict.holds, || {
                    format!("recurrence residual {:e} exceeds {tol:e}", rec.verdict.max_residual)
                });
                json!({
                    "status": if rec.verdict.holds { "passed" } else { "failed" },
                    "phi": [rec.phi.fold_constants().component(0).to_string(), rec.phi.fold_constants().component(1).to_string()],
                    "evaluated": rec.evaluated,
                    "masked": rec.masked,
                    "verdict": rec.verdict,
                })
            }
            Err(msg) => json!({"status": "skipped", "reason": msg}),
        }
    };

    let theta = c.torsion_form().fold_constants();
    out.result = json!({
        "connection": r.label,
        "rho12": c.ricci_two_form().0.fold_constants().to_string(),
        "torsion_form": [theta.component(0).to_string(), theta.component(1).to_string()],
        "ricci_skew": skew,
        "projectively_flat": pflat,
        "decomposition": decomposition,
        "recurrence": recurrence,
    });
    Ok(out)
}

fn matrix(m: &skewric::lie2::Matrix2) -> [f64; 4] {
    [m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]]
}

pub fn lie_classify(job: &JobSpec, tol: f64) -> Result<Outcome> {
    let mut out = Outcome::default();
    let mut result = serde_json::Map::new();
    let pair = match (&job.subalgebra, job.line) {
        (Some(s), _) => Some((
            skewric::lie2::Matrix2::from_row_slice(&s.a0),
            skewric::lie2::Matrix2::from_row_slice(&s.b0),
        )),
        (None, Some(line)) => Some(subalgebra_from_line(line)?),
        (None, None) => None,
    };
    if let Some((a0, b0)) = pair {
        let nf = classify_subalgebra(&a0, &b0, tol)?;
        let bracket = skewric::lie2::commutator(&nf.a, &nf.b) - nf.a;
        let null = skewric::lie2::killing(&nf.a, &nf.a);
        out.require(bracket.amax() <= tol && null.abs() <= tol, || {
            format!("normal form residual [A,B]−A {:e}, ⟨A,A⟩ {null:e}", bracket.amax())
        });
        result.insert(
            "subalgebra".into(),
            json!({
                "a": matrix(&nf.a),
                "b": matrix(&nf.b),
                "w": [nf.w.x, nf.w.y],
                "w_prime": [nf.w_prime.x, nf.w_prime.y],
                "bracket_residual": bracket.amax(),
                "killing_aa": null,
            }),
        );
    }
    if let Some(spec) = &job.leftinv {
        let conn = LeftInvConn::from_spec(spec)?;
        let defect = conn.homomorphism_defect();
        let homomorphism = conn.is_homomorphism(tol);
        out.require(homomorphism, || {
            format!("Ψ is not a homomorphism: defect {defect:e} exceeds {tol:e}")
        });
        let mut entry = json!({
            "homomorphism": homomorphism,
            "homomorphism_defect": defect,
        });
        if homomorphism {
            entry["rank"] = json!(conn.rank_class()?);
            entry["ricci_e1e2"] = json!(conn.ricci()?);
        }
        result.insert("left_invariant".into(), entry);
    }
    if result.is_empty() {
        return Err(Error::InvalidInput("lie-classify needs `subalgebra`, `line` or `leftinv`".into()));
    }
    out.result = Value::Object(result);
    Ok(out)
}

pub fn geodesic(job: &JobSpec, tol: f64) -> Result<Outcome> {
    let r = job.resolve()?;
    let c = &r.connection;
    let omega = job.omega(&r)?;
    let (t_end, dt) = (job.t_end.unwrap_or(1.0), job.dt.unwrap_or(1e-3));
    let states = job
        .initial_states()
        .unwrap_or_else(|| seeded_states(c.chart(), job.trajectories.unwrap_or(1), job.seed()));
    let mut out = Outcome::default();
    let mut runs = Vec::new();
    for (i, s0) in states.into_iter().enumerate() {
        let traj = integrate_geodesic(c, s0, t_end, dt)?;
        let mut run = json!({
            "initial": s0,
            "steps": traj.t.len() - 1,
            "t_final": traj.t.last().copied().unwrap_or(0.0),
            "halted": traj.halted,
        });
        out.require(traj.halted.is_none(), || {
            format!("trajectory {i} halted: {:?}", traj.halted)
        });
        if traj.halted.is_none() {
            let rev = time_reversal_residual(c, s0, t_end, dt)?;
            run["time_reversal_residual"] = json!(rev);
            out.require(rev <= 1e-8, || format!("trajectory {i}: time reversal residual {rev:e}"));
        }
        if let Some(omega) = &omega {
            match hypothesis(first_integral_drift(omega, &traj))? {
                Ok(drift) => {
                    out.require(drift.max_drift <= tol, || {
                        format!("trajectory {i}: first-integral drift {:e} exceeds {tol:e}", drift.max_drift)
                    });
                    run["zero_branch"] = json!(drift.zero_branch);
                    run["max_drift"] = json!(drift.max_drift);
                    let mut csv = Vec::new();
                    write_trajectory_csv(&mut csv, &traj, &drift)?;
                    out.files.push((format!("trajectory_{i}.csv"), csv));
                }
                Err(msg) => {
                    out.failures.push(format!("trajectory {i}: {msg}"));
                    run["drift_error"] = json!(msg);
                }
            }
        }
        runs.push(run);
    }
    out.result = json!({
        "connection": r.label,
        "first_integral": omega.is_some(),
        "t_end": t_end,
        "dt": dt,
        "trajectories": runs,
    });
    Ok(out)
}

pub fn dynamics_check(job: &JobSpec, tol: f64) -> Result<Outcome> {
    let resolved = job.connection.as_ref().map(|_| job.resolve()).transpose()?;
    let chart = match (&resolved, &job.chart) {
        (Some(r), _) => r.connection.chart().clone(),
        (None, Some(spec)) => Chart2::from_spec(spec)?.with_sampling(job.sampling()),
        (None, None) => Chart2::new([[-1.0, 1.0], [-1.0, 1.0]])?.with_sampling(job.sampling()),
    };
    let fd = match (job.frame()?, resolved.as_ref().and_then(|r| r.phi.as_ref())) {
        (Some((v, w)), _) => hypothesis(FrameData::new(v, w, chart.clone()))?,
        (None, Some(phi)) => hypothesis(FrameData::wong(phi, chart.clone()))?,
        (None, None) => {
            return Err(Error::InvalidInput(
                "dynamics-check needs a `frame` or a wong:<expr> connection".into(),
            ))
        }
    };
    let mut out = Outcome::default();
    let fd = match fd {
        Ok(fd) => fd,
        Err(msg) => {
            out.failures.push(msg.clone());
            out.result = json!({"frame_error": msg});
            return Ok(out);
        }
    };
    let nabla = match &resolved {
        Some(r) => r.connection.clone(),
        None => fd.d.shift(&fd.tau, -1.0),
    };

    let mut rng = ChaCha8Rng::seed_from_u64(job.seed());
    let [b1, b2] = *chart.bounds();
    let (mut round, mut lh, mut symp, mut push) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..job.states.unwrap_or(100) {
        let y = [rng.gen_range(b1[0]..b1[1]), rng.gen_range(b2[0]..b2[1])];
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let p = PhaseState { y, a: sign * rng.gen_range(0.2..2.0), b: rng.gen_range(-2.0..2.0) };
        let cs = legendre(&p)?;
        let back = inverse_legendre(&cs)?;
        round = round.max((back.a - p.a).abs()).max((back.b - p.b).abs());
        lh = lh.max((cs.hamiltonian() + p.lagrangian()).abs());
        let q = CotangentState { y, r: rng.gen_range(-2.0..2.0), s: sign * rng.gen_range(0.2..2.0) };
        symp = symp.max(fd.symplectic_residual(&q)?);
        push = push.max(fd.legendre_pushforward_residual(&p)?);
    }
    let fractional = fd.fractional_linear_residual()?;
    out.require(round <= 1e-14, || format!("Legendre round trip {round:e}"));
    out.require(lh <= 1e-12, || format!("H∘legendre + L {lh:e}"));
    out.require(symp <= tol, || format!("symplectic residual {symp:e}"));
    out.require(push <= 1e-7, || format!("Legendre pushforward residual {push:e}"));
    out.require(fractional <= tol, || format!("fractional-linear residual {fractional:e}"));

    let (t_end, dt) = (job.t_end.unwrap_or(1.0), job.dt.unwrap_or(1e-3));
    let starts = job
        .initial_states()
        .unwrap_or_else(|| seeded_states(&chart, job.trajectories.unwrap_or(5), job.seed()));
    let wrong = fd.with_negated_torsion();
    let mut runs = Vec::new();
    let mut control: f64 = 0.0;
    for (i, s0) in starts.into_iter().enumerate() {
        match hypothesis(euler_lagrange_equivalence(&nabla, &fd, s0, t_end, dt))? {
            Ok(eq) => {
                out.require(eq.max_deviation <= 1e-6 && eq.halted.is_none(), || {
                    format!("start {i}: geodesic vs frame flow {:e}, halted {:?}", eq.max_deviation, eq.halted)
                });
                let ctl = hypothesis(euler_lagrange_equivalence(&nabla, &wrong, s0, t_end, dt))?
                    .map(|e| e.max_deviation)
                    .unwrap_or(f64::INFINITY);
                control = control.max(ctl);
                runs.push(json!({"initial": s0, "equivalence": eq, "negated_torsion_deviation": ctl}));
            }
            Err(msg) => {
                out.failures.push(format!("start {i}: {msg}"));
                runs.push(json!({"initial": s0, "error": msg}));
            }
        }
    }
    out.result = json!({
        "connection": resolved.as_ref().map_or("frame".to_string(), |r| r.label.clone()),
        "frame": {
            "v": [fd.v[0].to_string(), fd.v[1].to_string()],
            "w": [fd.w[0].to_string(), fd.w[1].to_string()],
            "p": fd.p.to_string(),
            "q": fd.q.to_string(),
        },
        "legendre_round_trip": round,
        "hamiltonian_plus_lagrangian": lh,
        "symplectic_residual": symp,
        "pushforward_residual": push,
        "fractional_linear_residual": fractional,
        "euler_lagrange": runs,
        "negated_torsion_control_max": control,
    });
    Ok(out)
}

pub fn extend_certify(job: &JobSpec) -> Result<Outcome> {
    let r = job.resolve()?;
    let lambda = job.lambda()?.unwrap_or_else(zero_sym2);
    let chart4 = match &job.chart4 {
        Some(spec) => Chart4::from_spec(spec)?,
        None => extension_chart(r.connection.chart())?,
    }
    .with_sampling(job.sampling());
    let mut out = Outcome::default();
    match hypothesis(certify(&r.connection, &lambda, chart4))? {
        Ok(report) => {
            out.failures.extend(report.failures.iter().cloned());
            if !report.passed && report.failures.is_empty() {
                out.failures.push("certification failed".into());
            }
            let mut csv = Vec::new();
            report.write_csv(&mut csv)?;
            out.files.push(("points.csv".into(), csv));
            out.result = json!({"connection": r.label, "certificate": to_value(&report)});
        }
        Err(msg) => {
            out.failures.push(msg.clone());
            out.result = json!({"connection": r.label, "error": msg});
        }
    }
    Ok(out)
}
