use serde::Serialize;

use super::{integrate_geodesic, rk4_step, steps_for, GeodesicState, Halt};
use crate::chart::Chart2;
use crate::check::{max_abs, max_over};
use crate::error::{eval_at, Error, Result};
use crate::surface::{connection_from_coframe, Connection2, OneForm2};
use crate::symexpr::ScalarField;

/// Flows stop once `|a|` (tangent side) or `|s|` (cotangent side) drops below this.
pub const ADMISSIBLE_MIN: f64 = 0.05;
const PARALLEL_TOL: f64 = 1e-9;
const PRECONDITION_TOL: f64 = 1e-9;

/// A tangent vector `a·v + b·w` at `y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseState {
    pub y: [f64; 2],
    pub a: f64,
    pub b: f64,
}

/// A covector `r·ζ + s·η` at `y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CotangentState {
    pub y: [f64; 2],
    pub r: f64,
    pub s: f64,
}

/// `(a, b) ↦ (r, s) = (−b/a², 1/a)`.
pub fn legendre(p: &PhaseState) -> Result<CotangentState> {
    if p.a == 0.0 || !p.a.is_finite() {
        return Err(Error::Admissibility(format!("Legendre map needs a ≠ 0, got a = {}", p.a)));
    }
    Ok(CotangentState {
        y: p.y,
        r: -p.b / (p.a * p.a),
        s: 1.0 / p.a,
    })
}

/// `(r, s) ↦ (a, b) = (1/s, −r/s²)`.
pub fn inverse_legendre(c: &CotangentState) -> Result<PhaseState> {
    if c.s == 0.0 || !c.s.is_finite() {
        return Err(Error::Admissibility(format!("inverse Legendre map needs s ≠ 0, got s = {}", c.s)));
    }
    Ok(PhaseState {
        y: c.y,
        a: 1.0 / c.s,
        b: -c.r / (c.s * c.s),
    })
}

impl PhaseState {
    /// `L = b/a`.
    pub fn lagrangian(&self) -> f64 {
        self.b / self.a
    }
}

impl CotangentState {
    /// `H = r/s`.
    pub fn hamiltonian(&self) -> f64 {
        self.r / self.s
    }
}

/// Sampled integral curve in `(y¹, y², fibre¹, fibre²)` coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Flow {
    pub t: Vec<f64>,
    pub states: Vec<[f64; 4]>,
    pub halted: Option<Halt>,
}

/// Agreement of `∇`-geodesics with base projections of the frame flow.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Equivalence {
    pub max_deviation: f64,
    pub compared: usize,
    pub halted: Option<Halt>,
}

/// A frame `(v, w)` with dual coframe `(ζ, η)`, the flat connection `D`
/// making them parallel, its torsion form `τ`, and `P = τ(v)`, `Q = τ(w)`.
#[derive(Debug, Clone)]
pub struct FrameData {
    chart: Chart2,
    pub v: [ScalarField; 2],
    pub w: [ScalarField; 2],
    pub zeta: OneForm2,
    pub eta: OneForm2,
    pub d: Connection2,
    pub tau: OneForm2,
    pub p: ScalarField,
    pub q: ScalarField,
    /// `dκ` for `κ = rζ + sη`, in coordinates `(y¹, y², r, s)`.
    sigma: [[ScalarField; 4]; 4],
}

impl FrameData {
    pub fn new(v: [ScalarField; 2], w: [ScalarField; 2], chart: Chart2) -> Result<Self> {
        let det = (&v[0] * &w[1] - &v[1] * &w[0]).fold_constants();
        let zeta = OneForm2::new(&w[1] / &det, -(&w[0] / &det)).fold_constants();
        let eta = OneForm2::new(-(&v[1] / &det), &v[0] / &det).fold_constants();
        let (d, _) = connection_from_coframe(&zeta, &eta, chart.clone())?;

        let points = chart.points()?;
        let mut parallel: Vec<ScalarField> = Vec::new();
        for form in [&zeta, &eta] {
            parallel.extend(d.covariant_d(form).into_iter().flatten());
        }
        for field in [&v, &w] {
            for j in 0..2 {
                for l in 0..2 {
                    let terms: Vec<_> = (0..2).map(|k| d.gamma(l, j, k) * &field[k]).collect();
                    parallel.push(field[l].diff(j) + ScalarField::sum(&terms));
                }
            }
        }
        let residual = max_over(&points, |p| {
            let vals: Vec<f64> = parallel.iter().map(|f| eval_at(f, p)).collect::<Result<_>>()?;
            Ok(max_abs(&vals))
        })?;
        if residual > PARALLEL_TOL {
            return Err(Error::Hypothesis {
                check: "frame is parallel for D",
                residual,
            });
        }

        let tau = d.torsion_form();
        let pair = |f: &[ScalarField; 2]| {
            (tau.component(0) * &f[0] + tau.component(1) * &f[1]).fold_constants()
        };
        let (p, q) = (pair(&v), pair(&w));

        let (r, s) = (ScalarField::var(2), ScalarField::var(3));
        let kappa: [ScalarField; 4] = [
            &r * zeta.component(0) + &s * eta.component(0),
            &r * zeta.component(1) + &s * eta.component(1),
            ScalarField::zero(),
            ScalarField::zero(),
        ];
        let sigma = std::array::from_fn(|i| {
            std::array::from_fn(|j| (kappa[j].diff(i) - kappa[i].diff(j)).fold_constants())
        });

        Ok(FrameData {
            chart,
            v,
            w,
            zeta,
            eta,
            d,
            tau,
            p,
            q,
            sigma,
        })
    }

    /// Frame `(e^φ∂₁, ∂₂)`, dual to `(e^{−φ}dy¹, dy²)`.
    pub fn wong(phi: &ScalarField, chart: Chart2) -> Result<Self> {
        let (zero, one) = (ScalarField::zero(), ScalarField::one());
        Self::new([phi.exp(), zero.clone()], [zero, one], chart)
    }

    pub fn chart(&self) -> &Chart2 {
        &self.chart
    }

    /// Control: the same frame and `D`, with `P` and `Q` negated in the flows.
    pub fn with_negated_torsion(&self) -> Self {
        FrameData {
            p: (-&self.p).fold_constants(),
            q: (-&self.q).fold_constants(),
            ..self.clone()
        }
    }

    fn frame_at(&self, y: &[f64; 2]) -> Result<([f64; 2], [f64; 2], f64, f64)> {
        let v = [eval_at(&self.v[0], y)?, eval_at(&self.v[1], y)?];
        let w = [eval_at(&self.w[0], y)?, eval_at(&self.w[1], y)?];
        Ok((v, w, eval_at(&self.p, y)?, eval_at(&self.q, y)?))
    }

    /// Fibre coordinates `(a, b)` of a coordinate velocity.
    pub fn phase_state(&self, s: &GeodesicState) -> Result<PhaseState> {
        let z = self.zeta.eval(&s.y)?;
        let e = self.eta.eval(&s.y)?;
        Ok(PhaseState {
            y: s.y,
            a: z[0] * s.v[0] + z[1] * s.v[1],
            b: e[0] * s.v[0] + e[1] * s.v[1],
        })
    }

    /// `Z = av + bw + (aP + bQ)(a∂_a + b∂_b)`.
    pub fn frame_flow_field(&self, x: &[f64; 4]) -> Result<[f64; 4]> {
        let (v, w, p, q) = self.frame_at(&[x[0], x[1]])?;
        let (a, b) = (x[2], x[3]);
        let lam = a * p + b * q;
        Ok([a * v[0] + b * w[0], a * v[1] + b * w[1], lam * a, lam * b])
    }

    /// `X_H = s⁻²(φ(r∂_r + s∂_s) − sv + rw)` with `φ = sP − rQ`.
    pub fn hamilton_field(&self, x: &[f64; 4]) -> Result<[f64; 4]> {
        let (r, s) = (x[2], x[3]);
        if s == 0.0 {
            return Err(Error::Admissibility("Hamiltonian vector field needs s ≠ 0".into()));
        }
        let (v, w, p, q) = self.frame_at(&[x[0], x[1]])?;
        let phi = s * p - r * q;
        let s2 = s * s;
        Ok([
            (r * w[0] - s * v[0]) / s2,
            (r * w[1] - s * v[1]) / s2,
            phi * r / s2,
            phi * s / s2,
        ])
    }

    /// `max_B |σ(X_H, ∂_B) − ∂_B H|` with `σ = dκ` evaluated symbolically.
    pub fn symplectic_residual(&self, c: &CotangentState) -> Result<f64> {
        let x = [c.y[0], c.y[1], c.r, c.s];
        let xh = self.hamilton_field(&x)?;
        let h = ScalarField::var(2) / ScalarField::var(3);
        let mut worst: f64 = 0.0;
        for b in 0..4 {
            let mut lhs = 0.0;
            for (a, xa) in xh.iter().enumerate() {
                lhs += xa * eval_at(&self.sigma[a][b], &x)?;
            }
            worst = worst.max((lhs - eval_at(&h.diff(b), &x)?).abs());
        }
        Ok(worst)
    }

    /// `|d(legendre)(−Z) − X_H∘legendre|` at a phase state.
    pub fn legendre_pushforward_residual(&self, p: &PhaseState) -> Result<f64> {
        let z = self.frame_flow_field(&[p.y[0], p.y[1], p.a, p.b])?.map(|c| -c);
        let (a, b) = (p.a, p.b);
        let a2 = a * a;
        let pushed = [
            z[0],
            z[1],
            2.0 * b / (a2 * a) * z[2] - z[3] / a2,
            -z[2] / a2,
        ];
        let c = legendre(p)?;
        let xh = self.hamilton_field(&[c.y[0], c.y[1], c.r, c.s])?;
        Ok(pushed.iter().zip(&xh).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max))
    }

    /// On each fibre `L = η(ẏ)/ζ(ẏ)`; residual of numerator and denominator
    /// being linear in the velocity, over sample points times `[−1, 1]²`.
    pub fn fractional_linear_residual(&self) -> Result<f64> {
        let vel = [ScalarField::var(2), ScalarField::var(3)];
        let linear = |f: &OneForm2| f.component(0) * &vel[0] + f.component(1) * &vel[1];
        let mut checks = Vec::new();
        for g in [linear(&self.eta), linear(&self.zeta)] {
            for i in 2..4 {
                for j in 2..4 {
                    checks.push(g.diff(i).diff(j).fold_constants());
                }
            }
            checks.push((&g - (&vel[0] * &g.diff(2) + &vel[1] * &g.diff(3))).fold_constants());
        }
        let [[y1a, y1b], [y2a, y2b]] = *self.chart.bounds();
        let box4 = crate::chart::Chart4::new([[y1a, y1b], [y2a, y2b], [-1.0, 1.0], [-1.0, 1.0]])?
            .with_sampling(self.chart.sampling);
        max_over(&box4.points()?, |p| {
            let vals: Vec<f64> = checks.iter().map(|f| eval_at(f, p)).collect::<Result<_>>()?;
            Ok(max_abs(&vals))
        })
    }

    fn integrate(
        &self,
        field: impl Fn(&[f64; 4]) -> Result<[f64; 4]>,
        guard: usize,
        x0: [f64; 4],
        t_end: f64,
        dt: f64,
    ) -> Result<Flow> {
        let (n, h) = steps_for(t_end, dt)?;
        let mut out = Flow {
            t: vec![0.0],
            states: vec![x0],
            halted: None,
        };
        if x0[guard].abs() < ADMISSIBLE_MIN {
            return Err(Error::Admissibility(format!(
                "initial fibre coordinate {} is below {ADMISSIBLE_MIN}",
                x0[guard]
            )));
        }
        let mut x = x0;
        for i in 1..=n {
            x = rk4_step(&field, &x, h)?;
            if x[guard].abs() < ADMISSIBLE_MIN || !x[guard].is_finite() {
                out.halted = Some(Halt::Admissibility);
                break;
            }
            if !self.chart.contains(&[x[0], x[1]]) {
                out.halted = Some(Halt::ChartExit);
                break;
            }
            out.t.push(h * i as f64);
            out.states.push(x);
        }
        Ok(out)
    }

    /// RK4 integral curve of `Z` in `(y, a, b)`; halts once `|a| < ADMISSIBLE_MIN`.
    pub fn integrate_frame_flow(&self, p0: &PhaseState, t_end: f64, dt: f64) -> Result<Flow> {
        let x0 = [p0.y[0], p0.y[1], p0.a, p0.b];
        self.integrate(|x| self.frame_flow_field(x), 2, x0, t_end, dt)
    }

    /// RK4 integral curve of `X_H` in `(y, r, s)`; halts once `|s| < ADMISSIBLE_MIN`.
    pub fn integrate_hamilton(&self, c0: &CotangentState, t_end: f64, dt: f64) -> Result<Flow> {
        let x0 = [c0.y[0], c0.y[1], c0.r, c0.s];
        self.integrate(|x| self.hamilton_field(x), 3, x0, t_end, dt)
    }

    /// Max of `|D_ẏ ẏ − τ(ẏ)ẏ|` along the base projection of a sampled flow,
    /// with derivatives from five-point central differences.
    pub fn base_equation_residual(&self, flow: &Flow) -> Result<f64> {
        let n = flow.states.len();
        if n < 5 {
            return Err(Error::InvalidInput("need at least five samples".into()));
        }
        let h = flow.t[1] - flow.t[0];
        let mut worst: f64 = 0.0;
        for i in 2..n - 2 {
            let y = |k: usize, c: usize| flow.states[k][c];
            let mut vel = [0.0; 2];
            let mut acc = [0.0; 2];
            for c in 0..2 {
                vel[c] = (-y(i + 2, c) + 8.0 * y(i + 1, c) - 8.0 * y(i - 1, c) + y(i - 2, c)) / (12.0 * h);
                acc[c] = (-y(i + 2, c) + 16.0 * y(i + 1, c) - 30.0 * y(i, c) + 16.0 * y(i - 1, c)
                    - y(i - 2, c))
                    / (12.0 * h * h);
            }
            let p = [y(i, 0), y(i, 1)];
            let tau = self.tau.eval(&p)?;
            let tv = tau[0] * vel[0] + tau[1] * vel[1];
            for l in 0..2 {
                let mut r = acc[l] - tv * vel[l];
                for j in 0..2 {
                    for k in 0..2 {
                        r += eval_at(self.d.gamma(l, j, k), &p)? * vel[j] * vel[k];
                    }
                }
                worst = worst.max(r.abs());
            }
        }
        Ok(worst)
    }
}

/// Compares the `∇`-geodesic from `s0` with the base projection of the
/// frame flow from the matching phase state, over their common samples.
/// Requires `∇ = D − τ⊗Id`.
pub fn euler_lagrange_equivalence(
    nabla: &Connection2,
    fd: &FrameData,
    s0: GeodesicState,
    t_end: f64,
    dt: f64,
) -> Result<Equivalence> {
    let expected = fd.d.shift(&fd.tau, -1.0);
    let residual = nabla.max_difference(&expected, &fd.chart.points()?)?;
    if residual > PRECONDITION_TOL {
        return Err(Error::Hypothesis {
            check: "connection equals D minus its torsion form",
            residual,
        });
    }
    let geo = integrate_geodesic(nabla, s0, t_end, dt)?;
    let flow = fd.integrate_frame_flow(&fd.phase_state(&s0)?, t_end, dt)?;
    let compared = geo.states.len().min(flow.states.len());
    let max_deviation = geo.states[..compared]
        .iter()
        .zip(&flow.states)
        .map(|(g, f)| (g.y[0] - f[0]).hypot(g.y[1] - f[1]))
        .fold(0.0, f64::max);
    Ok(Equivalence {
        max_deviation,
        compared,
        halted: geo.halted.or(flow.halted),
    })
}
