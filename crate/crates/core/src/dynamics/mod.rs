//! Geodesics, the phase of the complex first integral, and the frame /
//! Legendre / Hamilton machinery for fractional-linear Lagrangians.

mod frame;

use std::f64::consts::PI;
use std::io::Write;

use serde::Serialize;

pub use frame::{
    euler_lagrange_equivalence, inverse_legendre, legendre, CotangentState, Equivalence, Flow,
    FrameData, PhaseState, ADMISSIBLE_MIN,
};

use crate::error::{eval_at, Error, Result};
use crate::surface::{Connection2, OneForm2};
use crate::symexpr::ScalarField;

/// Magnitudes of `ω(ẏ)` below this count as zero.
pub const OMEGA_COLLAPSE: f64 = 1e-12;

/// Base point and velocity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeodesicState {
    pub y: [f64; 2],
    pub v: [f64; 2],
}

impl GeodesicState {
    pub fn new(y: [f64; 2], v: [f64; 2]) -> Self {
        GeodesicState { y, v }
    }

    fn to_array(self) -> [f64; 4] {
        [self.y[0], self.y[1], self.v[0], self.v[1]]
    }

    fn from_array(x: [f64; 4]) -> Self {
        GeodesicState {
            y: [x[0], x[1]],
            v: [x[2], x[3]],
        }
    }
}

/// Why an integration stopped before `t_end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Halt {
    ChartExit,
    Admissibility,
}

/// Sampled curve `t ↦ (y, v)`; `halted` is set if integration stopped early.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub states: Vec<GeodesicState>,
    pub halted: Option<Halt>,
}

impl Trajectory {
    /// Samples an explicit curve `t ↦ (y(t), ẏ(t))` at `steps + 1` equally spaced times.
    pub fn from_curve(curve: impl Fn(f64) -> GeodesicState, t_end: f64, steps: usize) -> Self {
        let t: Vec<f64> = (0..=steps).map(|i| t_end * i as f64 / steps as f64).collect();
        let states = t.iter().map(|&s| curve(s)).collect();
        Trajectory {
            t,
            states,
            halted: None,
        }
    }

    pub fn last(&self) -> &GeodesicState {
        self.states.last().expect("trajectories hold the initial state")
    }

    /// Largest base-point distance between matching samples.
    pub fn max_base_deviation(&self, other: &Trajectory) -> f64 {
        self.states
            .iter()
            .zip(&other.states)
            .map(|(a, b)| (a.y[0] - b.y[0]).hypot(a.y[1] - b.y[1]))
            .fold(0.0, f64::max)
    }
}

/// One classical Runge–Kutta step.
pub(crate) fn rk4_step<const N: usize>(
    f: &impl Fn(&[f64; N]) -> Result<[f64; N]>,
    x: &[f64; N],
    h: f64,
) -> Result<[f64; N]> {
    let axpy = |a: &[f64; N], s: f64, b: &[f64; N]| std::array::from_fn(|i| a[i] + s * b[i]);
    let k1 = f(x)?;
    let k2 = f(&axpy(x, h / 2.0, &k1))?;
    let k3 = f(&axpy(x, h / 2.0, &k2))?;
    let k4 = f(&axpy(x, h, &k3))?;
    Ok(std::array::from_fn(|i| {
        x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
    }))
}

/// Step count and step size covering `[0, t_end]` with steps no longer than `dt`.
pub(crate) fn steps_for(t_end: f64, dt: f64) -> Result<(usize, f64)> {
    if !(dt > 0.0 && dt.is_finite()) || !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "need dt > 0 and t_end >= 0, got dt = {dt}, t_end = {t_end}"
        )));
    }
    let n = ((t_end / dt) - 1e-9).ceil().max(0.0) as usize;
    Ok(if n == 0 { (0, 0.0) } else { (n, t_end / n as f64) })
}

/// Right-hand side of the geodesic equation `v̇^l = −Γ^l_jk v^j v^k`.
pub fn geodesic_field(c: &Connection2, x: &[f64; 4]) -> Result<[f64; 4]> {
    let y = [x[0], x[1]];
    let v = [x[2], x[3]];
    let mut acc = [0.0; 2];
    for (l, a) in acc.iter_mut().enumerate() {
        for j in 0..2 {
            for k in 0..2 {
                *a -= eval_at(c.gamma(l, j, k), &y)? * v[j] * v[k];
            }
        }
    }
    Ok([v[0], v[1], acc[0], acc[1]])
}

/// RK4 integration of `∇_ẏ ẏ = 0`; stops (flagged) when leaving the chart box.
pub fn integrate_geodesic(c: &Connection2, s0: GeodesicState, t_end: f64, dt: f64) -> Result<Trajectory> {
    let (n, h) = steps_for(t_end, dt)?;
    let f = |x: &[f64; 4]| geodesic_field(c, x);
    let mut out = Trajectory {
        t: vec![0.0],
        states: vec![s0],
        halted: None,
    };
    let mut x = s0.to_array();
    for i in 1..=n {
        x = rk4_step(&f, &x, h)?;
        if !c.chart().contains(&[x[0], x[1]]) {
            out.halted = Some(Halt::ChartExit);
            break;
        }
        out.t.push(h * i as f64);
        out.states.push(GeodesicState::from_array(x));
    }
    Ok(out)
}

/// Distance from `s0` after integrating for `t_end`, reversing the velocity
/// and integrating back.
pub fn time_reversal_residual(c: &Connection2, s0: GeodesicState, t_end: f64, dt: f64) -> Result<f64> {
    let fwd = integrate_geodesic(c, s0, t_end, dt)?;
    if fwd.halted.is_some() {
        return Err(Error::InvalidInput("forward geodesic left the chart".into()));
    }
    let end = fwd.last();
    let back = integrate_geodesic(c, GeodesicState::new(end.y, [-end.v[0], -end.v[1]]), t_end, dt)?;
    if back.halted.is_some() {
        return Err(Error::InvalidInput("reversed geodesic left the chart".into()));
    }
    let b = back.last();
    Ok([b.y[0] - s0.y[0], b.y[1] - s0.y[1], b.v[0] + s0.v[0], b.v[1] + s0.v[1]]
        .iter()
        .fold(0.0, |m: f64, x| m.max(x.abs())))
}

/// A complex-valued 1-form `ω = re + i·im`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexOneForm {
    pub re: OneForm2,
    pub im: OneForm2,
}

impl ComplexOneForm {
    /// `(Re ω(v), Im ω(v))` at base point `y`.
    pub fn apply(&self, y: &[f64; 2], v: &[f64; 2]) -> Result<(f64, f64)> {
        let re = self.re.eval(y)?;
        let im = self.im.eval(y)?;
        Ok((re[0] * v[0] + re[1] * v[1], im[0] * v[0] + im[1] * v[1]))
    }

    /// Max over `points` of the `D`-covariant derivatives of both parts.
    pub fn parallel_residual(&self, d: &Connection2, points: &[[f64; 2]]) -> Result<f64> {
        let fields: Vec<ScalarField> = [d.covariant_d(&self.re), d.covariant_d(&self.im)]
            .into_iter()
            .flatten()
            .flatten()
            .collect();
        crate::check::max_over(points, |p| {
            let vals: Vec<f64> = fields.iter().map(|f| eval_at(f, p)).collect::<Result<_>>()?;
            Ok(crate::check::max_abs(&vals))
        })
    }
}

/// `ω = e^{−φ}dy¹ + i·dy²`, parallel for the flat connection of the Wong gauge.
pub fn wong_first_integral(phi: &ScalarField) -> ComplexOneForm {
    ComplexOneForm {
        re: OneForm2::new((-phi).exp(), ScalarField::zero()),
        im: OneForm2::new(ScalarField::zero(), ScalarField::one()),
    }
}

/// Wraps an angle difference into `(−π, π]`.
fn wrap(a: f64) -> f64 {
    let r = (a + PI).rem_euclid(2.0 * PI) - PI;
    if r == -PI {
        PI
    } else {
        r
    }
}

/// Phase record of `ω(ẏ)` along a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Drift {
    /// `ω(ẏ) = 0` at every sample.
    pub zero_branch: bool,
    pub max_drift: f64,
    /// Per-sample `(Re ω(ẏ), Im ω(ẏ), phase deviation)`.
    pub samples: Vec<(f64, f64, f64)>,
}

/// Max deviation of `arg ω(ẏ)` from its initial value.
pub fn first_integral_drift(omega: &ComplexOneForm, traj: &Trajectory) -> Result<Drift> {
    let values: Vec<(f64, f64)> = traj
        .states
        .iter()
        .map(|s| omega.apply(&s.y, &s.v))
        .collect::<Result<_>>()?;
    let small: Vec<bool> = values
        .iter()
        .map(|(re, im)| re.hypot(*im) < OMEGA_COLLAPSE)
        .collect();
    if small.iter().all(|s| *s) {
        return Ok(Drift {
            zero_branch: true,
            max_drift: 0.0,
            samples: values.iter().map(|(re, im)| (*re, *im, 0.0)).collect(),
        });
    }
    if let Some(i) = small.iter().position(|s| *s) {
        return Err(Error::Degenerate(format!(
            "|ω(ẏ)| collapsed below {OMEGA_COLLAPSE:e} at t = {}",
            traj.t[i]
        )));
    }
    let arg0 = values[0].1.atan2(values[0].0);
    let samples: Vec<(f64, f64, f64)> = values
        .iter()
        .map(|(re, im)| (*re, *im, wrap(im.atan2(*re) - arg0)))
        .collect();
    let max_drift = samples.iter().map(|s| s.2.abs()).fold(0.0, f64::max);
    Ok(Drift {
        zero_branch: false,
        max_drift,
        samples,
    })
}

/// CSV with columns `t, y1, y2, v1, v2, re_omega, im_omega, arg_drift`,
/// 17 significant digits.
pub fn write_trajectory_csv<W: Write>(out: W, traj: &Trajectory, drift: &Drift) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::InvalidInput(format!("csv output: {e}"));
    w.write_record(["t", "y1", "y2", "v1", "v2", "re_omega", "im_omega", "arg_drift"])
        .map_err(io)?;
    for ((t, s), (re, im, d)) in traj.t.iter().zip(&traj.states).zip(&drift.samples) {
        let row = [*t, s.y[0], s.y[1], s.v[0], s.v[1], *re, *im, *d].map(|x| format!("{x:.16e}"));
        w.write_record(&row).map_err(io)?;
    }
    w.flush()
        .map_err(|e| Error::InvalidInput(format!("csv output: {e}")))?;
    Ok(())
}
