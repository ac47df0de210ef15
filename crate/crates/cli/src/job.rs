//! Job files read through `--spec`.

use std::path::PathBuf;

use serde::Deserialize;
use skewric::chart::{ChartSpec, DEFAULT_SAMPLES, DEFAULT_SEED};
use skewric::dynamics::{wong_first_integral, ComplexOneForm, GeodesicState};
use skewric::lie2::{cnc_example_connection, halfplane_connection, halfplane_potential, LeftInvSpec};
use skewric::surface::{wong_connection, wong_gauge, ConnectionSpec};
use skewric::{Chart2, Connection2, Error, OneForm2, Result, Sampling, ScalarField};

/// A connection given by builtin name (`halfplane`, `cnc`, `wong:<expr>`) or by coefficients.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ConnectionInput {
    Builtin(String),
    Explicit(ConnectionSpec),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameInput {
    pub v: [String; 2],
    pub w: [String; 2],
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexFormInput {
    pub re: [String; 2],
    pub im: [String; 2],
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubalgebraInput {
    pub a0: [f64; 4],
    pub b0: [f64; 4],
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateInput {
    pub y: [f64; 2],
    pub v: [f64; 2],
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobSpec {
    /// Optional; must agree with the subcommand when present.
    pub command: Option<String>,
    pub connection: Option<ConnectionInput>,
    /// Overrides the chart of the connection.
    pub chart: Option<ChartSpec>,
    /// Four-dimensional certification box.
    pub chart4: Option<ChartSpec>,
    /// Gauge `ξ` for the flat decomposition `D = ∇ + ξ⊗Id`.
    pub gauge: Option<[String; 2]>,
    /// Symmetric `λ` added to the Riemann extension.
    pub lambda: Option<[[String; 2]; 2]>,
    pub frame: Option<FrameInput>,
    pub omega: Option<ComplexFormInput>,
    pub subalgebra: Option<SubalgebraInput>,
    pub line: Option<[f64; 2]>,
    pub leftinv: Option<LeftInvSpec>,
    pub initial: Option<Vec<StateInput>>,
    pub states: Option<usize>,
    pub trajectories: Option<usize>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub mask: Option<f64>,
    pub t_end: Option<f64>,
    pub dt: Option<f64>,
    pub out: Option<PathBuf>,
}

/// A resolved connection together with the data its builtin carries.
pub struct Resolved {
    pub label: String,
    pub connection: Connection2,
    pub phi: Option<ScalarField>,
    pub gauge: Option<OneForm2>,
}

fn parse2(text: &str) -> Result<ScalarField> {
    Ok(ScalarField::parse(text, 2)?)
}

fn positive(name: &str, x: Option<f64>) -> Result<()> {
    match x {
        Some(v) if !(v.is_finite() && v > 0.0) => {
            Err(Error::InvalidInput(format!("{name} must be positive and finite, got {v}")))
        }
        _ => Ok(()),
    }
}

impl JobSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: JobSpec = serde_json::from_str(text)?;
        positive("tol", spec.tol)?;
        positive("mask", spec.mask)?;
        positive("t_end", spec.t_end)?;
        positive("dt", spec.dt)?;
        Ok(spec)
    }

    pub fn sampling(&self) -> Sampling {
        Sampling {
            count: self.samples.unwrap_or(DEFAULT_SAMPLES),
            seed: self.seed.unwrap_or(DEFAULT_SEED),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    fn base_chart(&self) -> Result<Option<Chart2>> {
        self.chart
            .as_ref()
            .map(|c| Ok(Chart2::from_spec(c)?.with_sampling(self.sampling())))
            .transpose()
    }

    pub fn resolve(&self) -> Result<Resolved> {
        let input = self
            .connection
            .as_ref()
            .ok_or_else(|| Error::InvalidInput("spec has no `connection`".into()))?;
        let default_chart = || Chart2::new([[-1.0, 1.0], [-1.0, 1.0]]).map(|c| c.with_sampling(self.sampling()));
        let chart = match self.base_chart()? {
            Some(c) => c,
            None => default_chart()?,
        };
        let mut resolved = match input {
            ConnectionInput::Builtin(name) if name == "halfplane" => Resolved {
                label: name.clone(),
                connection: halfplane_connection(chart),
                phi: None,
                gauge: Some(halfplane_potential()),
            },
            ConnectionInput::Builtin(name) if name == "cnc" => {
                let ex = cnc_example_connection(chart);
                Resolved {
                    label: name.clone(),
                    connection: ex.connection,
                    phi: None,
                    gauge: Some(ex.xi),
                }
            }
            ConnectionInput::Builtin(name) => {
                let expr = name.strip_prefix("wong:").ok_or_else(|| {
                    Error::InvalidInput(format!("unknown builtin `{name}` (halfplane, cnc, wong:<expr>)"))
                })?;
                let phi = parse2(expr)?;
                Resolved {
                    label: format!("wong:{phi}"),
                    connection: wong_connection(&phi, chart),
                    gauge: Some(wong_gauge(&phi)),
                    phi: Some(phi),
                }
            }
            ConnectionInput::Explicit(spec) => {
                let c = Connection2::from_spec(spec)?;
                let chart = match self.base_chart()? {
                    Some(ch) => ch,
                    None => c.chart().clone().with_sampling(self.sampling()),
                };
                Resolved {
                    label: "explicit".into(),
                    connection: c.with_chart(chart),
                    phi: None,
                    gauge: None,
                }
            }
        };
        if let Some([a, b]) = &self.gauge {
            resolved.gauge = Some(OneForm2::new(parse2(a)?, parse2(b)?));
        }
        Ok(resolved)
    }

    pub fn lambda(&self) -> Result<Option<[[ScalarField; 2]; 2]>> {
        let Some(l) = &self.lambda else { return Ok(None) };
        Ok(Some([
            [parse2(&l[0][0])?, parse2(&l[0][1])?],
            [parse2(&l[1][0])?, parse2(&l[1][1])?],
        ]))
    }

    pub fn frame(&self) -> Result<Option<([ScalarField; 2], [ScalarField; 2])>> {
        let Some(f) = &self.frame else { return Ok(None) };
        Ok(Some((
            [parse2(&f.v[0])?, parse2(&f.v[1])?],
            [parse2(&f.w[0])?, parse2(&f.w[1])?],
        )))
    }

    /// The explicit `omega`, else the Wong first integral of a Wong builtin.
    pub fn omega(&self, resolved: &Resolved) -> Result<Option<ComplexOneForm>> {
        if let Some(o) = &self.omega {
            return Ok(Some(ComplexOneForm {
                re: OneForm2::new(parse2(&o.re[0])?, parse2(&o.re[1])?),
                im: OneForm2::new(parse2(&o.im[0])?, parse2(&o.im[1])?),
            }));
        }
        Ok(resolved.phi.as_ref().map(wong_first_integral))
    }

    pub fn initial_states(&self) -> Option<Vec<GeodesicState>> {
        self.initial
            .as_ref()
            .map(|v| v.iter().map(|s| GeodesicState::new(s.y, s.v)).collect())
    }
}
