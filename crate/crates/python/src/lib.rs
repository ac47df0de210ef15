//! Python bindings: expressions, surface connections, the sl(2,R) tools,
//! geodesics and the Riemann-extension certificate.

use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use skewric::dynamics::{
    first_integral_drift, integrate_geodesic, legendre as legendre_map, wong_first_integral, GeodesicState,
    PhaseState,
};
use skewric::lie2::{self, cnc_example_connection, halfplane_connection, LeftInvConn, LeftInvSpec, Matrix2};
use skewric::surface::wong_connection;
use skewric::walker4::{certify as certify_extension, extension_chart, zero_sym2};
use skewric::{Chart2, Connection2, Error, OneForm2, Sampling, ScalarField};

create_exception!(pyskewric, HypothesisError, PyRuntimeError);

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Parse(_) | Error::Json(_) | Error::InvalidInput(_) | Error::Sampling(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => HypothesisError::new_err(e.to_string()),
    }
}

fn chart(bounds: Option<[[f64; 2]; 2]>) -> PyResult<Chart2> {
    Chart2::new(bounds.unwrap_or([[-1.0, 1.0], [-1.0, 1.0]])).map_err(py_err)
}

fn parse2(text: &str) -> PyResult<ScalarField> {
    ScalarField::parse(text, 2).map_err(|e| py_err(e.into()))
}

fn matrix(m: [f64; 4]) -> Matrix2 {
    Matrix2::new(m[0], m[1], m[2], m[3])
}

fn rows(m: &Matrix2) -> [f64; 4] {
    [m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]]
}

/// A symbolic scalar field in `nvars` variables `y1, y2, ...`.
#[pyclass(name = "Expr", frozen)]
#[derive(Clone)]
struct PyExpr {
    inner: ScalarField,
}

#[pymethods]
impl PyExpr {
    #[new]
    #[pyo3(signature = (text, nvars = 2))]
    fn new(text: &str, nvars: usize) -> PyResult<Self> {
        Ok(PyExpr {
            inner: ScalarField::parse(text, nvars).map_err(|e| py_err(e.into()))?,
        })
    }

    fn diff(&self, var: usize) -> Self {
        PyExpr { inner: self.inner.diff(var) }
    }

    fn fold(&self) -> Self {
        PyExpr { inner: self.inner.fold_constants() }
    }

    fn eval(&self, point: Vec<f64>) -> PyResult<f64> {
        self.inner
            .eval(&point)
            .map_err(|source| py_err(Error::Eval { point, source }))
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Expr('{}')", self.inner)
    }
}

/// An affine connection on a chart of the plane.
#[pyclass(name = "Connection", frozen)]
#[derive(Clone)]
struct PyConnection {
    inner: Connection2,
}

#[pymethods]
impl PyConnection {
    #[staticmethod]
    #[pyo3(signature = (bounds = None))]
    fn flat(bounds: Option<[[f64; 2]; 2]>) -> PyResult<Self> {
        Ok(PyConnection { inner: Connection2::flat(chart(bounds)?) })
    }

    #[staticmethod]
    #[pyo3(signature = (bounds = None))]
    fn halfplane(bounds: Option<[[f64; 2]; 2]>) -> PyResult<Self> {
        Ok(PyConnection { inner: halfplane_connection(chart(bounds)?) })
    }

    #[staticmethod]
    #[pyo3(signature = (bounds = None))]
    fn cnc(bounds: Option<[[f64; 2]; 2]>) -> PyResult<Self> {
        Ok(PyConnection { inner: cnc_example_connection(chart(bounds)?).connection })
    }

    /// Wong normal form for the potential `phi`.
    #[staticmethod]
    #[pyo3(signature = (phi, bounds = None))]
    fn wong(phi: &str, bounds: Option<[[f64; 2]; 2]>) -> PyResult<Self> {
        Ok(PyConnection { inner: wong_connection(&parse2(phi)?, chart(bounds)?) })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyConnection { inner: Connection2::from_json(text).map_err(py_err)? })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    fn with_sampling(&self, count: usize, seed: u64) -> Self {
        let chart = self.inner.chart().clone().with_sampling(Sampling { count, seed });
        PyConnection { inner: self.inner.clone().with_chart(chart) }
    }

    /// `Γ^l_jk` with 0-based indices.
    fn gamma(&self, l: usize, j: usize, k: usize) -> PyResult<String> {
        if l > 1 || j > 1 || k > 1 {
            return Err(PyValueError::new_err("indices are 0 or 1"));
        }
        Ok(self.inner.gamma(l, j, k).to_string())
    }

    fn rho12(&self) -> String {
        self.inner.ricci_two_form().0.fold_constants().to_string()
    }

    fn torsion_form(&self) -> (String, String) {
        let t = self.inner.torsion_form().fold_constants();
        (t.component(0).to_string(), t.component(1).to_string())
    }

    /// `(holds, max_residual)`.
    #[pyo3(signature = (tol = 1e-9))]
    fn is_ricci_skew(&self, tol: f64) -> PyResult<(bool, f64)> {
        let v = self.inner.is_ricci_skew(tol).map_err(py_err)?;
        Ok((v.holds, v.max_residual))
    }

    #[pyo3(signature = (tol = 1e-9))]
    fn is_projectively_flat(&self, tol: f64) -> PyResult<(bool, f64)> {
        let v = self.inner.is_projectively_flat(tol).map_err(py_err)?;
        Ok((v.holds, v.max_residual))
    }

    fn curvature_max(&self) -> PyResult<f64> {
        let curv = self.inner.curvature();
        let mut m: f64 = 0.0;
        for p in self.inner.chart().points().map_err(py_err)? {
            m = m.max(curv.max_abs_at(&p).map_err(py_err)?);
        }
        Ok(m)
    }

    /// `∇ + sign·ξ⊗Id`.
    #[pyo3(signature = (xi, sign = 1.0))]
    fn shift(&self, xi: (String, String), sign: f64) -> PyResult<Self> {
        let xi = OneForm2::new(parse2(&xi.0)?, parse2(&xi.1)?);
        Ok(PyConnection { inner: self.inner.shift(&xi, sign) })
    }

    /// Flat `D = ∇ + ξ⊗Id`; returns `(D, hypothesis_residual, flatness_residual)`.
    #[pyo3(signature = (xi, tol = 1e-9))]
    fn decompose(&self, xi: (String, String), tol: f64) -> PyResult<(Self, f64, f64)> {
        let xi = OneForm2::new(parse2(&xi.0)?, parse2(&xi.1)?);
        let (d, rep) = self.inner.decompose_with(&xi, tol).map_err(py_err)?;
        Ok((PyConnection { inner: d }, rep.hypothesis_residual, rep.flatness_residual))
    }

    /// `(phi, max |dφ − 2ρ|, evaluated points)`.
    #[pyo3(signature = (tol = 1e-8, mask = 0.1))]
    fn recurrence(&self, tol: f64, mask: f64) -> PyResult<((String, String), f64, usize)> {
        let rec = self.inner.recurrence_form_masked(tol, mask).map_err(py_err)?;
        let phi = rec.phi.fold_constants();
        Ok((
            (phi.component(0).to_string(), phi.component(1).to_string()),
            rec.verdict.max_residual,
            rec.evaluated,
        ))
    }

    /// Geodesic samples `[t, y1, y2, v1, v2]` and whether the chart was left.
    #[pyo3(signature = (y, v, t_end = 1.0, dt = 1e-3))]
    fn geodesic(&self, y: [f64; 2], v: [f64; 2], t_end: f64, dt: f64) -> PyResult<(Vec<[f64; 5]>, bool)> {
        let tr = integrate_geodesic(&self.inner, GeodesicState::new(y, v), t_end, dt).map_err(py_err)?;
        let rows = tr
            .t
            .iter()
            .zip(&tr.states)
            .map(|(t, s)| [*t, s.y[0], s.y[1], s.v[0], s.v[1]])
            .collect();
        Ok((rows, tr.halted.is_some()))
    }

    /// Certificate for the Riemann extension as a JSON string.
    #[pyo3(signature = (lam = None, samples = 50, seed = 24389))]
    fn certify(&self, lam: Option<[[String; 2]; 2]>, samples: usize, seed: u64) -> PyResult<String> {
        let lambda = match lam {
            None => zero_sym2(),
            Some(l) => [
                [parse2(&l[0][0])?, parse2(&l[0][1])?],
                [parse2(&l[1][0])?, parse2(&l[1][1])?],
            ],
        };
        let chart4 = extension_chart(self.inner.chart())
            .map_err(py_err)?
            .with_sampling(Sampling { count: samples, seed });
        let report = certify_extension(&self.inner, &lambda, chart4).map_err(py_err)?;
        serde_json::to_string(&report).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }
}

/// Maximum phase drift of the Wong first integral along a geodesic of the Wong connection.
#[pyfunction]
#[pyo3(signature = (phi, y, v, t_end = 1.0, dt = 1e-3, bounds = None))]
fn wong_drift(phi: &str, y: [f64; 2], v: [f64; 2], t_end: f64, dt: f64, bounds: Option<[[f64; 2]; 2]>) -> PyResult<f64> {
    let phi = parse2(phi)?;
    let c = wong_connection(&phi, chart(bounds.or(Some([[-3.0, 3.0], [-3.0, 3.0]])))?);
    let tr = integrate_geodesic(&c, GeodesicState::new(y, v), t_end, dt).map_err(py_err)?;
    let drift = first_integral_drift(&wong_first_integral(&phi), &tr).map_err(py_err)?;
    Ok(drift.max_drift)
}

/// `(r, s) = (−b/a², 1/a)`.
#[pyfunction]
fn legendre(a: f64, b: f64) -> PyResult<(f64, f64)> {
    let c = legendre_map(&PhaseState { y: [0.0, 0.0], a, b }).map_err(py_err)?;
    Ok((c.r, c.s))
}

/// `tr(AB)/2` for row-major 2×2 matrices.
#[pyfunction]
fn killing(a: [f64; 4], b: [f64; 4]) -> f64 {
    lie2::killing(&matrix(a), &matrix(b))
}

#[pyfunction]
fn mu(a: [f64; 4], b: [f64; 4], c: [f64; 4]) -> f64 {
    lie2::mu(&matrix(a), &matrix(b), &matrix(c))
}

#[pyfunction]
fn commutator(a: [f64; 4], b: [f64; 4]) -> [f64; 4] {
    rows(&lie2::commutator(&matrix(a), &matrix(b)))
}

/// Normal basis `A, B` with `[A,B] = A` and the plane basis `w, w′`.
#[pyfunction]
#[pyo3(signature = (a0, b0, tol = 1e-9))]
fn classify_subalgebra<'py>(py: Python<'py>, a0: [f64; 4], b0: [f64; 4], tol: f64) -> PyResult<Bound<'py, PyDict>> {
    let nf = lie2::classify_subalgebra(&matrix(a0), &matrix(b0), tol).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("a", rows(&nf.a))?;
    d.set_item("b", rows(&nf.b))?;
    d.set_item("w", [nf.w.x, nf.w.y])?;
    d.set_item("w_prime", [nf.w_prime.x, nf.w_prime.y])?;
    Ok(d)
}

/// Homomorphism test, rank class and `ρ(e₁,e₂)` of a left-invariant connection.
#[pyfunction]
#[pyo3(signature = (algebra, psi, f, tol = 1e-9))]
fn left_invariant<'py>(
    py: Python<'py>,
    algebra: [f64; 2],
    psi: [[f64; 4]; 2],
    f: [f64; 2],
    tol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let conn = LeftInvConn::from_spec(&LeftInvSpec { algebra, psi, f }).map_err(py_err)?;
    let d = PyDict::new(py);
    let hom = conn.is_homomorphism(tol);
    d.set_item("homomorphism", hom)?;
    d.set_item("defect", conn.homomorphism_defect())?;
    if hom {
        d.set_item("rank", conn.rank_class().map_err(py_err)?)?;
        d.set_item("ricci", conn.ricci().map_err(py_err)?)?;
    }
    Ok(d)
}

#[pymodule]
fn pyskewric(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyExpr>()?;
    m.add_class::<PyConnection>()?;
    m.add("HypothesisError", m.py().get_type::<HypothesisError>())?;
    m.add_function(wrap_pyfunction!(wong_drift, m)?)?;
    m.add_function(wrap_pyfunction!(legendre, m)?)?;
    m.add_function(wrap_pyfunction!(killing, m)?)?;
    m.add_function(wrap_pyfunction!(mu, m)?)?;
    m.add_function(wrap_pyfunction!(commutator, m)?)?;
    m.add_function(wrap_pyfunction!(classify_subalgebra, m)?)?;
    m.add_function(wrap_pyfunction!(left_invariant, m)?)?;
    Ok(())
}
