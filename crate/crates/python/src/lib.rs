//! Python bindings: expressions, nested level families, certification and
//! trajectory integration.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use ::lyapcert::certify::{build_nested_family, check_quasi_isolated, FamilyParams, QuasiParams, StabilityCertificate};
use ::lyapcert::config::SystemConfig;
use ::lyapcert::dynamics::{integrate as integrate_rs, IntegratorConfig};
use ::lyapcert::expr::{gradient, parse_expression, ScalarExpr, Variables, VectorFieldDef};
use ::lyapcert::geometry::{bounds_point, build_grid, write_mesh, GridSpec, Hypersurface};
use ::lyapcert::pipeline::{run_certify, RunOptions};

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn variables(dim: usize, canonical: bool) -> Variables {
    if canonical {
        Variables::canonical(dim / 2)
    } else {
        Variables::cartesian(dim)
    }
}

/// A parsed scalar expression in `dim` variables.
#[pyclass(name = "Expression", module = "lyapcert", frozen)]
struct PyExpression {
    inner: ScalarExpr,
}

#[pymethods]
impl PyExpression {
    #[new]
    #[pyo3(signature = (source, dim, canonical = false))]
    fn new(source: &str, dim: usize, canonical: bool) -> PyResult<Self> {
        let inner = parse_expression(source, variables(dim, canonical)).map_err(err)?;
        Ok(PyExpression { inner })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn evaluate(&self, point: Vec<f64>) -> PyResult<f64> {
        self.inner.evaluate(&point).map_err(err)
    }

    /// Symbolic gradient components as source strings.
    fn gradient(&self) -> PyResult<Vec<String>> {
        Ok(gradient(&self.inner).map_err(err)?.sources())
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Expression({:?})", self.inner.to_string())
    }
}

#[pyclass(name = "VectorField", module = "lyapcert", frozen)]
struct PyVectorField {
    inner: VectorFieldDef,
}

#[pymethods]
impl PyVectorField {
    #[new]
    #[pyo3(signature = (components, canonical = false))]
    fn new(components: Vec<String>, canonical: bool) -> PyResult<Self> {
        let inner = VectorFieldDef::parse(&components, variables(components.len(), canonical)).map_err(err)?;
        Ok(PyVectorField { inner })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn evaluate(&self, point: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.evaluate(&point).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("VectorField({:?})", self.inner.sources())
    }
}

/// A closed level curve or surface with inward unit normals.
#[pyclass(name = "Surface", module = "lyapcert", frozen)]
struct PySurface {
    inner: Hypersurface,
    #[pyo3(get)]
    offset: f64,
    #[pyo3(get)]
    d_to_x0: f64,
}

#[pymethods]
impl PySurface {
    #[getter]
    fn level(&self) -> f64 {
        self.inner.level
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim
    }

    #[getter]
    fn diameter(&self) -> f64 {
        self.inner.diameter
    }

    #[getter]
    fn vertices(&self) -> Vec<Vec<f64>> {
        let n = self.inner.dim;
        self.inner.vertices.iter().map(|v| v[..n].to_vec()).collect()
    }

    #[getter]
    fn normals(&self) -> Vec<Vec<f64>> {
        let n = self.inner.dim;
        self.inner.normals.iter().map(|v| v[..n].to_vec()).collect()
    }

    /// Whether the surface bounds `point`; raises if `point` is within half a
    /// cell of the surface.
    fn bounds(&self, point: Vec<f64>) -> PyResult<bool> {
        bounds_point(&self.inner, &point).map_err(err)
    }

    /// The surface in the plain-text mesh format.
    fn to_mesh(&self) -> String {
        write_mesh(&self.inner)
    }

    fn __len__(&self) -> usize {
        self.inner.vertex_count()
    }
}

fn grid_spec(lo: Vec<f64>, hi: Vec<f64>, resolution: usize) -> GridSpec {
    let n = lo.len();
    GridSpec {
        lo,
        hi,
        resolution: vec![resolution; n],
    }
}

/// Nested closed level sets of `function` around `x0`, outermost first.
#[pyfunction]
#[pyo3(signature = (function, x0, lo, hi, resolution, count = 6, a0 = None, eta = 1e-5))]
#[allow(clippy::too_many_arguments)]
fn nested_family(
    py: Python<'_>,
    function: &str,
    x0: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    resolution: usize,
    count: usize,
    a0: Option<f64>,
    eta: f64,
) -> PyResult<Vec<PySurface>> {
    let f = parse_expression(function, Variables::cartesian(x0.len())).map_err(err)?;
    let spec = grid_spec(lo, hi, resolution);
    let params = FamilyParams {
        count,
        eta,
        a0,
        ..FamilyParams::default()
    };
    let family = py
        .detach(|| {
            let grid = build_grid(&f, &spec).map_err(|e| e.to_string())?;
            build_nested_family(&f, &x0, &grid, &params).map_err(|e| e.to_string())
        })
        .map_err(PyValueError::new_err)?;
    Ok(family
        .surfaces
        .into_iter()
        .map(|s| PySurface {
            inner: s.surface,
            offset: s.offset,
            d_to_x0: s.d_to_x0,
        })
        .collect())
}

/// Quasi-isolation verdict of `x0` for `function`:
/// `"quasi-isolated"`, `"not-quasi-isolated"` or `"inconclusive"`.
#[pyfunction]
fn quasi_isolation(function: &str, x0: Vec<f64>, lo: Vec<f64>, hi: Vec<f64>, resolution: usize) -> PyResult<String> {
    let f = parse_expression(function, Variables::cartesian(x0.len())).map_err(err)?;
    let grid = build_grid(&f, &grid_spec(lo, hi, resolution)).map_err(err)?;
    let report = check_quasi_isolated(&f, &x0, &grid, &QuasiParams::default()).map_err(err)?;
    Ok(report.verdict.to_string())
}

#[pyclass(name = "Certificate", module = "lyapcert", frozen)]
struct PyCertificate {
    inner: StabilityCertificate,
}

#[pymethods]
impl PyCertificate {
    #[getter]
    fn verdict(&self) -> String {
        self.inner.verdict.to_string()
    }

    #[getter]
    fn exit_code(&self) -> i32 {
        self.inner.verdict.exit_code()
    }

    #[getter]
    fn reasons(&self) -> Vec<String> {
        self.inner.reasons.clone()
    }

    /// Per-surface `(min S, max S)`, outermost first.
    #[getter]
    fn sign_ranges(&self) -> Vec<(f64, f64)> {
        self.inner.surfaces.iter().map(|s| (s.min_s, s.max_s)).collect()
    }

    /// `(point, S)` of the worst violating vertex, if any.
    #[getter]
    fn witness(&self) -> Option<(Vec<f64>, f64)> {
        self.inner.witness.as_ref().map(|w| (w.point.clone(), w.s))
    }

    /// `(escapes, trials)` when the falsifier ran.
    #[getter]
    fn escapes(&self) -> Option<(usize, usize)> {
        self.inner.empirical.as_ref().map(|e| (e.escapes, e.trials))
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    fn __repr__(&self) -> String {
        format!("Certificate(verdict={:?}, surfaces={})", self.verdict(), self.inner.surfaces.len())
    }
}

/// Runs the full pipeline on a TOML configuration given as text.
#[pyfunction]
#[pyo3(signature = (config, falsify = false))]
fn certify(py: Python<'_>, config: &str, falsify: bool) -> PyResult<PyCertificate> {
    let sys = SystemConfig::from_toml(config).and_then(|c| c.validate()).map_err(err)?;
    let opts = RunOptions {
        falsify,
        keep_trajectories: false,
    };
    let out = py.detach(|| run_certify(&sys, &opts)).map_err(err)?;
    Ok(PyCertificate {
        inner: out.certificate,
    })
}

/// Integrates `field` from `start` over `[0, horizon]`; returns sample times
/// and states.
#[pyfunction]
#[pyo3(signature = (field, start, horizon, rel_tol = 1e-8, abs_tol = 1e-10))]
fn integrate(
    field: &PyVectorField,
    start: Vec<f64>,
    horizon: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> PyResult<(Vec<f64>, Vec<Vec<f64>>)> {
    let cfg = IntegratorConfig {
        rel_tol,
        abs_tol,
        ..IntegratorConfig::default()
    };
    let tr = integrate_rs(&field.inner, &start, horizon, &cfg).map_err(err)?;
    Ok((tr.times, tr.states))
}

#[pymodule]
#[pyo3(name = "lyapcert")]
fn lyapcert_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyExpression>()?;
    m.add_class::<PyVectorField>()?;
    m.add_class::<PySurface>()?;
    m.add_class::<PyCertificate>()?;
    m.add_function(wrap_pyfunction!(nested_family, m)?)?;
    m.add_function(wrap_pyfunction!(quasi_isolation, m)?)?;
    m.add_function(wrap_pyfunction!(certify, m)?)?;
    m.add_function(wrap_pyfunction!(integrate, m)?)?;
    Ok(())
}
