//! Python bindings for `grushin-core`.
//!
//! Structured results (configs, summaries, fits) cross the boundary as JSON
//! and are decoded with the standard `json` module.

use std::sync::Arc;

use grushin_core::closed_form::{self, BarrierSpec, DEFAULT_FD_STEP};
use grushin_core::diagnostics::{self, ReflectionSpec};
use grushin_core::discrete::solve_linear as core_solve_linear;
use grushin_core::experiment;
use grushin_core::semilinear::{self, default_initial_guess, nehari_initial_guess, solve_with_operator};
use grushin_core::{DiscreteOperator, Error};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyModule;

fn to_py(e: Error) -> PyErr {
    if e.is_config_error() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn json<'py>(py: Python<'py>, v: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    PyModule::import(py, "json")?.call_method1("loads", (text,))
}

#[pyclass(name = "GrushinParams", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyParams(grushin_core::GrushinParams);

#[pymethods]
impl PyParams {
    #[new]
    #[pyo3(signature = (n, l, gamma))]
    fn new(n: usize, l: usize, gamma: f64) -> PyResult<Self> {
        grushin_core::GrushinParams::new(n, l, gamma).map(Self).map_err(to_py)
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn l(&self) -> usize {
        self.0.l()
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.0.gamma()
    }

    fn homogeneous_dimension(&self) -> f64 {
        self.0.homogeneous_dimension()
    }

    fn critical_exponents<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        json(py, &self.0.critical_exponents().map_err(to_py)?)
    }

    /// `d(z, 0)` for `z = (x, y)`.
    fn norm(&self, x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
        Ok(self.0.norm(&self.point(x, y)?))
    }

    fn dilate(&self, lam: f64, x: Vec<f64>, y: Vec<f64>) -> PyResult<(Vec<f64>, Vec<f64>)> {
        let z = self.0.dilate(lam, &self.point(x, y)?);
        Ok((z.x, z.y))
    }

    fn kelvin_point(&self, x: Vec<f64>, y: Vec<f64>) -> PyResult<(Vec<f64>, Vec<f64>)> {
        let z = self.0.kelvin_point(&self.point(x, y)?).map_err(to_py)?;
        Ok((z.x, z.y))
    }

    /// Closed-form `Δ_γ` of `c exp(-a (d - R))` at `(x, y)`.
    fn barrier_laplacian(&self, a: f64, c: f64, radius: f64, x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
        let spec = BarrierSpec::new(a, c, radius).map_err(to_py)?;
        closed_form::barrier_grushin_laplacian(&self.point(x, y)?, &spec, &self.0).map_err(to_py)
    }

    /// Closed-form `Δ_γ d^{-b}` at `(x, y)`.
    fn power_laplacian(&self, b: f64, x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
        closed_form::power_grushin_laplacian(&self.point(x, y)?, b, &self.0).map_err(to_py)
    }

    /// Central-difference `Δ_γ d^{-b}`, for comparison with the closed form.
    #[pyo3(signature = (b, x, y, h = DEFAULT_FD_STEP))]
    fn power_laplacian_fd(&self, b: f64, x: Vec<f64>, y: Vec<f64>, h: f64) -> PyResult<f64> {
        let f = closed_form::power_function(b, self.0);
        closed_form::fd_grushin_laplacian(&f, &self.point(x, y)?, h, &self.0).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("GrushinParams(n={}, l={}, gamma={})", self.0.n(), self.0.l(), self.0.gamma())
    }
}

impl PyParams {
    fn point(&self, x: Vec<f64>, y: Vec<f64>) -> PyResult<grushin_core::Point> {
        if x.len() != self.0.n() || y.len() != self.0.l() {
            return Err(PyValueError::new_err(format!(
                "expected {} x and {} y coordinates, got {} and {}",
                self.0.n(),
                self.0.l(),
                x.len(),
                y.len()
            )));
        }
        Ok(grushin_core::Point::new(x, y))
    }
}

#[pyclass(name = "Grid", frozen, from_py_object)]
#[derive(Clone)]
struct PyGrid(Arc<grushin_core::GridSpec>);

#[pymethods]
impl PyGrid {
    #[new]
    fn new(params: PyParams, dims: Vec<usize>, lo: Vec<f64>, hi: Vec<f64>) -> PyResult<Self> {
        grushin_core::GridSpec::new(params.0, dims, lo, hi).map(|g| Self(Arc::new(g))).map_err(to_py)
    }

    /// Box adapted to the Grushin ball of the given radius.
    #[staticmethod]
    fn grushin_box(params: PyParams, radius: f64, nodes: usize) -> PyResult<Self> {
        grushin_core::GridSpec::grushin_box(params.0, radius, nodes).map(|g| Self(Arc::new(g))).map_err(to_py)
    }

    #[staticmethod]
    fn cube(params: PyParams, half_width: f64, nodes: usize) -> PyResult<Self> {
        grushin_core::GridSpec::cube(params.0, half_width, nodes).map(|g| Self(Arc::new(g))).map_err(to_py)
    }

    #[getter]
    fn dims(&self) -> Vec<usize> {
        self.0.dims().to_vec()
    }

    #[getter]
    fn lo(&self) -> Vec<f64> {
        self.0.lo().to_vec()
    }

    #[getter]
    fn hi(&self) -> Vec<f64> {
        self.0.hi().to_vec()
    }

    #[getter]
    fn params(&self) -> PyParams {
        PyParams(*self.0.params())
    }

    fn node_count(&self) -> usize {
        self.0.node_count()
    }

    fn coords(&self, index: usize) -> PyResult<Vec<f64>> {
        if index >= self.0.node_count() {
            return Err(PyValueError::new_err("node index out of range"));
        }
        Ok(self.0.coords(index))
    }

    /// Applies the assembled `-Δ_γ` to nodal values; boundary entries are zero.
    fn apply(&self, values: Vec<f64>) -> PyResult<Vec<f64>> {
        let op = DiscreteOperator::assemble(&self.0).map_err(to_py)?;
        let f = grushin_core::Field::from_values(self.0.clone(), values).map_err(to_py)?;
        Ok(op.apply(&f).map_err(to_py)?.into_values())
    }

    /// Solves `-Δ_γ u = f` with zero boundary values by conjugate gradients.
    #[pyo3(signature = (rhs, tol = 1e-12, max_iter = 100_000))]
    fn solve_linear(&self, rhs: Vec<f64>, tol: f64, max_iter: usize) -> PyResult<PyField> {
        let op = DiscreteOperator::assemble(&self.0).map_err(to_py)?;
        let f = grushin_core::Field::from_values(self.0.clone(), rhs).map_err(to_py)?;
        Ok(PyField(core_solve_linear(&op, &f, tol, max_iter).map_err(to_py)?.field))
    }

    fn __repr__(&self) -> String {
        format!("Grid(dims={:?}, lo={:?}, hi={:?})", self.0.dims(), self.0.lo(), self.0.hi())
    }
}

#[pyclass(name = "Field", frozen, from_py_object)]
#[derive(Clone)]
struct PyField(grushin_core::Field);

#[pymethods]
impl PyField {
    #[new]
    fn new(grid: PyGrid, values: Vec<f64>) -> PyResult<Self> {
        grushin_core::Field::from_values(grid.0, values).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn load(path: std::path::PathBuf) -> PyResult<Self> {
        grushin_core::io::load_field(path).map(Self).map_err(to_py)
    }

    fn save(&self, path: std::path::PathBuf) -> PyResult<()> {
        grushin_core::io::save_field(&self.0, path).map_err(to_py)
    }

    #[getter]
    fn grid(&self) -> PyGrid {
        PyGrid(self.0.grid().clone())
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.0.values().to_vec()
    }

    /// `(max value, node index)`.
    fn sup(&self) -> (f64, usize) {
        self.0.sup()
    }

    fn min(&self) -> f64 {
        self.0.min()
    }

    fn interpolate(&self, coords: Vec<f64>) -> Option<f64> {
        self.0.interpolate(&coords)
    }

    /// `sup` over interior nodes of `ω_λ` for planes `y_axis = λ`.
    fn reflection_deficit(&self, axis: usize, lambdas: Vec<f64>) -> PyResult<Vec<f64>> {
        let rows = diagnostics::reflection_deficit(&self.0, &ReflectionSpec::new(axis, lambdas)).map_err(to_py)?;
        Ok(rows.into_iter().map(|r| r.deficit).collect())
    }

    fn radial_y_deficit(&self) -> f64 {
        diagnostics::radial_y_deficit(&self.0)
    }

    /// Log-linear fit of the tail envelope on `inner < d < outer`.
    fn decay_fit<'py>(&self, py: Python<'py>, inner: f64, outer: f64) -> PyResult<Bound<'py, PyAny>> {
        json(py, &diagnostics::decay_fit(&self.0, inner, outer).map_err(to_py)?)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

#[pyclass(name = "SolveReport", frozen)]
struct PySolveReport(semilinear::SolveReport);

#[pymethods]
impl PySolveReport {
    #[getter]
    fn field(&self) -> PyField {
        PyField(self.0.field.clone())
    }

    #[getter]
    fn sup_value(&self) -> f64 {
        self.0.sup_value
    }

    #[getter]
    fn sup_location(&self) -> Vec<f64> {
        self.0.sup_location.coords()
    }

    #[getter]
    fn newton_iterations(&self) -> usize {
        self.0.newton_iterations
    }

    #[getter]
    fn residual_history(&self) -> Vec<f64> {
        self.0.residual_history.clone()
    }

    fn summary<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        json(py, &self.0.summary())
    }
}

/// Solves `-Δ_γ u + c u = u^p` with zero boundary values. `init` is
/// `"nehari"` (default) or `"gaussian"`.
#[pyfunction]
#[pyo3(signature = (grid, p, linear_term = 0.0, init = "nehari"))]
fn solve_power(grid: PyGrid, p: f64, linear_term: f64, init: &str) -> PyResult<PySolveReport> {
    let nl = grushin_core::Nonlinearity::power(p).map_err(to_py)?.with_linear_term(linear_term);
    let op = DiscreteOperator::assemble(&grid.0).map_err(to_py)?;
    let guess = match init {
        "nehari" => nehari_initial_guess(&op, &nl).map_err(to_py)?,
        "gaussian" => default_initial_guess(&grid.0),
        other => return Err(PyValueError::new_err(format!("unknown init '{other}'"))),
    };
    solve_with_operator(&op, &nl, &guess, &grushin_core::SolveConfig::default())
        .map(PySolveReport)
        .map_err(to_py)
}

/// Runs a config file and returns its JSON summary.
#[pyfunction]
fn run_experiment(py: Python<'_>, config: std::path::PathBuf) -> PyResult<Bound<'_, PyAny>> {
    let out = experiment::run_file(config).map_err(to_py)?;
    json(py, &out.summary)
}

/// Runs a built-in suite and returns its reports.
#[pyfunction]
#[pyo3(signature = (suite, params, seed = experiment::DEFAULT_SEED))]
fn verify<'py>(py: Python<'py>, suite: &str, params: PyParams, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    let suite: experiment::Suite = suite.parse().map_err(to_py)?;
    json(py, &experiment::verify(suite, params.0, seed).map_err(to_py)?)
}

#[pyfunction]
fn inspect(py: Python<'_>, path: std::path::PathBuf) -> PyResult<Bound<'_, PyAny>> {
    json(py, &experiment::inspect(path).map_err(to_py)?)
}

#[pymodule]
fn grushin_lab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyParams>()?;
    m.add_class::<PyGrid>()?;
    m.add_class::<PyField>()?;
    m.add_class::<PySolveReport>()?;
    m.add_function(wrap_pyfunction!(solve_power, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(inspect, m)?)?;
    Ok(())
}
