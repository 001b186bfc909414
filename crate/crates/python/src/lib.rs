//! Python bindings for the fractional p-Laplacian laboratory.
//!
//! Grids, the collocated fractional gradient, the energy solver and the
//! Besov probe are exposed with plain lists of floats at the boundary.

use std::sync::Arc;

use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use fraclap_core::besov::{fit_exponent, second_difference_norm, BesovProbe};
use fraclap_core::fracops::Collocation;
use fraclap_core::harness::{parse_diffusivity, predicted_exponent as predicted};
use fraclap_core::solver::{solve_problem, Problem, SolverOptions};
use fraclap_core::{DiscreteFunction, Error, Field, FracGradOperator, ProblemSpec};

create_exception!(fraclap, ConvergenceError, PyRuntimeError);
create_exception!(fraclap, MeasurementError, PyRuntimeError);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Convergence { .. } => ConvergenceError::new_err(e.to_string()),
        Error::Fit(_) | Error::Degenerate(_) => MeasurementError::new_err(e.to_string()),
        Error::Io(_) | Error::Numeric { .. } | Error::Singular(_) => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Uniform grid on `[-L, L]` with `Ω = (-a, a)`.
#[pyclass(name = "Grid", frozen)]
struct PyGrid {
    inner: fraclap_core::Grid,
}

#[pymethods]
impl PyGrid {
    #[new]
    #[pyo3(signature = (L=8.0, a=1.0, n=2048))]
    #[allow(non_snake_case)]
    fn new(L: f64, a: f64, n: usize) -> PyResult<Self> {
        Ok(Self {
            inner: fraclap_core::Grid::new(L, a, n).map_err(to_py)?,
        })
    }

    #[getter]
    fn dx(&self) -> f64 {
        self.inner.dx()
    }

    #[getter]
    fn n_cells(&self) -> usize {
        self.inner.n_cells()
    }

    #[getter]
    fn n_nodes(&self) -> usize {
        self.inner.n_nodes()
    }

    #[getter]
    fn window_half_width(&self) -> f64 {
        self.inner.window_half_width()
    }

    #[getter]
    fn domain_half_width(&self) -> f64 {
        self.inner.domain_half_width()
    }

    fn nodes(&self) -> Vec<f64> {
        self.inner.nodes()
    }

    fn __repr__(&self) -> String {
        format!(
            "Grid(L={}, a={}, n={})",
            self.inner.window_half_width(),
            self.inner.domain_half_width(),
            self.inner.n_cells()
        )
    }
}

/// Dense collocated fractional gradient of order `s`.
#[pyclass(name = "FracGradient", frozen)]
struct PyFracGradient {
    inner: Arc<FracGradOperator>,
}

#[pymethods]
impl PyFracGradient {
    #[new]
    #[pyo3(signature = (grid, s, collocation="nodes"))]
    fn new(grid: &PyGrid, s: f64, collocation: &str) -> PyResult<Self> {
        let c = Collocation::parse(collocation).map_err(to_py)?;
        let op = FracGradOperator::assemble_at(&grid.inner, s, c).map_err(to_py)?;
        Ok(Self {
            inner: Arc::new(op),
        })
    }

    #[getter]
    fn s(&self) -> f64 {
        self.inner.s()
    }

    #[getter]
    fn mu(&self) -> f64 {
        self.inner.mu()
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.inner.n_rows(), self.inner.dim())
    }

    fn points(&self) -> Vec<f64> {
        self.inner.points()
    }

    fn entry(&self, k: usize, j: usize) -> PyResult<f64> {
        if k >= self.inner.n_rows() || j >= self.inner.dim() {
            return Err(PyValueError::new_err("index out of range"));
        }
        Ok(self.inner.entry(k, j))
    }

    /// `∇^s` of the piecewise-linear interpolant of nodal `values`.
    fn apply(&self, values: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.apply_values(&values).map_err(to_py)
    }

    /// `div_s` of a field sampled at the nodes (nodal collocation only).
    fn divergence(&self, field: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.apply_divergence(&field).map_err(to_py)
    }
}

/// Minimiser of the discrete energy, with solver diagnostics.
#[pyclass(name = "Solution", frozen, get_all)]
struct PySolution {
    x: Vec<f64>,
    u: Vec<f64>,
    energy: f64,
    weak_residual: f64,
    iterations: usize,
    eps_schedule: Vec<f64>,
}

#[pymethods]
impl PySolution {
    fn __repr__(&self) -> String {
        format!(
            "Solution(nodes={}, energy={:.6e}, weak_residual={:.3e}, iterations={})",
            self.u.len(),
            self.energy,
            self.weak_residual,
            self.iterations
        )
    }
}

/// Solves `−div_s(A|∇^s u|^{p−2}∇^s u) = f` in `(-a, a)` with zero exterior data.
///
/// `rhs` is `const:<v>`, `bump`, `abs` or `file:<path>`; `diffusivity` is
/// `const:<v>` or `file:<path>`.
#[pyfunction]
#[pyo3(signature = (p, s, rhs="const:1", L=8.0, a=1.0, n=2048, tol=None, diffusivity=None, collocation="midpoints", max_iter=50000))]
#[allow(non_snake_case, clippy::too_many_arguments)]
fn solve(
    py: Python<'_>,
    p: f64,
    s: f64,
    rhs: &str,
    L: f64,
    a: f64,
    n: usize,
    tol: Option<f64>,
    diffusivity: Option<&str>,
    collocation: &str,
    max_iter: usize,
) -> PyResult<PySolution> {
    let mut spec = ProblemSpec::new(p, s, Field::parse(rhs).map_err(to_py)?).with_grid(L, a, n);
    let mut options = SolverOptions::for_p(p);
    if let Some(t) = tol {
        options.tol_grad = t;
    }
    options.max_iter = max_iter;
    options.collocation = Collocation::parse(collocation).map_err(to_py)?;
    spec.options = options;
    if let Some(d) = diffusivity {
        spec = spec.with_diffusivity(parse_diffusivity(d).map_err(to_py)?);
    }
    let sol = py
        .detach(|| Problem::new(spec).and_then(|pb| solve_problem(&pb)))
        .map_err(to_py)?;
    Ok(PySolution {
        x: sol.u.grid().nodes(),
        u: sol.u.values().to_vec(),
        energy: sol.energy,
        weak_residual: sol.weak_residual,
        iterations: sol.iterations,
        eps_schedule: sol.eps_schedule,
    })
}

fn discrete(grid: &PyGrid, values: Vec<f64>) -> PyResult<DiscreteFunction> {
    DiscreteFunction::from_values(grid.inner, values).map_err(to_py)
}

/// `‖v_h − 2v + v_{−h}‖_{L^p(Ω_{|h|})}` for nodal values on `grid`.
#[pyfunction]
fn second_difference(grid: &PyGrid, values: Vec<f64>, p: f64, h: f64) -> PyResult<f64> {
    second_difference_norm(&discrete(grid, values)?, p, h).map_err(to_py)
}

/// Probes `D(h)` over dyadic steps in `[hmin, hmax]` and fits the exponent.
///
/// Returns `(samples, slope, residual, points)` with `samples` a list of
/// `(h, D)` pairs.
#[pyfunction]
#[allow(clippy::type_complexity)]
fn probe(
    grid: &PyGrid,
    values: Vec<f64>,
    p: f64,
    hmin: f64,
    hmax: f64,
) -> PyResult<(Vec<(f64, f64)>, f64, f64, usize)> {
    let v = discrete(grid, values)?;
    let probe = BesovProbe::measure(&v, p, hmin, hmax).map_err(to_py)?;
    let fit = fit_exponent(&probe).map_err(to_py)?;
    Ok((probe.samples, fit.slope, fit.residual, fit.points))
}

/// Least-squares slope of `log D` against `log h`: `(slope, intercept, residual)`.
#[pyfunction]
fn fit(hs: Vec<f64>, ds: Vec<f64>) -> PyResult<(f64, f64, f64)> {
    if hs.len() != ds.len() {
        return Err(PyValueError::new_err("hs and ds differ in length"));
    }
    let reference = ds.iter().fold(0.0_f64, |m, d| m.max(d.abs()));
    let probe = BesovProbe::from_samples(2.0, hs.into_iter().zip(ds).collect(), reference);
    let f = fit_exponent(&probe).map_err(to_py)?;
    Ok((f.slope, f.intercept, f.residual))
}

#[pyfunction]
fn predicted_exponent(p: f64, s: f64) -> PyResult<f64> {
    predicted(p, s).map_err(to_py)
}

/// Normalisation constant `μ(N, s)` of the fractional gradient.
#[pyfunction]
#[pyo3(signature = (s, dim=1))]
fn mu(s: f64, dim: u32) -> PyResult<f64> {
    fraclap_core::fracops::mu(dim, s).map_err(to_py)
}

#[pyfunction]
fn gamma(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}

#[pymodule]
fn fraclap(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrid>()?;
    m.add_class::<PyFracGradient>()?;
    m.add_class::<PySolution>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(second_difference, m)?)?;
    m.add_function(wrap_pyfunction!(probe, m)?)?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(predicted_exponent, m)?)?;
    m.add_function(wrap_pyfunction!(mu, m)?)?;
    m.add_function(wrap_pyfunction!(gamma, m)?)?;
    m.add("ConvergenceError", m.py().get_type::<ConvergenceError>())?;
    m.add("MeasurementError", m.py().get_type::<MeasurementError>())?;
    Ok(())
}
