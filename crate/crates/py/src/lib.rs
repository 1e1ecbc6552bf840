//! Python bindings: grids, pairs, profiles and inequality reports.

use std::path::PathBuf;
use std::sync::Arc;

use grushin_core::expr::Expression;
use grushin_core::frequency::{
    default_vanishing_radii, geometric_radii, monotonicity_profile, sup_bound_check, three_ball_check,
    vanishing_order_fit, FrequencyConfig, FrequencyProfile, PairFields,
};
use grushin_core::geometry::{angle_psi, fundamental_solution, pseudo_gauge};
use grushin_core::inequalities::{
    caccioppoli_check, hardy_check, moser_ratio_pair, rellich_identity_residual, CACCIOPPOLI_RADIUS, DEFAULT_C_CACC,
    MOSER_RADIUS,
};
use grushin_core::io::{read_pair, write_pair};
use grushin_core::report::InequalityReport;
use grushin_core::solutions::{manufacture_field, solve_bvp, BvpOptions, SolutionPair};
use grushin_core::{Grid, GrushinParams, Point, ScalarField};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: grushin_core::Error) -> PyErr {
    use grushin_core::Error as E;
    match e {
        E::NonConvergence { .. } | E::Stagnation { .. } | E::DivisionHazard { .. } | E::DegenerateFrequency { .. } => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

#[pyclass(name = "Params", frozen)]
struct PyParams {
    inner: GrushinParams,
}

#[pymethods]
impl PyParams {
    #[new]
    #[pyo3(signature = (m = 3, n = 1, beta = 1.0))]
    fn new(m: usize, n: usize, beta: f64) -> PyResult<Self> {
        Ok(Self { inner: GrushinParams::new(m, n, beta).map_err(err)? })
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.inner.beta()
    }

    /// Homogeneous dimension `m + (β + 1) n`.
    #[getter]
    fn q(&self) -> f64 {
        self.inner.homogeneous_dimension()
    }

    fn rho(&self, coords: Vec<f64>) -> PyResult<f64> {
        pseudo_gauge(&self.inner, &Point::from_coords(&self.inner, &coords).map_err(err)?).map_err(err)
    }

    fn psi(&self, coords: Vec<f64>) -> PyResult<f64> {
        angle_psi(&self.inner, &Point::from_coords(&self.inner, &coords).map_err(err)?).map_err(err)
    }

    fn gamma(&self, coords: Vec<f64>) -> PyResult<f64> {
        fundamental_solution(&self.inner, &Point::from_coords(&self.inner, &coords).map_err(err)?).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Params(m={}, n={}, beta={})", self.inner.m(), self.inner.n(), self.inner.beta())
    }
}

#[pyclass(name = "Grid", frozen)]
struct PyGrid {
    inner: Arc<Grid>,
}

#[pymethods]
impl PyGrid {
    /// Cube `[-half, half]^(m+n)` with `counts` grid lines per axis.
    #[new]
    #[pyo3(signature = (params, half = 1.2, counts = 33))]
    fn new(params: &PyParams, half: f64, counts: usize) -> PyResult<Self> {
        Ok(Self { inner: Grid::cube(params.inner, half, counts).map_err(err)? })
    }

    #[getter]
    fn nodes(&self) -> Vec<usize> {
        self.inner.nodes().to_vec()
    }

    #[getter]
    fn spacing(&self) -> Vec<f64> {
        self.inner.spacing().to_vec()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

fn sample(grid: &Arc<Grid>, source: &str) -> PyResult<ScalarField> {
    let expr = Expression::parse(source, grid.params()).map_err(err)?;
    ScalarField::try_sample(grid, |c| expr.eval(c)).map_err(err)
}

#[pyclass(name = "Pair", frozen)]
struct PyPair {
    inner: SolutionPair,
}

#[pymethods]
impl PyPair {
    #[getter]
    fn label(&self) -> String {
        self.inner.label.clone()
    }

    #[getter]
    fn k1(&self) -> f64 {
        self.inner.k1()
    }

    #[getter]
    fn k2(&self) -> f64 {
        self.inner.k2()
    }

    #[getter]
    fn certified(&self) -> bool {
        self.inner.certified()
    }

    #[getter]
    fn residuals(&self) -> (f64, f64, f64) {
        (self.inner.residual_1, self.inner.residual_2, self.inner.residual_scale)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        write_pair(&path, &self.inner, serde_json::Value::Null).map_err(err)
    }

    /// `H(r)` with weight exponent `alpha`.
    #[pyo3(signature = (r, alpha = 4.0))]
    fn height(&self, r: f64, alpha: f64) -> PyResult<f64> {
        grushin_core::frequency::height_h(&self.inner, r, alpha).map_err(err)
    }

    #[pyo3(signature = (r, alpha = 4.0))]
    fn energy(&self, r: f64, alpha: f64) -> PyResult<f64> {
        grushin_core::frequency::energy_i(&self.inner, r, alpha).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Pair(label={:?}, k1={:.6}, k2={:.6}, certified={})", self.inner.label, self.k1(), self.k2(), self.certified())
    }
}

#[pyclass(name = "Profile", frozen)]
struct PyProfile {
    inner: FrequencyProfile,
}

#[pymethods]
impl PyProfile {
    #[getter]
    fn monotone(&self) -> bool {
        self.inner.verdict.pass
    }

    #[getter]
    fn max_violation(&self) -> f64 {
        self.inner.verdict.max_violation
    }

    #[getter]
    fn degenerate_radii(&self) -> usize {
        self.inner.verdict.degenerate_radii
    }

    /// `(r, H, I, I_alt, N, h, M)` per radius; `N` and `M` are `None` when degenerate.
    #[getter]
    #[allow(clippy::type_complexity)]
    fn rows(&self) -> Vec<(f64, f64, f64, f64, Option<f64>, f64, Option<f64>)> {
        self.inner.rows.iter().map(|r| (r.r, r.height, r.energy, r.energy_alt, r.frequency, r.h, r.monotone)).collect()
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv()
    }
}

fn report<'py>(py: Python<'py>, r: &InequalityReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("name", &r.name)?;
    d.set_item("lhs", r.lhs)?;
    d.set_item("rhs", r.rhs)?;
    d.set_item("slack", r.slack)?;
    d.set_item("tol", r.tol)?;
    d.set_item("pass", r.pass)?;
    d.set_item("r", r.config.r)?;
    d.set_item("alpha", r.config.alpha)?;
    d.set_item("notes", r.notes.clone())?;
    Ok(d)
}

/// Manufactured pair with `u` given as an expression.
#[pyfunction]
#[pyo3(signature = (grid, u, label = "manufactured", u_min = 0.1))]
fn manufacture(grid: &PyGrid, u: &str, label: &str, u_min: f64) -> PyResult<PyPair> {
    Ok(PyPair { inner: manufacture_field(label, sample(&grid.inner, u)?, u_min).map_err(err)? })
}

/// Dirichlet problem with potential `v` and boundary data `gu`, `gw`.
#[pyfunction]
#[pyo3(signature = (grid, v, gu, gw, label = "solved", tol = 1e-8, max_iter = 10_000))]
fn solve(py: Python<'_>, grid: &PyGrid, v: &str, gu: &str, gw: &str, label: &str, tol: f64, max_iter: usize) -> PyResult<PyPair> {
    let (v, gu, gw) = (sample(&grid.inner, v)?, sample(&grid.inner, gu)?, sample(&grid.inner, gw)?);
    let mut opts = BvpOptions::default();
    opts.krylov.tol = tol;
    opts.krylov.max_iter = max_iter;
    let pair = py.detach(|| solve_bvp(label, &v, &gu, &gw, &opts)).map_err(err)?;
    Ok(PyPair { inner: pair })
}

#[pyfunction]
fn load_pair(path: PathBuf) -> PyResult<PyPair> {
    Ok(PyPair { inner: read_pair(&path).map_err(err)? })
}

fn freq_config(alpha: f64) -> FrequencyConfig {
    FrequencyConfig { alpha, ..FrequencyConfig::default() }
}

/// Monotonicity profile on `n` geometric radii in `[lo, hi]`.
#[pyfunction]
#[pyo3(signature = (pair, lo = 0.15, hi = 0.75, n = 12, alpha = 4.0))]
fn frequency_profile(py: Python<'_>, pair: &PyPair, lo: f64, hi: f64, n: usize, alpha: f64) -> PyResult<PyProfile> {
    let radii = geometric_radii(lo, hi, n).map_err(err)?;
    let profile = py
        .detach(|| PairFields::new(&pair.inner).and_then(|f| monotonicity_profile(&f, &radii, &freq_config(alpha))))
        .map_err(err)?;
    Ok(PyProfile { inner: profile })
}

#[pyfunction]
#[pyo3(signature = (pair, r1, r2, r3, alpha = 4.0))]
fn three_ball<'py>(py: Python<'py>, pair: &PyPair, r1: f64, r2: f64, r3: f64, alpha: f64) -> PyResult<Bound<'py, PyDict>> {
    let rep = py
        .detach(|| PairFields::new(&pair.inner).and_then(|f| three_ball_check(&f, r1, r2, r3, &freq_config(alpha))))
        .map_err(err)?;
    report(py, &rep)
}

/// The two Hardy reports for `u`.
#[pyfunction]
#[pyo3(signature = (pair, r, alpha = 4.0))]
fn hardy<'py>(py: Python<'py>, pair: &PyPair, r: f64, alpha: f64) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let (a, b) = hardy_check(&pair.inner.u, r, alpha).map_err(err)?;
    Ok(vec![report(py, &a)?, report(py, &b)?])
}

#[pyfunction]
#[pyo3(signature = (pair, r = 0.8, alpha = 4.0))]
fn rellich_residual(pair: &PyPair, r: f64, alpha: f64) -> PyResult<f64> {
    Ok(rellich_identity_residual(&pair.inner.u, r, alpha).map_err(err)?.residual)
}

#[pyfunction]
#[pyo3(signature = (pair, r = CACCIOPPOLI_RADIUS, c_cacc = DEFAULT_C_CACC))]
fn caccioppoli<'py>(py: Python<'py>, pair: &PyPair, r: f64, c_cacc: f64) -> PyResult<Bound<'py, PyDict>> {
    report(py, &caccioppoli_check(&pair.inner, r, c_cacc).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (pair, s, radius = MOSER_RADIUS))]
fn moser_ratio(pair: &PyPair, s: f64, radius: f64) -> PyResult<f64> {
    Ok(moser_ratio_pair(&pair.inner, s, radius).map_err(err)?.ratio)
}

/// `(order_estimate, slope, bound report)` on the default fit radii.
#[pyfunction]
fn vanishing_order<'py>(py: Python<'py>, pair: &PyPair) -> PyResult<(f64, f64, Bound<'py, PyDict>)> {
    let radii = default_vanishing_radii();
    let fit = py
        .detach(|| PairFields::new(&pair.inner).and_then(|f| vanishing_order_fit(&f, &radii, &FrequencyConfig::default())))
        .map_err(err)?;
    let bound = sup_bound_check(&pair.inner, &radii).map_err(err)?;
    Ok((fit.order_estimate, fit.slope, report(py, &bound)?))
}

#[pymodule]
fn grushin_lab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyParams>()?;
    m.add_class::<PyGrid>()?;
    m.add_class::<PyPair>()?;
    m.add_class::<PyProfile>()?;
    m.add_function(wrap_pyfunction!(manufacture, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(load_pair, m)?)?;
    m.add_function(wrap_pyfunction!(frequency_profile, m)?)?;
    m.add_function(wrap_pyfunction!(three_ball, m)?)?;
    m.add_function(wrap_pyfunction!(hardy, m)?)?;
    m.add_function(wrap_pyfunction!(rellich_residual, m)?)?;
    m.add_function(wrap_pyfunction!(caccioppoli, m)?)?;
    m.add_function(wrap_pyfunction!(moser_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(vanishing_order, m)?)?;
    Ok(())
}
