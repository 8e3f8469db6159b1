//! Python bindings for `mcf-core`.
//!
//! Arrays cross the boundary as `float64` numpy arrays. Every core error is
//! raised as `mcf.McfError` with the error kind as the message prefix.

use mcf_core as core;
use mcf_core::{Direction, Radius};
use ndarray::{Array1, Array2};
use numpy::{IntoPyArray, PyArray1, PyArray2, PyReadonlyArray1, PyReadonlyArray2};
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

create_exception!(mcf, McfError, PyException);

fn py_err(e: core::McfError) -> PyErr {
    McfError::new_err(format!("{}: {e}", e.kind()))
}

trait OrRaise<T> {
    fn or_raise(self) -> PyResult<T>;
}

impl<T> OrRaise<T> for core::Result<T> {
    fn or_raise(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

fn direction(v: &PyReadonlyArray1<'_, f64>) -> PyResult<Direction> {
    Direction::new(&v.as_array().to_vec()).or_raise()
}

fn radius(r: f64) -> PyResult<Radius> {
    Radius::new(r).or_raise()
}

fn vec1<'py>(py: Python<'py>, v: Vec<f64>) -> Bound<'py, PyArray1<f64>> {
    Array1::from(v).into_pyarray(py)
}

/// Observations in rows, variables in columns.
#[pyclass(name = "DataMatrix", module = "mcf", frozen)]
struct PyDataMatrix(core::DataMatrix);

#[pymethods]
impl PyDataMatrix {
    #[new]
    fn new(values: PyReadonlyArray2<'_, f64>) -> PyResult<Self> {
        core::DataMatrix::new(values.as_array().to_owned()).map(Self).or_raise()
    }

    #[getter]
    fn n_obs(&self) -> usize {
        self.0.n_obs()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    #[getter]
    fn is_centered(&self) -> bool {
        self.0.is_centered()
    }

    #[getter]
    fn values<'py>(&self, py: Python<'py>) -> Bound<'py, PyArray2<f64>> {
        self.0.values().clone().into_pyarray(py)
    }

    #[getter]
    fn mean<'py>(&self, py: Python<'py>) -> Bound<'py, PyArray1<f64>> {
        self.0.mean().clone().into_pyarray(py)
    }

    fn column_std<'py>(&self, py: Python<'py>) -> Bound<'py, PyArray1<f64>> {
        self.0.column_std().into_pyarray(py)
    }

    fn center(&self) -> Self {
        Self(self.0.center())
    }

    fn __repr__(&self) -> String {
        format!("DataMatrix(n_obs={}, dim={}, centered={})", self.0.n_obs(), self.0.dim(), self.0.is_centered())
    }
}

#[pyclass(name = "Evaluation", module = "mcf", frozen, get_all)]
struct PyEvaluation {
    value: f64,
    gradient: Py<PyArray1<f64>>,
    ess: f64,
}

#[pyclass(name = "Maximum", module = "mcf", frozen, get_all)]
struct PyMaximum {
    theta: Py<PyArray1<f64>>,
    g_value: f64,
    basin_count: usize,
}

#[pyclass(name = "McfResult", module = "mcf", frozen, get_all)]
struct PyMcfResult {
    radius_used: f64,
    maxima: Vec<Py<PyMaximum>>,
    pc1: Py<PyArray1<f64>>,
    ess_at_radius: f64,
    warnings: Vec<String>,
}

#[pyclass(name = "RadiusChoice", module = "mcf", frozen, get_all)]
struct PyRadiusChoice {
    radius: f64,
    min_ess: f64,
    heavy_tail: bool,
}

#[pyclass(name = "EigenPair", module = "mcf", frozen, get_all)]
struct PyEigenPair {
    eigenvalue: f64,
    eigenvector: Py<PyArray1<f64>>,
    degenerate: bool,
}

#[pyclass(name = "RadiusCheck", module = "mcf", frozen, get_all)]
struct PyRadiusCheck {
    radius: f64,
    holds: bool,
    g_a: f64,
    g_b: f64,
    ess_a: f64,
    ess_b: f64,
    reliable: bool,
    significant: bool,
}

#[pyclass(name = "TailDominanceReport", module = "mcf", frozen, get_all)]
struct PyTailReport {
    z_star: Option<f64>,
    s_star_estimate: Option<f64>,
    holds_for_radii: Vec<Py<PyRadiusCheck>>,
    bandwidth_a: f64,
    bandwidth_b: f64,
    ess_min: f64,
    stable_dominance: bool,
}

/// Unit vector along `v`.
#[pyfunction]
fn normalize<'py>(py: Python<'py>, v: PyReadonlyArray1<'py, f64>) -> PyResult<Bound<'py, PyArray1<f64>>> {
    let d = core::normalize(&v.as_array()).or_raise()?;
    Ok(vec1(py, d.to_vec()))
}

#[pyfunction]
fn empirical_cumulant(data: &PyDataMatrix, r: f64, theta: PyReadonlyArray1<'_, f64>) -> PyResult<f64> {
    core::empirical_cumulant(&data.0, radius(r)?, &direction(&theta)?).or_raise()
}

/// Value, tangent gradient and effective sample size at one direction.
#[pyfunction]
fn evaluate(py: Python<'_>, data: &PyDataMatrix, r: f64, theta: PyReadonlyArray1<'_, f64>) -> PyResult<PyEvaluation> {
    let e = core::evaluate(&data.0, radius(r)?, &direction(&theta)?).or_raise()?;
    Ok(PyEvaluation {
        value: e.value,
        gradient: e.gradient.into_pyarray(py).unbind(),
        ess: e.ess,
    })
}

type ArrayPair<'py> = (Bound<'py, PyArray1<f64>>, Bound<'py, PyArray1<f64>>);

/// Cumulant values along `theta` at each radius, returned as `(values, ess)`.
#[pyfunction]
fn cumulant_profile<'py>(
    py: Python<'py>,
    data: &PyDataMatrix,
    theta: PyReadonlyArray1<'py, f64>,
    radii: Vec<f64>,
) -> PyResult<ArrayPair<'py>> {
    let radii = radii.into_iter().map(radius).collect::<PyResult<Vec<_>>>()?;
    let p = core::cumulant_profile(&data.0, &direction(&theta)?, &radii).or_raise()?;
    Ok((vec1(py, p.values), vec1(py, p.ess)))
}

#[allow(clippy::too_many_arguments)]
#[pyfunction]
#[pyo3(name = "mcf", signature = (data, radius=None, ess_min=core::DEFAULT_ESS_MIN, starts=None, seed=None, max_iters=None, grad_tol=None, angle_dedup_deg=None))]
fn find_maxima(
    py: Python<'_>,
    data: &PyDataMatrix,
    radius: Option<f64>,
    ess_min: f64,
    starts: Option<usize>,
    seed: Option<u64>,
    max_iters: Option<usize>,
    grad_tol: Option<f64>,
    angle_dedup_deg: Option<f64>,
) -> PyResult<PyMcfResult> {
    let d = core::OptimizerConfig::default();
    let cfg = core::OptimizerConfig {
        starts: starts.unwrap_or(d.starts),
        seed: seed.unwrap_or(d.seed),
        max_iters: max_iters.unwrap_or(d.max_iters),
        grad_tol: grad_tol.unwrap_or(d.grad_tol),
        angle_dedup_deg: angle_dedup_deg.unwrap_or(d.angle_dedup_deg),
        ..d
    };
    let r = radius.map(Radius::new).transpose().or_raise()?;
    let res = py.detach(|| core::mcf(&data.0, &cfg, r, ess_min)).or_raise()?;
    let maxima = res
        .maxima
        .iter()
        .map(|m| {
            Py::new(
                py,
                PyMaximum {
                    theta: vec1(py, m.direction.to_vec()).unbind(),
                    g_value: m.g_value,
                    basin_count: m.basin_count,
                },
            )
        })
        .collect::<PyResult<_>>()?;
    Ok(PyMcfResult {
        radius_used: res.radius_used,
        maxima,
        pc1: vec1(py, res.pc1.to_vec()).unbind(),
        ess_at_radius: res.ess_at_radius,
        warnings: res.warnings,
    })
}

#[pyfunction]
#[pyo3(signature = (data, ess_min=core::DEFAULT_ESS_MIN, seed=0))]
fn auto_radius(py: Python<'_>, data: &PyDataMatrix, ess_min: f64, seed: u64) -> PyResult<PyRadiusChoice> {
    let c = py.detach(|| core::auto_radius(&data.0, ess_min, seed)).or_raise()?;
    Ok(PyRadiusChoice {
        radius: c.radius.value(),
        min_ess: c.min_ess,
        heavy_tail: c.heavy_tail,
    })
}

fn eigenpair(py: Python<'_>, e: core::EigenPair) -> PyEigenPair {
    PyEigenPair {
        eigenvalue: e.eigenvalue,
        eigenvector: vec1(py, e.eigenvector.to_vec()).unbind(),
        degenerate: e.degenerate,
    }
}

#[pyfunction]
fn sample_covariance<'py>(py: Python<'py>, data: &PyDataMatrix) -> PyResult<Bound<'py, PyArray2<f64>>> {
    Ok(core::sample_covariance(&data.0).or_raise()?.into_pyarray(py))
}

#[pyfunction]
fn first_principal_component(py: Python<'_>, data: &PyDataMatrix) -> PyResult<PyEigenPair> {
    Ok(eigenpair(py, core::first_principal_component(&data.0).or_raise()?))
}

/// Largest eigenpair of a symmetric matrix.
#[pyfunction]
#[pyo3(signature = (m, tol=1e-12))]
fn leading_eigenpair(py: Python<'_>, m: PyReadonlyArray2<'_, f64>, tol: f64) -> PyResult<PyEigenPair> {
    Ok(eigenpair(py, core::leading_eigenpair(&m.as_array().to_owned(), tol).or_raise()?))
}

/// Upper-tail dominance check of `theta_a` over `theta_b` at increasing radii.
#[pyfunction]
#[pyo3(signature = (data, theta_a, theta_b, radii, ess_min=core::DEFAULT_ESS_MIN))]
fn verify_theorem1(
    py: Python<'_>,
    data: &PyDataMatrix,
    theta_a: PyReadonlyArray1<'_, f64>,
    theta_b: PyReadonlyArray1<'_, f64>,
    radii: Vec<f64>,
    ess_min: f64,
) -> PyResult<PyTailReport> {
    let (a, b) = (direction(&theta_a)?, direction(&theta_b)?);
    let radii = radii.into_iter().map(radius).collect::<PyResult<Vec<_>>>()?;
    let rep = py
        .detach(|| core::verify_tail_dominance(&data.0, &a, &b, &radii, ess_min))
        .or_raise()?;
    let checks = rep
        .holds_for_radii
        .iter()
        .map(|c| {
            Py::new(
                py,
                PyRadiusCheck {
                    radius: c.radius,
                    holds: c.holds,
                    g_a: c.g_a,
                    g_b: c.g_b,
                    ess_a: c.ess_a,
                    ess_b: c.ess_b,
                    reliable: c.reliable,
                    significant: c.significant,
                },
            )
        })
        .collect::<PyResult<_>>()?;
    Ok(PyTailReport {
        z_star: rep.z_star,
        s_star_estimate: rep.s_star_estimate,
        stable_dominance: rep.stable_dominance(),
        holds_for_radii: checks,
        bandwidth_a: rep.bandwidth_a,
        bandwidth_b: rep.bandwidth_b,
        ess_min: rep.ess_min,
    })
}

/// Parametric family with an analytic cumulant function and a sampler.
#[pyclass(name = "Model", module = "mcf", frozen)]
struct PyModel(core::ModelParams);

#[pymethods]
impl PyModel {
    #[staticmethod]
    fn gaussian(sigma: PyReadonlyArray2<'_, f64>) -> PyResult<Self> {
        let p = core::GaussianParams::new(sigma.as_array().to_owned()).or_raise()?;
        Ok(Self(core::ModelParams::Gaussian(p)))
    }

    #[staticmethod]
    fn skew_normal(sigma: PyReadonlyArray2<'_, f64>, alpha: PyReadonlyArray1<'_, f64>) -> PyResult<Self> {
        let p = core::SkewNormalParams::new(sigma.as_array().to_owned(), alpha.as_array().to_owned()).or_raise()?;
        Ok(Self(core::ModelParams::SkewNormal(p)))
    }

    #[staticmethod]
    fn gamma(alpha0: f64, alphas: Vec<f64>) -> PyResult<Self> {
        let p = core::GammaParams::new(alpha0, alphas).or_raise()?;
        Ok(Self(core::ModelParams::Gamma(p)))
    }

    #[getter]
    fn name(&self) -> &'static str {
        self.0.name()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    /// Population mean of the uncentered family.
    fn mean<'py>(&self, py: Python<'py>) -> Bound<'py, PyArray1<f64>> {
        self.0.mean().into_pyarray(py)
    }

    fn covariance<'py>(&self, py: Python<'py>) -> Bound<'py, PyArray2<f64>> {
        let c: Array2<f64> = self.0.covariance();
        c.into_pyarray(py)
    }

    /// Centered draws; the population mean is subtracted.
    fn sample(&self, py: Python<'_>, n_samples: usize, seed: u64) -> PyResult<PyDataMatrix> {
        py.detach(|| self.0.sample(n_samples, seed)).map(PyDataMatrix).or_raise()
    }

    fn cumulant(&self, r: f64, theta: PyReadonlyArray1<'_, f64>) -> PyResult<f64> {
        self.0.cumulant(radius(r)?, &direction(&theta)?).or_raise()
    }

    fn __repr__(&self) -> String {
        format!("Model({}, dim={})", self.0.name(), self.0.dim())
    }
}

#[pymodule(name = "mcf")]
fn mcf_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("McfError", m.py().get_type::<McfError>())?;
    m.add("DEFAULT_ESS_MIN", core::DEFAULT_ESS_MIN)?;
    m.add_class::<PyDataMatrix>()?;
    m.add_class::<PyModel>()?;
    m.add_class::<PyEvaluation>()?;
    m.add_class::<PyMaximum>()?;
    m.add_class::<PyMcfResult>()?;
    m.add_class::<PyRadiusChoice>()?;
    m.add_class::<PyEigenPair>()?;
    m.add_class::<PyRadiusCheck>()?;
    m.add_class::<PyTailReport>()?;
    m.add_function(wrap_pyfunction!(normalize, m)?)?;
    m.add_function(wrap_pyfunction!(empirical_cumulant, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(cumulant_profile, m)?)?;
    m.add_function(wrap_pyfunction!(find_maxima, m)?)?;
    m.add_function(wrap_pyfunction!(auto_radius, m)?)?;
    m.add_function(wrap_pyfunction!(sample_covariance, m)?)?;
    m.add_function(wrap_pyfunction!(first_principal_component, m)?)?;
    m.add_function(wrap_pyfunction!(leading_eigenpair, m)?)?;
    m.add_function(wrap_pyfunction!(verify_theorem1, m)?)?;
    Ok(())
}
