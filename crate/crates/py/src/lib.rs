//! Python module `fdcontrast`. Sample matrices cross the boundary as lists of
//! rows (one list per component).

use fdcontrast::bss::LandscapeOptions;
use fdcontrast::experiments::{self, Condition, IndependenceTestConfig, LandscapeExperimentConfig};
use fdcontrast::kernel_field::potential_at;
use fdcontrast::{
    BandwidthSelector, DerivativeScale, DistributionKind, Error, EstimatorKind, GridSpec, KernelSpec, SampleMatrix,
};
use nalgebra::DMatrix;
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    match e.root() {
        Error::InvalidInput(_) | Error::Unsupported(_) => PyValueError::new_err(e.to_string()),
        _ => PyArithmeticError::new_err(e.to_string()),
    }
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<SampleMatrix> {
    SampleMatrix::from_rows(rows).map_err(to_py)
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn estimator(name: &str) -> PyResult<EstimatorKind> {
    name.parse().map_err(to_py)
}

fn distribution(name: &str) -> PyResult<DistributionKind> {
    name.parse().map_err(to_py)
}

/// Estimator settings. `bandwidth=None` selects the rule of thumb.
#[pyclass(name = "EstimatorConfig", from_py_object)]
#[derive(Clone)]
struct PyEstimatorConfig {
    #[pyo3(get, set)]
    estimator: String,
    #[pyo3(get, set)]
    b: Option<usize>,
    #[pyo3(get, set)]
    lam: f64,
    #[pyo3(get, set)]
    bandwidth: Option<f64>,
    #[pyo3(get, set)]
    seed: u64,
    /// "hermite" or "exact"
    #[pyo3(get, set)]
    derivative_scale: String,
    #[pyo3(get, set)]
    truncate: bool,
}

#[pymethods]
impl PyEstimatorConfig {
    #[new]
    #[pyo3(signature = (estimator="lsfd", b=None, lam=0.01, bandwidth=None, seed=0, derivative_scale="hermite", truncate=false))]
    fn new(
        estimator: &str,
        b: Option<usize>,
        lam: f64,
        bandwidth: Option<f64>,
        seed: u64,
        derivative_scale: &str,
        truncate: bool,
    ) -> PyResult<Self> {
        let cfg = Self {
            estimator: estimator.to_string(),
            b,
            lam,
            bandwidth,
            seed,
            derivative_scale: derivative_scale.to_string(),
            truncate,
        };
        cfg.to_core()?;
        Ok(cfg)
    }

    fn __repr__(&self) -> String {
        format!(
            "EstimatorConfig(estimator={:?}, b={:?}, lam={}, bandwidth={:?}, seed={}, derivative_scale={:?})",
            self.estimator, self.b, self.lam, self.bandwidth, self.seed, self.derivative_scale
        )
    }
}

impl PyEstimatorConfig {
    fn to_core(&self) -> PyResult<fdcontrast::EstimatorConfig> {
        let scale = match self.derivative_scale.to_ascii_lowercase().as_str() {
            "hermite" => DerivativeScale::Hermite,
            "exact" => DerivativeScale::Exact,
            other => return Err(PyValueError::new_err(format!("unknown derivative scale '{other}'"))),
        };
        let bandwidth = match self.bandwidth {
            None => BandwidthSelector::Rot,
            Some(h) => BandwidthSelector::fixed(h).map_err(to_py)?,
        };
        let mut c = fdcontrast::EstimatorConfig::new(estimator(&self.estimator)?)
            .with_lambda(self.lam)
            .with_bandwidth(bandwidth)
            .with_seed(self.seed)
            .with_derivative_scale(scale);
        c.b = self.b;
        c.truncate = self.truncate;
        Ok(c)
    }
}

fn config_or_default(config: Option<PyEstimatorConfig>) -> PyResult<fdcontrast::EstimatorConfig> {
    match config {
        Some(c) => c.to_core(),
        None => Ok(fdcontrast::EstimatorConfig::new(EstimatorKind::Lsfd)),
    }
}

#[pyclass(name = "EstimatorReport", frozen)]
struct PyEstimatorReport {
    inner: fdcontrast::EstimatorReport,
}

#[pymethods]
impl PyEstimatorReport {
    #[getter]
    fn estimator(&self) -> String {
        self.inner.kind.to_string()
    }
    /// Dependence measure, `-objective`.
    #[getter]
    fn value(&self) -> f64 {
        self.inner.value()
    }
    #[getter]
    fn objective(&self) -> f64 {
        self.inner.objective
    }
    #[getter]
    fn contrast(&self) -> f64 {
        self.inner.contrast
    }
    #[getter]
    fn v2_hat(&self) -> f64 {
        self.inner.v2_hat
    }
    #[getter]
    fn crip_hat(&self) -> f64 {
        self.inner.crip_hat
    }
    #[getter]
    fn residual(&self) -> f64 {
        self.inner.residual
    }
    #[getter]
    fn sigma(&self) -> f64 {
        self.inner.sigma
    }
    #[getter]
    fn lam(&self) -> f64 {
        self.inner.lambda
    }
    #[getter]
    fn b(&self) -> usize {
        self.inner.b
    }
    /// Fitted coefficients; grid estimators give the `b × b` matrix flattened column-major.
    #[getter]
    fn theta(&self) -> Vec<f64> {
        self.inner.theta.as_slice().to_vec()
    }

    fn __repr__(&self) -> String {
        format!("EstimatorReport(estimator={}, value={:e}, sigma={}, b={})", self.inner.kind, self.value(), self.inner.sigma, self.inner.b)
    }
}

#[pyclass(name = "Landscape", frozen)]
struct PyLandscape {
    #[pyo3(get)]
    thetas: Vec<f64>,
    #[pyo3(get)]
    values: Vec<f64>,
    #[pyo3(get)]
    argmin_theta: f64,
    #[pyo3(get)]
    true_theta: Option<f64>,
    #[pyo3(get)]
    angle_error: Option<f64>,
}

#[pymethods]
impl PyLandscape {
    fn __len__(&self) -> usize {
        self.thetas.len()
    }
}

/// Fits one estimator to a 2-row sample.
#[pyfunction]
#[pyo3(signature = (rows, config=None))]
fn fit(rows: Vec<Vec<f64>>, config: Option<PyEstimatorConfig>) -> PyResult<PyEstimatorReport> {
    let inner = fdcontrast::fit(&matrix(rows)?, &config_or_default(config)?).map_err(to_py)?;
    Ok(PyEstimatorReport { inner })
}

#[pyfunction]
#[pyo3(signature = (u, sigma, order=0))]
fn gaussian_eval(u: f64, sigma: f64, order: u8) -> PyResult<f64> {
    let spec = KernelSpec::new(sigma, fdcontrast::KernelOrder::from_index(order).map_err(to_py)?).map_err(to_py)?;
    fdcontrast::gaussian_eval(u, spec).map_err(to_py)
}

#[pyfunction]
fn information_potential(samples: Vec<f64>, sigma: f64) -> PyResult<f64> {
    fdcontrast::information_potential(&samples, sigma).map_err(to_py)
}

#[pyfunction]
fn cross_information_potential(samples_f: Vec<f64>, samples_g: Vec<f64>, sigma: f64) -> PyResult<f64> {
    fdcontrast::cross_information_potential(&samples_f, &samples_g, sigma).map_err(to_py)
}

#[pyfunction]
fn information_force(samples: Vec<f64>, j: usize, sigma: f64) -> PyResult<f64> {
    fdcontrast::information_force(&samples, j, sigma).map_err(to_py)
}

#[pyfunction]
fn local_potential(samples: Vec<f64>, j: usize, sigma: f64) -> PyResult<f64> {
    potential_at(&samples, j, sigma).map_err(to_py)
}

/// Returns `(v_j, v_m, v_c, qmi)`.
#[pyfunction]
fn qmi_ed(rows: Vec<Vec<f64>>, sigma: f64) -> PyResult<(f64, f64, f64, f64)> {
    let q = fdcontrast::qmi_ed(&matrix(rows)?, sigma).map_err(to_py)?;
    Ok((q.v_j, q.v_m, q.v_c, q.qmi))
}

#[pyfunction]
fn rot_bandwidth(samples: Vec<f64>) -> PyResult<f64> {
    fdcontrast::rot_bandwidth(&samples).map_err(to_py)
}

#[pyfunction]
fn normalize(rows: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    Ok(fdcontrast::normalize(&matrix(rows)?).map_err(to_py)?.rows())
}

#[pyfunction]
#[pyo3(signature = (rows, sigma, p=2.0, grid_points=128))]
fn lp_fd_grid(rows: Vec<Vec<f64>>, sigma: f64, p: f64, grid_points: usize) -> PyResult<f64> {
    let grid = GridSpec { points: grid_points, ..GridSpec::default() };
    fdcontrast::lp_fd_grid(&matrix(rows)?, sigma, p, grid).map_err(to_py)
}

/// Returns `(white_rows, transform_rows, mean)`.
#[pyfunction]
fn whiten(rows: Vec<Vec<f64>>) -> PyResult<(Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<f64>)> {
    let w = fdcontrast::whiten(&matrix(rows)?).map_err(to_py)?;
    Ok((w.white.rows(), rows_of(&w.transform), w.mean))
}

#[pyfunction]
fn rotate2(rows: Vec<Vec<f64>>, theta: f64) -> PyResult<Vec<Vec<f64>>> {
    Ok(fdcontrast::rotate2(&matrix(rows)?, theta).map_err(to_py)?.rows())
}

#[pyfunction]
fn angle_error(estimated: f64, truth: f64) -> f64 {
    fdcontrast::angle_error(estimated, truth)
}

/// Sweeps the estimator over rotations of already-whitened data.
#[pyfunction]
#[pyo3(signature = (white_rows, config=None, grid=100, freeze_basis=false))]
fn landscape(
    white_rows: Vec<Vec<f64>>,
    config: Option<PyEstimatorConfig>,
    grid: usize,
    freeze_basis: bool,
) -> PyResult<PyLandscape> {
    let opts = LandscapeOptions { freeze_basis, ..LandscapeOptions::with_grid(grid) };
    let l = fdcontrast::landscape(&matrix(white_rows)?, &config_or_default(config)?, opts).map_err(to_py)?;
    Ok(PyLandscape { thetas: l.thetas, values: l.values, argmin_theta: l.argmin_theta, true_theta: None, angle_error: None })
}

/// Generates two i.i.d. sources of `dist`, mixes them by a rotation of
/// `theta0`, whitens, and sweeps.
#[pyfunction]
#[pyo3(signature = (dist, config=None, n=300, theta0=0.0, grid=100, seed=0, freeze_basis=false))]
fn landscape_experiment(
    dist: &str,
    config: Option<PyEstimatorConfig>,
    n: usize,
    theta0: f64,
    grid: usize,
    seed: u64,
    freeze_basis: bool,
) -> PyResult<PyLandscape> {
    let est = config_or_default(config)?;
    let mut cfg = LandscapeExperimentConfig::new(distribution(dist)?, est.kind());
    cfg.estimator = est;
    cfg.n = n;
    cfg.theta0 = theta0;
    cfg.seed = seed;
    cfg.options = LandscapeOptions { freeze_basis, ..LandscapeOptions::with_grid(grid) };
    let r = experiments::landscape_experiment(&cfg).map_err(to_py)?;
    Ok(PyLandscape {
        thetas: r.landscape.thetas,
        values: r.landscape.values,
        argmin_theta: r.landscape.argmin_theta,
        true_theta: Some(r.true_theta),
        angle_error: Some(r.angle_error),
    })
}

/// Returns per-trial rows `(trial, estimator, condition, value)`.
#[pyfunction]
#[pyo3(signature = (trials=100, n=300, estimators=None, b=None, lam=0.01, seed=0))]
fn independence_test(
    trials: usize,
    n: usize,
    estimators: Option<Vec<String>>,
    b: Option<usize>,
    lam: f64,
    seed: u64,
) -> PyResult<Vec<(usize, String, String, f64)>> {
    let estimators = match estimators {
        Some(list) => list.iter().map(|s| estimator(s)).collect::<PyResult<Vec<_>>>()?,
        None => EstimatorKind::ALL.to_vec(),
    };
    let config = IndependenceTestConfig { estimators, n, trials, b, lambda: lam, seed, ..Default::default() };
    let res = experiments::independence_test(&config).map_err(to_py)?;
    Ok(res
        .records
        .into_iter()
        .map(|r| {
            let cond = match r.condition {
                Condition::Independent => "independent",
                Condition::Dependent => "dependent",
            };
            (r.trial, r.estimator.to_string(), cond.to_string(), r.value)
        })
        .collect())
}

/// `n` standardized draws of benchmark kind `a`..`u`.
#[pyfunction]
fn sample(kind: &str, n: usize, seed: u64) -> PyResult<Vec<f64>> {
    fdcontrast::sample(distribution(kind)?, n, seed).map_err(to_py)
}

#[pyfunction]
fn dependent_pair(n: usize, seed: u64) -> PyResult<Vec<Vec<f64>>> {
    Ok(fdcontrast::dependent_pair(n, seed).map_err(to_py)?.rows())
}

#[pyfunction]
fn independent_pair(n: usize, seed: u64) -> PyResult<Vec<Vec<f64>>> {
    Ok(fdcontrast::independent_pair(n, seed).map_err(to_py)?.rows())
}

#[pymodule]
#[pyo3(name = "fdcontrast")]
pub fn fdcontrast_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyEstimatorConfig>()?;
    m.add_class::<PyEstimatorReport>()?;
    m.add_class::<PyLandscape>()?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_eval, m)?)?;
    m.add_function(wrap_pyfunction!(information_potential, m)?)?;
    m.add_function(wrap_pyfunction!(cross_information_potential, m)?)?;
    m.add_function(wrap_pyfunction!(information_force, m)?)?;
    m.add_function(wrap_pyfunction!(local_potential, m)?)?;
    m.add_function(wrap_pyfunction!(qmi_ed, m)?)?;
    m.add_function(wrap_pyfunction!(rot_bandwidth, m)?)?;
    m.add_function(wrap_pyfunction!(normalize, m)?)?;
    m.add_function(wrap_pyfunction!(lp_fd_grid, m)?)?;
    m.add_function(wrap_pyfunction!(whiten, m)?)?;
    m.add_function(wrap_pyfunction!(rotate2, m)?)?;
    m.add_function(wrap_pyfunction!(angle_error, m)?)?;
    m.add_function(wrap_pyfunction!(landscape, m)?)?;
    m.add_function(wrap_pyfunction!(landscape_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(independence_test, m)?)?;
    m.add_function(wrap_pyfunction!(sample, m)?)?;
    m.add_function(wrap_pyfunction!(dependent_pair, m)?)?;
    m.add_function(wrap_pyfunction!(independent_pair, m)?)?;
    Ok(())
}
