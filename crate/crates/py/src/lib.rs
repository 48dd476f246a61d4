//! Python bindings, importable as `tailci`.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use tailci::adaptive::{adaptive_ci_detailed, successive_tests as core_successive, CprimeMode, GridSpec, IndexConvention};
use tailci::experiments::{run_experiment_with_threads, ExperimentConfig, Method};
use tailci::soptest::{RhoMode, TestConfig, TestOutcome};
use tailci::{ConfidenceInterval, DistributionSpec, Error, Target, TailSample};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Domain(_) | Error::Parse(_) => PyValueError::new_err(e.to_string()),
        Error::Solver(_) | Error::Experiment(_) => PyRuntimeError::new_err(e.to_string()),
    }
}

#[pyclass(name = "Distribution", module = "tailci", frozen)]
struct PyDistribution {
    inner: DistributionSpec,
}

#[pymethods]
impl PyDistribution {
    #[staticmethod]
    fn pareto(tau: f64) -> PyResult<Self> {
        Ok(Self { inner: DistributionSpec::pareto(tau).map_err(to_py)? })
    }

    #[staticmethod]
    fn frechet(tau: f64) -> PyResult<Self> {
        Ok(Self { inner: DistributionSpec::frechet(tau).map_err(to_py)? })
    }

    #[staticmethod]
    fn abs_student(nu: u8) -> PyResult<Self> {
        Ok(Self { inner: DistributionSpec::abs_student(nu).map_err(to_py)? })
    }

    #[staticmethod]
    fn abs_cauchy() -> Self {
        Self { inner: DistributionSpec::AbsCauchy }
    }

    #[staticmethod]
    fn discretized_pareto(tau: f64) -> PyResult<Self> {
        Ok(Self { inner: DistributionSpec::discretized_pareto(tau).map_err(to_py)? })
    }

    #[staticmethod]
    #[pyo3(signature = (tau, beta1, cprime, anchor_n, upsilon = 1.0))]
    fn perturbed_pareto(tau: f64, beta1: f64, cprime: f64, anchor_n: u64, upsilon: f64) -> PyResult<Self> {
        Ok(Self { inner: DistributionSpec::perturbed_pareto(tau, beta1, cprime, anchor_n, upsilon).map_err(to_py)? })
    }

    /// Parses the text form, e.g. `"dist=pareto tau=1"`.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(Self { inner: text.parse().map_err(to_py)? })
    }

    #[getter]
    fn tail_index(&self) -> f64 {
        self.inner.tail_index()
    }

    fn cdf(&self, x: f64) -> f64 {
        self.inner.cdf(x)
    }

    fn survival(&self, x: f64) -> f64 {
        self.inner.survival(x)
    }

    fn quantile(&self, u: f64) -> PyResult<f64> {
        self.inner.quantile(u).map_err(to_py)
    }

    fn sample(&self, n: usize, seed: u64) -> PyResult<PyTailSample> {
        Ok(PyTailSample { inner: self.inner.sample(n, seed).map_err(to_py)? })
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Distribution('{}')", self.inner)
    }
}

#[pyclass(name = "TailSample", module = "tailci", frozen)]
struct PyTailSample {
    inner: TailSample,
}

#[pymethods]
impl PyTailSample {
    #[new]
    fn new(values: Vec<f64>) -> PyResult<Self> {
        Ok(Self { inner: TailSample::new(values).map_err(to_py)? })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    /// Sorted ascending.
    fn values(&self) -> Vec<f64> {
        self.inner.values().to_vec()
    }

    fn empirical_tail(&self, x: f64) -> f64 {
        self.inner.empirical_tail(x)
    }

    /// Hill's estimate of 1/tau from the k largest observations.
    fn hill(&self, k: usize) -> PyResult<f64> {
        tailci::empirics::hill_inverse_tail_index(&self.inner, k).map_err(to_py)
    }

    fn __len__(&self) -> usize {
        self.inner.n()
    }

    fn __repr__(&self) -> String {
        format!("TailSample(n={})", self.inner.n())
    }
}

#[pyclass(name = "ConfidenceInterval", module = "tailci", frozen, get_all)]
struct PyInterval {
    target: String,
    method: String,
    center: f64,
    lower: f64,
    upper: f64,
    half_width: f64,
    grid_index: Option<usize>,
    beta: Option<f64>,
    unbounded: bool,
    degenerate: bool,
}

impl From<ConfidenceInterval> for PyInterval {
    fn from(ci: ConfidenceInterval) -> Self {
        Self {
            target: ci.target.to_string(),
            method: ci.method.to_string(),
            center: ci.center,
            lower: ci.lower,
            upper: ci.upper,
            half_width: ci.half_width,
            grid_index: ci.grid_index,
            beta: ci.beta,
            unbounded: ci.unbounded,
            degenerate: ci.degenerate,
        }
    }
}

#[pymethods]
impl PyInterval {
    fn contains(&self, value: f64) -> bool {
        self.lower <= value && (self.unbounded || value <= self.upper)
    }

    fn size(&self) -> f64 {
        if self.unbounded {
            f64::INFINITY
        } else {
            self.upper - self.lower
        }
    }

    fn __repr__(&self) -> String {
        format!("ConfidenceInterval({}, {}, [{}, {}])", self.method, self.target, self.lower, self.upper)
    }
}

#[pyclass(name = "TestConfig", module = "tailci", frozen)]
struct PyTestConfig {
    inner: TestConfig,
}

#[pymethods]
impl PyTestConfig {
    #[new]
    #[pyo3(signature = (alpha, beta0, beta1, cprime, rho = "theoretical"))]
    fn new(alpha: f64, beta0: f64, beta1: f64, cprime: f64, rho: &str) -> PyResult<Self> {
        let mode = match rho {
            "theoretical" => RhoMode::Theoretical,
            "practical" => RhoMode::Practical,
            other => return Err(PyValueError::new_err(format!("unknown rho mode `{other}`"))),
        };
        Ok(Self { inner: TestConfig::new(alpha, beta0, beta1, cprime).map_err(to_py)?.with_rho_mode(mode) })
    }

    fn threshold(&self, n: usize) -> PyResult<f64> {
        tailci::soptest::rho_threshold(n, self.inner.beta1, &self.inner).map_err(to_py)
    }
}

#[pyclass(name = "TestOutcome", module = "tailci", frozen, get_all)]
struct PyOutcome {
    statistic: f64,
    threshold: f64,
    reject: bool,
    argmax_x: f64,
    cprime: f64,
    degenerate: bool,
    tau_hat: Option<f64>,
    c_hat: Option<f64>,
    b_hat: Option<f64>,
}

impl From<TestOutcome> for PyOutcome {
    fn from(o: TestOutcome) -> Self {
        Self {
            statistic: o.statistic,
            threshold: o.threshold,
            reject: o.reject,
            argmax_x: o.argmax_x,
            cprime: o.cprime,
            degenerate: o.degenerate,
            tau_hat: o.estimates.map(|e| e.tau_hat),
            c_hat: o.estimates.map(|e| e.c_hat),
            b_hat: o.estimates.map(|e| e.b_hat),
        }
    }
}

#[pymethods]
impl PyOutcome {
    fn __repr__(&self) -> String {
        format!("TestOutcome(statistic={}, threshold={}, reject={})", self.statistic, self.threshold, self.reject)
    }
}

fn cprime_mode(s: &str) -> PyResult<CprimeMode> {
    s.parse().map_err(to_py)
}

fn grid(n: usize, b: f64, big_b: f64, levels: usize) -> PyResult<GridSpec> {
    GridSpec::with_levels(b, big_b, levels, n).map_err(to_py)
}

#[pyfunction]
fn sample_fraction(n: usize, beta: f64) -> usize {
    tailci::empirics::sample_fraction(n, beta)
}

#[pyfunction]
fn normal_quantile(p: f64) -> PyResult<f64> {
    tailci::baselines::normal_quantile(p).map_err(to_py)
}

#[pyfunction]
fn test_known(sample: &PyTailSample, tau: f64, c: f64, config: &PyTestConfig) -> PyResult<PyOutcome> {
    Ok(tailci::soptest::test_known(&sample.inner, tau, c, &config.inner).map_err(to_py)?.into())
}

#[pyfunction]
fn test_plugin(sample: &PyTailSample, config: &PyTestConfig) -> PyResult<PyOutcome> {
    Ok(tailci::soptest::test_plugin(&sample.inner, &config.inner).map_err(to_py)?.into())
}

#[pyfunction]
fn two_point_ci(sample: &PyTailSample, config: &PyTestConfig) -> PyResult<PyInterval> {
    Ok(tailci::soptest::two_point_ci(&sample.inner, &config.inner).map_err(to_py)?.into())
}

#[pyfunction]
#[pyo3(signature = (sample, k, alpha = 0.05))]
fn wald_ci(sample: &PyTailSample, k: usize, alpha: f64) -> PyResult<PyInterval> {
    Ok(tailci::baselines::wald_ci(&sample.inner, k, alpha).map_err(to_py)?.into())
}

#[pyfunction]
#[pyo3(signature = (sample, k, alpha = 0.05))]
fn score_ci(sample: &PyTailSample, k: usize, alpha: f64) -> PyResult<PyInterval> {
    Ok(tailci::baselines::score_ci(&sample.inner, k, alpha).map_err(to_py)?.into())
}

/// Outcomes of the grid tests, levels 2 through M_n in order.
#[pyfunction]
#[pyo3(signature = (sample, alpha = 0.05, b = 0.5, big_b = 10.0, levels = 95, cprime = "heuristic"))]
fn successive_tests(
    sample: &PyTailSample,
    alpha: f64,
    b: f64,
    big_b: f64,
    levels: usize,
    cprime: &str,
) -> PyResult<Vec<PyOutcome>> {
    let g = grid(sample.inner.n(), b, big_b, levels)?;
    let outcomes = core_successive(&sample.inner, &g, alpha, cprime_mode(cprime)?).map_err(to_py)?;
    Ok(outcomes.into_iter().map(PyOutcome::from).collect())
}

#[pyfunction]
#[pyo3(signature = (sample, alpha = 0.05, b = 0.5, big_b = 10.0, levels = 95, cprime = "heuristic", target = "inverse_tau", literal = false))]
#[allow(clippy::too_many_arguments)]
fn adaptive_ci(
    sample: &PyTailSample,
    alpha: f64,
    b: f64,
    big_b: f64,
    levels: usize,
    cprime: &str,
    target: &str,
    literal: bool,
) -> PyResult<PyInterval> {
    let g = grid(sample.inner.n(), b, big_b, levels)?;
    let target: Target = target.parse().map_err(to_py)?;
    let convention = if literal { IndexConvention::LastWrite } else { IndexConvention::LargestRejection };
    let r = adaptive_ci_detailed(&sample.inner, &g, alpha, cprime_mode(cprime)?, target, convention).map_err(to_py)?;
    Ok(r.interval.into())
}

/// Coverage study; returns one dict per method.
#[pyfunction]
#[pyo3(signature = (distribution, n, replications = 100, alpha = 0.05, methods = None, seed = 1, beta_oracle = None, cprime = "heuristic", threads = None))]
#[allow(clippy::too_many_arguments)]
fn run_experiment<'py>(
    py: Python<'py>,
    distribution: &PyDistribution,
    n: usize,
    replications: usize,
    alpha: f64,
    methods: Option<Vec<String>>,
    seed: u64,
    beta_oracle: Option<f64>,
    cprime: &str,
    threads: Option<usize>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let mut config = ExperimentConfig::new(distribution.inner.clone(), n);
    config.replications = replications;
    config.alpha = alpha;
    config.master_seed = seed;
    config.beta_oracle = beta_oracle;
    config.cprime = cprime_mode(cprime)?;
    if let Some(names) = methods {
        config.methods = names.iter().map(|m| m.parse::<Method>()).collect::<Result<_, _>>().map_err(to_py)?;
    }
    let result = py.detach(|| run_experiment_with_threads(&config, threads)).map_err(to_py)?;
    result
        .methods
        .iter()
        .map(|m| {
            let d = PyDict::new(py);
            d.set_item("method", m.method.name())?;
            d.set_item("coverage", m.coverage)?;
            d.set_item("mean_size", m.mean_size)?;
            d.set_item("mean", m.mean_estimate)?;
            d.set_item("mse", m.mse)?;
            d.set_item("intervals", m.intervals)?;
            d.set_item("failures", result.failures)?;
            Ok(d)
        })
        .collect()
}

#[pymodule]
#[pyo3(name = "tailci")]
fn tailci_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDistribution>()?;
    m.add_class::<PyTailSample>()?;
    m.add_class::<PyInterval>()?;
    m.add_class::<PyTestConfig>()?;
    m.add_class::<PyOutcome>()?;
    m.add_function(wrap_pyfunction!(sample_fraction, m)?)?;
    m.add_function(wrap_pyfunction!(normal_quantile, m)?)?;
    m.add_function(wrap_pyfunction!(test_known, m)?)?;
    m.add_function(wrap_pyfunction!(test_plugin, m)?)?;
    m.add_function(wrap_pyfunction!(two_point_ci, m)?)?;
    m.add_function(wrap_pyfunction!(wald_ci, m)?)?;
    m.add_function(wrap_pyfunction!(score_ci, m)?)?;
    m.add_function(wrap_pyfunction!(successive_tests, m)?)?;
    m.add_function(wrap_pyfunction!(adaptive_ci, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
