//! Python bindings for subordinator-lab.
//!
//! ```python
//! import subordinator_lab_py as sl
//!
//! spec = sl.SubordinatorSpec.stable(0.5)
//! spec.phi(4.0)                       # 2.0
//! sl.dl_theoretical(spec, 1.0, 1.0)   # 0.7071...
//! ```

use std::cell::RefCell;

use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use subordinator_lab as core;
use subordinator_lab::harness::{run_experiment, ExperimentConfig};

create_exception!(subordinator_lab_py, LabError, PyValueError);

fn err(e: core::Error) -> PyErr {
    LabError::new_err(format!("{}: {e}", e.kind()))
}

#[pyclass(name = "SubordinatorSpec", frozen, module = "subordinator_lab_py")]
struct PySpec {
    inner: core::SubordinatorSpec,
}

#[pymethods]
impl PySpec {
    #[staticmethod]
    #[pyo3(signature = (alpha, scale = 1.0))]
    fn stable(alpha: f64, scale: f64) -> PyResult<Self> {
        core::SubordinatorSpec::stable(alpha, scale).map(|inner| PySpec { inner }).map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (alpha, theta, scale = 1.0))]
    fn tempered_stable(alpha: f64, theta: f64, scale: f64) -> PyResult<Self> {
        core::SubordinatorSpec::tempered_stable(alpha, theta, scale)
            .map(|inner| PySpec { inner })
            .map_err(err)
    }

    #[staticmethod]
    fn compound_poisson_exp(rate: f64, mean: f64) -> PyResult<Self> {
        core::SubordinatorSpec::compound_poisson_exp(rate, mean)
            .map(|inner| PySpec { inner })
            .map_err(err)
    }

    #[staticmethod]
    fn pure_drift(drift: f64) -> PyResult<Self> {
        core::SubordinatorSpec::pure_drift(drift).map(|inner| PySpec { inner }).map_err(err)
    }

    /// Parse the JSON form used in experiment configs.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        serde_json::from_str(text)
            .map(|inner| PySpec { inner })
            .map_err(|e| LabError::new_err(format!("SpecError: {e}")))
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner).expect("spec serializes")
    }

    fn with_drift(&self, drift: f64) -> PyResult<Self> {
        self.inner.clone().with_drift(drift).map(|inner| PySpec { inner }).map_err(err)
    }

    #[getter]
    fn family(&self) -> &'static str {
        self.inner.family_name()
    }

    #[getter]
    fn drift(&self) -> f64 {
        self.inner.drift()
    }

    fn phi(&self, lam: f64) -> PyResult<f64> {
        self.inner.phi(lam).map_err(err)
    }

    fn levy_tail(&self, x: f64) -> PyResult<f64> {
        self.inner.levy_tail(x).map_err(err)
    }

    fn small_jump_drift(&self, eps: f64) -> PyResult<f64> {
        self.inner.small_jump_drift(eps).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("SubordinatorSpec({})", self.to_json())
    }
}

#[pyclass(name = "SlowVaryingFn", frozen, module = "subordinator_lab_py")]
struct PyEll {
    inner: core::SlowVaryingFn,
}

#[pymethods]
impl PyEll {
    #[staticmethod]
    #[pyo3(signature = (value = 1.0))]
    fn constant(value: f64) -> Self {
        PyEll { inner: core::SlowVaryingFn::constant(value) }
    }

    #[staticmethod]
    fn log_shift() -> Self {
        PyEll { inner: core::SlowVaryingFn::log_shift() }
    }

    #[staticmethod]
    fn iter_log() -> Self {
        PyEll { inner: core::SlowVaryingFn::iter_log() }
    }

    #[staticmethod]
    fn power_probe(rho: f64) -> Self {
        PyEll { inner: core::SlowVaryingFn::power_probe(rho) }
    }

    /// The same kind composed with 1/x, slowly varying at 0+.
    fn at_zero(&self) -> Self {
        PyEll { inner: core::SlowVaryingFn::at_zero_via_reciprocal(self.inner.kind.clone()) }
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name()
    }

    fn __call__(&self, x: f64) -> PyResult<f64> {
        self.inner.eval(x).map_err(err)
    }
}

#[pyfunction]
fn phi(spec: &PySpec, lam: f64) -> PyResult<f64> {
    core::phi(&spec.inner, lam).map_err(err)
}

#[pyfunction]
fn levy_tail(spec: &PySpec, x: f64) -> PyResult<f64> {
    core::levy_tail(&spec.inner, x).map_err(err)
}

#[pyfunction]
fn gamma_fn(z: f64) -> PyResult<f64> {
    core::gamma_fn(z).map_err(err)
}

#[pyfunction]
fn beta_cdf(alpha: f64, t: f64) -> PyResult<f64> {
    core::beta_cdf(alpha, t).map_err(err)
}

#[pyfunction]
fn beta_cdf_small_t_asymptote(alpha: f64, t: f64) -> f64 {
    core::beta_cdf_small_t_asymptote(alpha, t)
}

#[pyfunction]
fn lde_target(alpha: f64, ell: &PyEll, s: f64, c: f64) -> PyResult<f64> {
    core::lde_target(alpha, &ell.inner, s, c).map_err(err)
}

#[pyfunction]
fn dl_theoretical(spec: &PySpec, q: f64, lam: f64) -> PyResult<f64> {
    core::dl_theoretical(&spec.inner, q, lam).map_err(err)
}

/// Gaver–Stehfest inversion of a Python callable `fhat(q)` at `t`.
#[pyfunction]
#[pyo3(signature = (fhat, t, terms = 14))]
fn invert_laplace_gs(fhat: &Bound<'_, PyAny>, t: f64, terms: usize) -> PyResult<f64> {
    let failure: RefCell<Option<PyErr>> = RefCell::new(None);
    let f = |q: f64| match fhat.call1((q,)).and_then(|v| v.extract::<f64>()) {
        Ok(v) => v,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            f64::NAN
        }
    };
    let res = core::invert_laplace_gs(f, t, terms);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    res.map_err(err)
}

#[pyfunction]
fn karamata_ratio(spec: &PySpec, alpha: f64, ell: &PyEll, x: f64) -> PyResult<f64> {
    core::karamata_ratio(&spec.inner, alpha, &ell.inner, x).map_err(err)
}

/// Potter search on the standard grids; returns (holds, A, R).
#[pyfunction]
fn potter_check(ell: &PyEll, epsilon: f64) -> PyResult<(bool, f64, f64)> {
    let s_grid = core::regvar::potter_s_grid(ell.inner.varying_at);
    let c_grid = core::regvar::potter_c_grid();
    let r = core::potter_check(&ell.inner, epsilon, &s_grid, &c_grid).map_err(err)?;
    Ok((r.holds, r.a, r.r))
}

/// First passages over `s`; returns a dict of equal-length lists.
#[pyfunction]
#[pyo3(signature = (spec, s, n, seed, eps_rel = 1e-5, compensate = true))]
fn batch_passages<'py>(
    py: Python<'py>,
    spec: &PySpec,
    s: f64,
    n: usize,
    seed: u64,
    eps_rel: f64,
    compensate: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let policy = core::TruncationPolicy::new(eps_rel, compensate).map_err(err)?;
    let inner = spec.inner.clone();
    let samples = py
        .detach(move || core::batch_passages(&inner, s, &policy, n, seed))
        .map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("crossing_time", samples.iter().map(|p| p.crossing_time).collect::<Vec<_>>())?;
    out.set_item("undershoot", samples.iter().map(|p| p.undershoot).collect::<Vec<_>>())?;
    out.set_item("overshoot", samples.iter().map(|p| p.overshoot).collect::<Vec<_>>())?;
    out.set_item("crept", samples.iter().map(|p| p.crept).collect::<Vec<_>>())?;
    Ok(out)
}

/// Run an experiment config given as JSON text; returns (csv, all_pass).
#[pyfunction]
fn run_config(py: Python<'_>, text: &str) -> PyResult<(String, bool)> {
    let cfg = ExperimentConfig::from_json(text).map_err(err)?;
    let record = py.detach(move || run_experiment(&cfg)).map_err(err)?;
    Ok((record.csv(), record.all_pass))
}

#[pymodule]
fn subordinator_lab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("LabError", m.py().get_type::<LabError>())?;
    m.add("__version__", core::VERSION)?;
    m.add_class::<PySpec>()?;
    m.add_class::<PyEll>()?;
    m.add_function(wrap_pyfunction!(phi, m)?)?;
    m.add_function(wrap_pyfunction!(levy_tail, m)?)?;
    m.add_function(wrap_pyfunction!(gamma_fn, m)?)?;
    m.add_function(wrap_pyfunction!(beta_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(beta_cdf_small_t_asymptote, m)?)?;
    m.add_function(wrap_pyfunction!(lde_target, m)?)?;
    m.add_function(wrap_pyfunction!(dl_theoretical, m)?)?;
    m.add_function(wrap_pyfunction!(invert_laplace_gs, m)?)?;
    m.add_function(wrap_pyfunction!(karamata_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(potter_check, m)?)?;
    m.add_function(wrap_pyfunction!(batch_passages, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    Ok(())
}
