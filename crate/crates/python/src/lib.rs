//! Python bindings. Inputs use the same text notation as the command line
//! (`"a,b,c,d"`, `"p,q"`), and structured results come back as plain dicts.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use pyo3::IntoPyObjectExt;
use serde::Serialize;
use serde_json::Value;

use cubicflow::algebra::classify_exact;
use cubicflow::cli::IntegratorArgs;
use cubicflow::formats::{
    cubic_strings, parse_cubic, parse_point, write_trajectory_csv, ClassVerdict, OrbitSummary,
    PointInput,
};
use cubicflow::identities::{run_random, IdentitySuite};
use cubicflow::{residual_report, zero_energy_check, WpParams};

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py(py: Python<'_>, v: &Value) -> PyResult<Py<PyAny>> {
    match v {
        Value::Null => Ok(py.None()),
        Value::Bool(b) => b.into_py_any(py),
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_py_any(py),
            None => n.as_f64().unwrap_or(f64::NAN).into_py_any(py),
        },
        Value::String(s) => s.into_py_any(py),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(to_py(py, item)?)?;
            }
            list.into_py_any(py)
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, item) in map {
                dict.set_item(k, to_py(py, item)?)?;
            }
            dict.into_py_any(py)
        }
    }
}

fn serialize(py: Python<'_>, value: &impl Serialize) -> PyResult<Py<PyAny>> {
    to_py(py, &serde_json::to_value(value).map_err(value_error)?)
}

/// Completeness class, δ and (for monomial cubics) the weight `w`.
#[pyfunction]
fn classify(py: Python<'_>, cubic: &str) -> PyResult<Py<PyAny>> {
    let c = parse_cubic(cubic).map_err(value_error)?;
    serialize(py, &ClassVerdict::from(&classify_exact(&c)))
}

/// Orbit class, invariants and predicted poles through `z0`, no integration.
#[pyfunction]
fn predict(py: Python<'_>, cubic: &str, z0: &str) -> PyResult<Py<PyAny>> {
    let c = parse_cubic(cubic).map_err(value_error)?;
    let z = parse_point(z0).map_err(value_error)?;
    serialize(py, &OrbitSummary::new(&c, &z))
}

/// Outcome of `integrate`.
#[pyclass(frozen, module = "cubicflow_py")]
struct Trajectory {
    inner: cubicflow::Trajectory,
    summary: Value,
}

impl Trajectory {
    fn column(&self, f: impl Fn(&cubicflow::TrajectorySample) -> f64) -> Vec<f64> {
        self.inner.samples.iter().map(f).collect()
    }
}

#[pymethods]
impl Trajectory {
    #[getter]
    fn t(&self) -> Vec<f64> {
        self.column(|s| s.t)
    }

    #[getter]
    fn p(&self) -> Vec<f64> {
        self.column(|s| s.z.p)
    }

    #[getter]
    fn q(&self) -> Vec<f64> {
        self.column(|s| s.z.q)
    }

    #[getter]
    fn psi(&self) -> Vec<f64> {
        self.column(|s| s.psi)
    }

    #[getter(F)]
    fn f(&self) -> Vec<f64> {
        self.column(|s| s.f)
    }

    #[getter(Fdot)]
    fn f_dot(&self) -> Vec<f64> {
        self.column(|s| s.f_dot)
    }

    #[getter]
    fn g3(&self) -> f64 {
        self.inner.g3
    }

    #[getter]
    fn termination(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        serialize(py, &self.inner.termination)
    }

    #[getter]
    fn blow_up(&self) -> bool {
        self.inner.termination.any_blow_up()
    }

    /// Same content as the JSON printed by `cubicflow integrate`.
    #[getter]
    fn summary(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.summary)
    }

    /// Energy, second-order, first-integral and g₃ residuals.
    fn residuals(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        let report = py
            .detach(|| residual_report(&self.inner))
            .map_err(value_error)?;
        serialize(py, &report)
    }

    /// Parallelism and `λ² = F` residuals; only for zero-energy orbits.
    fn zero_energy_residuals(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        let report = zero_energy_check(&self.inner.cubic, &self.inner).map_err(value_error)?;
        serialize(py, &report)
    }

    /// The CSV that `cubicflow integrate` writes.
    fn to_csv(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        write_trajectory_csv(&self.inner, &mut buf).map_err(value_error)?;
        String::from_utf8(buf).map_err(value_error)
    }

    fn __len__(&self) -> usize {
        self.inner.samples.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Trajectory(samples={}, termination={:?})",
            self.inner.samples.len(),
            self.inner.termination
        )
    }
}

#[pyfunction]
#[pyo3(signature = (
    cubic, z0, *, t=None, t_span=None, rel_tol=None, abs_tol=None,
    blowup_norm=None, max_step=None, max_samples=None
))]
#[allow(clippy::too_many_arguments)]
fn integrate(
    py: Python<'_>,
    cubic: &str,
    z0: &str,
    t: Option<f64>,
    t_span: Option<(f64, f64)>,
    rel_tol: Option<f64>,
    abs_tol: Option<f64>,
    blowup_norm: Option<f64>,
    max_step: Option<f64>,
    max_samples: Option<usize>,
) -> PyResult<Trajectory> {
    if t.is_some() && t_span.is_some() {
        return Err(PyValueError::new_err("pass at most one of t and t_span"));
    }
    let c = parse_cubic(cubic).map_err(value_error)?;
    let z: PointInput = parse_point(z0).map_err(value_error)?;
    let cfg = IntegratorArgs {
        t,
        t_span,
        rel_tol,
        abs_tol,
        blowup_norm,
        max_step,
        max_samples,
    }
    .config();
    let start = z.to_f64();
    let inner = py
        .detach(|| cubicflow::integrate(&c, &start, &cfg))
        .map_err(value_error)?;
    let summary = serde_json::to_value(OrbitSummary::new(&c, &z).with_run(&inner, None))
        .map_err(value_error)?;
    Ok(Trajectory { inner, summary })
}

/// Runs the exact identity suite on `count` random integer instances.
#[pyfunction]
#[pyo3(signature = (seed=0, count=1000))]
fn verify(py: Python<'_>, seed: u64, count: u64) -> PyResult<Py<PyAny>> {
    let tally = py.detach(|| run_random(&IdentitySuite::default(), seed, count));
    serialize(py, &tally)
}

/// Real half-period ω of ℘(·; 0, g₃).
#[pyfunction]
fn half_period(g3: f64) -> PyResult<f64> {
    cubicflow::half_period(g3).map_err(value_error)
}

/// Time until `F` with `F(0) = f0`, `Ḟ(0) = fdot0` reaches its next pole.
#[pyfunction]
fn pole_distance(g3: f64, f0: f64, fdot0: f64) -> PyResult<f64> {
    cubicflow::pole_distance(WpParams::new(g3), f0, fdot0).map_err(value_error)
}

/// ℘(t; 0, g₃).
#[pyfunction]
fn wp(g3: f64, t: f64) -> PyResult<f64> {
    cubicflow::wp_eval(WpParams::new(g3), t).map_err(value_error)
}

/// Coefficients `"a,b,c,d"` of `Ω(w, z)³/3` for `w = "p,q"` (exact only).
#[pyfunction]
fn monomial_cubic(w: &str) -> PyResult<String> {
    match parse_point(w).map_err(value_error)? {
        PointInput::Exact(w) => Ok(cubic_strings(&cubicflow::monomial_cubic(&w)).join(",")),
        PointInput::Float(_) => Err(PyValueError::new_err("w must be given exactly")),
    }
}

#[pymodule]
fn cubicflow_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Trajectory>()?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(predict, m)?)?;
    m.add_function(wrap_pyfunction!(integrate, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(half_period, m)?)?;
    m.add_function(wrap_pyfunction!(pole_distance, m)?)?;
    m.add_function(wrap_pyfunction!(wp, m)?)?;
    m.add_function(wrap_pyfunction!(monomial_cubic, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_values_cross_over() {
        Python::initialize();
        Python::attach(|py| {
            let v: Value = serde_json::json!({"a": [1, 2.5, "x", null, true]});
            let obj = to_py(py, &v).unwrap();
            let repr = obj.bind(py).repr().unwrap().to_string();
            assert_eq!(repr, "{'a': [1, 2.5, 'x', None, True]}");
        });
    }

    #[test]
    fn monomial_round_trip() {
        let c = monomial_cubic("1,0").unwrap();
        assert_eq!(c, "0,0,0,1");
        assert!(monomial_cubic("0.5,1e-3").is_err());
    }
}
