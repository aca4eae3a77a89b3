//! Python bindings. Structured results cross the boundary as JSON and come
//! back as plain dicts and lists.

use lls_core::drop::DropContext;
use lls_core::enumerate::count_small_oracle;
use lls_core::family::Sink;
use lls_core::render::{render_table, render_tensor, Format};
use lls_core::{
    default_multidegree, verify_family, verify_table, Enumerator, FamilyConfig, Params, SwapFilter, TensorTable,
    TwistVector, VanishingTable, VerifyConfig,
};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<T: serde::Serialize>(py: Python<'_>, v: &T) -> PyResult<Py<PyAny>> {
    let s = serde_json::to_string(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (s,))?.unbind())
}

/// A table of vanishing orders.
#[pyclass(name = "Table", module = "lls", frozen)]
struct Table {
    inner: VanishingTable,
}

impl Table {
    fn twist(&self, c: Option<Vec<i64>>) -> PyResult<TwistVector> {
        let w = match c {
            Some(c) => TwistVector::new(2 * self.inner.d() as i64, c).map_err(value_err)?,
            None => default_multidegree(&self.inner).map_err(value_err)?,
        };
        w.check_chain(self.inner.chain()).map_err(value_err)?;
        Ok(w)
    }
}

#[pymethods]
impl Table {
    /// Parses {"r", "d", "a", "b"} (plus an optional "chain").
    #[staticmethod]
    fn from_json(s: &str) -> PyResult<Self> {
        Ok(Table { inner: VanishingTable::from_json(s).map_err(value_err)? })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn r(&self) -> usize {
        self.inner.r()
    }

    #[getter]
    fn d(&self) -> i32 {
        self.inner.d()
    }

    #[getter]
    fn rho(&self) -> i64 {
        self.inner.rho()
    }

    /// Raises ValueError naming the first broken invariant.
    fn validate(&self) -> PyResult<()> {
        self.inner.validate().map_err(value_err)
    }

    fn swaps(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.inner.find_swaps())
    }

    fn classify(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.inner.classify_degeneracy())
    }

    fn rho_breakdown(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.inner.rho_accounting().map_err(value_err)?)
    }

    /// c_2, ..., c_N of the default multidegree.
    fn default_multidegree(&self) -> PyResult<Vec<i64>> {
        Ok(default_multidegree(&self.inner).map_err(value_err)?.c().to_vec())
    }

    /// Potential sections as (j, j', start, end), for `c` or the default.
    #[pyo3(signature = (c=None))]
    fn sections(&self, c: Option<Vec<i64>>) -> PyResult<Vec<(usize, usize, usize, usize)>> {
        let w = self.twist(c)?;
        let tt = TensorTable::new(&self.inner);
        Ok(tt.potential_sections(&w).iter().map(|s| (s.row.0, s.row.1, s.start, s.end)).collect())
    }

    /// Runs the dropping rules; returns the outcome with its certificate.
    #[pyo3(signature = (c=None))]
    fn drop(&self, py: Python<'_>, c: Option<Vec<i64>>) -> PyResult<Py<PyAny>> {
        let w = self.twist(c)?;
        let tt = TensorTable::new(&self.inner);
        let outcome = DropContext::new(&self.inner, &tt, &w, tt.potential_sections(&w)).drop_all();
        to_py(py, &outcome)
    }

    #[pyo3(signature = (certificate=false))]
    fn verify(&self, py: Python<'_>, certificate: bool) -> PyResult<Py<PyAny>> {
        let config = VerifyConfig { max_candidates: None, include_certificate: certificate };
        to_py(py, &verify_table(&self.inner, &config))
    }

    /// "ascii" or "latex"; the tensor table uses `c` or the default.
    #[pyo3(signature = (format="ascii", tensor=false, c=None))]
    fn render(&self, format: &str, tensor: bool, c: Option<Vec<i64>>) -> PyResult<String> {
        let f = match format {
            "ascii" => Format::Ascii,
            "latex" => Format::Latex,
            other => return Err(value_err(format!("unknown format {:?}", other))),
        };
        if tensor {
            Ok(render_tensor(&self.inner, &self.twist(c)?, f))
        } else {
            Ok(render_table(&self.inner, f))
        }
    }

    fn __repr__(&self) -> String {
        format!("Table(N={}, r={}, d={})", self.inner.n(), self.inner.r(), self.inner.d())
    }
}

/// Table counts indexed by swap number.
#[pyfunction]
#[pyo3(signature = (g, r, d, rho_max=None))]
fn enumerate_count(g: usize, r: usize, d: i32, rho_max: Option<usize>) -> PyResult<Vec<u64>> {
    let p = Params::new(g, r, d, rho_max).map_err(value_err)?;
    let e = Enumerator::new(p).map_err(value_err)?;
    Ok(e.total_counts()[..=p.rho_max].to_vec())
}

/// Seeded uniform draw from the tables with the given swap counts.
#[pyfunction]
#[pyo3(signature = (g, r, d, seed, index, swaps=None))]
fn sample(g: usize, r: usize, d: i32, seed: u64, index: u64, swaps: Option<Vec<usize>>) -> PyResult<Option<Table>> {
    let p = Params::new(g, r, d, None).map_err(value_err)?;
    let filter = swaps.map(SwapFilter).unwrap_or_else(|| SwapFilter::all(p.rho_max));
    let e = Enumerator::new(p).map_err(value_err)?;
    Ok(e.sample(&filter, seed, index).map(|inner| Table { inner }))
}

#[pyfunction]
#[pyo3(signature = (g, r, d, rho_max=None))]
fn oracle_count(g: usize, r: usize, d: i32, rho_max: Option<usize>) -> PyResult<u64> {
    let p = Params::new(g, r, d, rho_max).map_err(value_err)?;
    count_small_oracle(g, r, d, p.rho_max).map_err(value_err)
}

/// Verifies a family without writing a stream; returns the report.
/// `samples` switches to seeded sampling.
#[pyfunction]
#[pyo3(signature = (g, r, d, rho_max=None, samples=None, seed=0))]
fn verify_family_report(
    py: Python<'_>,
    g: usize,
    r: usize,
    d: i32,
    rho_max: Option<usize>,
    samples: Option<u64>,
    seed: u64,
) -> PyResult<Py<PyAny>> {
    let p = Params::new(g, r, d, rho_max).map_err(value_err)?;
    let config = match samples {
        Some(n) => FamilyConfig::sampled(p, n, seed),
        None => FamilyConfig::exhaustive(p),
    };
    let report = py.detach(|| verify_family(&config, &mut Sink::none(), None)).map_err(value_err)?;
    to_py(py, &report)
}

#[pymodule]
fn lls(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Table>()?;
    m.add_function(wrap_pyfunction!(enumerate_count, m)?)?;
    m.add_function(wrap_pyfunction!(sample, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_count, m)?)?;
    m.add_function(wrap_pyfunction!(verify_family_report, m)?)?;
    Ok(())
}
