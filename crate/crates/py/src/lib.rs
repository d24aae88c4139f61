//! Python bindings: TL elements, planar-map series and the Monte Carlo
//! estimators.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use planarprob::maps::{self, Body, MapOptions, PotentialTerm, TruncatedSeries};
use planarprob::poly::PolyElement;
use planarprob::rmt::{self, EnsembleConfig};
use planarprob::{tangle, text, TLElement};

fn err(e: planarprob::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// An element of the Temperley-Lieb planar algebra with coefficients in δ.
#[pyclass(name = "TL", module = "planarprob_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyTL {
    inner: TLElement,
}

#[pymethods]
impl PyTL {
    /// Parses e.g. `"cup^2 + 2*nest"` or `"3:[(1,6),(2,3),(4,5)]"`.
    #[new]
    fn new(expr: &str) -> PyResult<Self> {
        Ok(Self {
            inner: text::parse_tl(expr).map_err(err)?,
        })
    }

    #[staticmethod]
    fn cup() -> Self {
        Self {
            inner: TLElement::cup(),
        }
    }

    fn wedge(&self, k: usize, other: &PyTL) -> PyResult<Self> {
        Ok(Self {
            inner: tangle::wedge(k, &self.inner, &other.inner).map_err(err)?,
        })
    }

    fn power(&self, p: usize) -> PyResult<Self> {
        Ok(Self {
            inner: tangle::wedge_power(&self.inner, p).map_err(err)?,
        })
    }

    fn eps(&self, k: usize) -> PyResult<Self> {
        Ok(Self {
            inner: tangle::eps(k, &self.inner).map_err(err)?,
        })
    }

    fn boxtimes(&self, k: usize, other: &PyTL) -> PyResult<Self> {
        Ok(Self {
            inner: tangle::boxtimes(k, &self.inner, &other.inner).map_err(err)?,
        })
    }

    /// `τ_TL` as a polynomial in `d`.
    fn trace(&self) -> PyResult<String> {
        Ok(tangle::trace_tl(&self.inner).map_err(err)?.value.to_string())
    }

    fn trace_at(&self, delta: f64) -> PyResult<f64> {
        Ok(tangle::trace_tl(&self.inner).map_err(err)?.value.eval(delta))
    }

    fn grades(&self) -> Vec<usize> {
        self.inner.grades().into_iter().collect()
    }

    fn __add__(&self, other: &PyTL) -> Self {
        Self {
            inner: &self.inner + &other.inner,
        }
    }

    fn __sub__(&self, other: &PyTL) -> Self {
        Self {
            inner: &self.inner - &other.inner,
        }
    }

    fn __eq__(&self, other: &PyTL) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!("TL('{}')", self.inner)
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }
}

/// A non-commutative polynomial in alternating words `X_i X_i* ...`.
#[pyclass(name = "Poly", module = "planarprob_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyPoly {
    inner: PolyElement,
}

#[pymethods]
impl PyPoly {
    #[new]
    fn new(expr: &str) -> PyResult<Self> {
        Ok(Self {
            inner: text::parse_poly(expr).map_err(err)?,
        })
    }

    /// The image of a TL element with `k` letters (`∪ ↦ Σ X_i X_i*`).
    #[staticmethod]
    fn from_tl(k: u32, x: &PyTL) -> PyResult<Self> {
        Ok(Self {
            inner: planarprob::poly::embed_tl(k, &x.inner).map_err(err)?,
        })
    }

    /// Large-N Gaussian trace `(1/N) E Tr`, an exact rational.
    fn gaussian_trace(&self) -> String {
        planarprob::poly::gaussian_trace(&self.inner).to_string()
    }

    fn __add__(&self, other: &PyPoly) -> Self {
        Self {
            inner: &self.inner + &other.inner,
        }
    }

    fn __mul__(&self, other: &PyPoly) -> Self {
        Self {
            inner: planarprob::poly::poly_mul(&self.inner, &other.inner),
        }
    }

    fn __repr__(&self) -> String {
        format!("Poly('{}')", self.inner)
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }
}

/// A truncated power series in the couplings.
#[pyclass(name = "Series", module = "planarprob_py", frozen)]
struct PySeries {
    inner: TruncatedSeries,
}

#[pymethods]
impl PySeries {
    #[getter]
    fn variable(&self) -> String {
        self.inner.variable.clone()
    }

    #[getter]
    fn max_order(&self) -> Vec<usize> {
        self.inner.max_order.clone()
    }

    /// Nonzero coefficients as `{multi-index: "polynomial"}`.
    fn coefficients<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let d = PyDict::new(py);
        for (m, c) in self.inner.coefficients() {
            d.set_item(pyo3::types::PyTuple::new(py, m)?, c.display_with(&self.inner.variable))?;
        }
        Ok(d)
    }

    fn evaluate(&self, betas: Vec<f64>, x: f64) -> PyResult<f64> {
        self.inner.evaluate(&betas, x).map_err(err)
    }

    /// The `N⁰` part of a finite-size series.
    fn large_n_limit(&self) -> Self {
        Self {
            inner: self.inner.large_n_limit(),
        }
    }

    fn to_json(&self) -> String {
        self.inner.to_json().to_string()
    }

    fn __repr__(&self) -> String {
        format!("Series({})", self.to_json())
    }
}

fn body(expr: &str) -> PyResult<Body> {
    if let Ok(x) = text::parse_tl(expr) {
        return Ok(Body::Tl(x));
    }
    Ok(Body::Poly(text::parse_poly(expr).map_err(err)?))
}

fn potential(terms: Vec<(String, usize)>) -> PyResult<Vec<PotentialTerm>> {
    terms
        .into_iter()
        .map(|(t, j)| {
            Ok(PotentialTerm {
                body: body(&t)?,
                coupling_index: j,
            })
        })
        .collect()
}

#[pyfunction]
fn tl_dim(k: usize) -> PyResult<usize> {
    Ok(tangle::tl_basis(k).map_err(err)?.len())
}

#[pyfunction]
fn gram_eigenvalues(k: usize, delta: f64) -> PyResult<Vec<f64>> {
    tangle::gram_eigenvalues(k, delta).map_err(err)
}

/// `Σ_{π ∈ NC(p)} δ^{|π|}` as a polynomial in `d`.
#[pyfunction]
fn nc_moments(p: usize) -> PyResult<String> {
    Ok(maps::nc_partition_moments(p).map_err(err)?.to_string())
}

/// Planar-map series of `τ_V(observable)` for `V = ∪ + Σ β_j W_j`, the
/// potential given as `[(term, j), ...]`.
#[pyfunction]
#[pyo3(signature = (observable, potential_terms, max_order, max_half_edges = maps::DEFAULT_MAX_HALF_EDGES))]
fn gibbs_series(
    observable: &str,
    potential_terms: Vec<(String, usize)>,
    max_order: Vec<usize>,
    max_half_edges: usize,
) -> PyResult<PySeries> {
    let s = maps::gibbs_series(&body(observable)?, &potential(potential_terms)?, &max_order, &MapOptions { max_half_edges })
        .map_err(err)?;
    Ok(PySeries { inner: s })
}

/// Exact finite-N Gaussian ratio by Wick pairings (polynomial inputs).
#[pyfunction]
#[pyo3(signature = (observable, potential_terms, max_order, max_half_edges = maps::DEFAULT_MAX_HALF_EDGES))]
fn wick_oracle(
    observable: &str,
    potential_terms: Vec<(String, usize)>,
    max_order: Vec<usize>,
    max_half_edges: usize,
) -> PyResult<PySeries> {
    let q = text::parse_poly(observable).map_err(err)?;
    let s = maps::wick_oracle(&q, &potential(potential_terms)?, &max_order, &MapOptions { max_half_edges })
        .map_err(err)?;
    Ok(PySeries { inner: s })
}

#[pyfunction]
fn on_model_series(observable: &str, order1: usize, order2: usize) -> PyResult<PySeries> {
    let q = text::parse_tl(observable).map_err(err)?;
    Ok(PySeries {
        inner: maps::on_model_series(&q, order1, order2).map_err(err)?,
    })
}

/// Runs an ensemble described by a JSON config; returns one dict per
/// observable.
#[pyfunction]
fn run_ensemble<'py>(py: Python<'py>, config_json: &str) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let cfg = EnsembleConfig::from_json(config_json).map_err(err)?;
    let results = py.detach(|| rmt::run_ensemble(&cfg)).map_err(err)?;
    results
        .into_iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("observable", r.observable)?;
            d.set_item("mean", r.mean)?;
            d.set_item("stderr", r.stderr)?;
            d.set_item("trials", r.trials)?;
            d.set_item("n", r.n)?;
            d.set_item("wall_ms", r.wall_ms)?;
            d.set_item("acceptance", r.acceptance)?;
            Ok(d)
        })
        .collect()
}

/// Pooled eigenvalue histogram of a self-adjoint expression.
#[pyfunction]
#[pyo3(signature = (expr, config_json, bins = 50, lo = None, hi = None))]
fn spectral_histogram<'py>(
    py: Python<'py>,
    expr: &str,
    config_json: &str,
    bins: usize,
    lo: Option<f64>,
    hi: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = EnsembleConfig::from_json(config_json).map_err(err)?;
    let range = lo.zip(hi);
    let h = py
        .detach(|| rmt::spectral_histogram(expr, &cfg, bins, range))
        .map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("edges", h.edges.clone())?;
    d.set_item("density", h.density())?;
    d.set_item("moments", h.moments.clone())?;
    d.set_item("total", h.total)?;
    Ok(d)
}

#[pymodule]
fn planarprob_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTL>()?;
    m.add_class::<PyPoly>()?;
    m.add_class::<PySeries>()?;
    m.add_function(wrap_pyfunction!(tl_dim, m)?)?;
    m.add_function(wrap_pyfunction!(gram_eigenvalues, m)?)?;
    m.add_function(wrap_pyfunction!(nc_moments, m)?)?;
    m.add_function(wrap_pyfunction!(gibbs_series, m)?)?;
    m.add_function(wrap_pyfunction!(wick_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(on_model_series, m)?)?;
    m.add_function(wrap_pyfunction!(run_ensemble, m)?)?;
    m.add_function(wrap_pyfunction!(spectral_histogram, m)?)?;
    m.add("__version__", planarprob::VERSION)?;
    Ok(())
}
