//! Python bindings: graphs, signings, the progression and product
//! partitioners, and the lacunary moment tools.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use circsplit::ap::{partition_ap_with, APGenerators, AlgoConfig};
use circsplit::discrepancy::{partial_color as walk, ConstraintSystem, WalkConfig};
use circsplit::lacunary::{self, LacunaryFamily};
use circsplit::products::{self, ProductKind, ProductSigning, ProductSpec};
use circsplit::spectral::{self, RatioMode, SpectralErrorReport};
use circsplit::{Error, Signing};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::RestartCapExceeded { .. } | Error::QuadratureNonConvergence { .. } => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn signing(signs: Vec<i8>) -> PyResult<Signing> {
    Signing::new(signs).map_err(to_py)
}

fn ratio_mode(mode: &str, oversample: u32) -> PyResult<RatioMode> {
    match mode {
        "exact" => Ok(RatioMode::Exact),
        "grid" => Ok(RatioMode::Grid { oversample }),
        other => Err(PyValueError::new_err(format!("mode must be 'exact' or 'grid', got {other:?}"))),
    }
}

fn report_dict<'py>(py: Python<'py>, r: &SpectralErrorReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("max_ratio", r.max_ratio)?;
    d.set_item("certified_bound", r.certified_bound)?;
    d.set_item("argmax_theta", r.argmax_theta)?;
    d.set_item("bernstein_factor", r.bernstein_factor)?;
    Ok(d)
}

fn product_kind(kind: &str) -> PyResult<ProductKind> {
    match kind {
        "cartesian" => Ok(ProductKind::Cartesian),
        "tensor" => Ok(ProductKind::Tensor),
        other => Err(PyValueError::new_err(format!("kind must be 'cartesian' or 'tensor', got {other:?}"))),
    }
}

/// Circulant graph on `Z_n`; generators are folded into `1..n/2` and deduplicated.
#[pyclass(name = "CirculantGraph", frozen)]
struct PyCirculantGraph {
    inner: spectral::CirculantGraph,
}

#[pymethods]
impl PyCirculantGraph {
    #[new]
    fn new(n: u64, gens: Vec<i64>) -> PyResult<Self> {
        Ok(Self {
            inner: spectral::CirculantGraph::canonical(n, &gens).map_err(to_py)?,
        })
    }

    #[getter]
    fn n(&self) -> u64 {
        self.inner.n()
    }

    #[getter]
    fn gens(&self) -> Vec<u64> {
        self.inner.gens().to_vec()
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k()
    }

    #[getter]
    fn degree(&self) -> usize {
        self.inner.degree()
    }

    fn laplacian_eigenvalues(&self) -> Vec<f64> {
        self.inner.laplacian_eigenvalues()
    }

    fn edge_effective_resistance(&self, a: i64) -> PyResult<f64> {
        self.inner.edge_effective_resistance(a).map_err(to_py)
    }

    fn edge_effective_resistances(&self) -> Vec<f64> {
        self.inner.edge_effective_resistances()
    }

    fn max_edge_effective_resistance(&self) -> f64 {
        self.inner.max_edge_effective_resistance()
    }

    /// Relative eigenvalue error of a signing given in generator order.
    #[pyo3(signature = (signs, mode = "exact", oversample = 32))]
    fn spectral_ratio<'py>(
        &self,
        py: Python<'py>,
        signs: Vec<i8>,
        mode: &str,
        oversample: u32,
    ) -> PyResult<Bound<'py, PyDict>> {
        let r = spectral::spectral_ratio_with(&self.inner, &signing(signs)?, ratio_mode(mode, oversample)?, false)
            .map_err(to_py)?;
        report_dict(py, &r)
    }

    fn __repr__(&self) -> String {
        format!("CirculantGraph(n={}, gens={:?})", self.inner.n(), self.inner.gens())
    }
}

/// Signs the progression `a + s·b`, `s = 1..k`, on `Z_n`.
#[pyfunction]
#[pyo3(signature = (k, a = 0, b = 1, n = None, seed = 0, config = "desk", restart_cap = None))]
fn partition<'py>(
    py: Python<'py>,
    k: usize,
    a: u64,
    b: u64,
    n: Option<u64>,
    seed: u64,
    config: &str,
    restart_cap: Option<usize>,
) -> PyResult<Bound<'py, PyDict>> {
    let n = match n {
        Some(n) => n,
        None => {
            let floor = 20 * k as u64 * b + a * k as u64;
            (floor + 1..).find(|&m| primal_check::miller_rabin(m)).expect("primes are unbounded")
        }
    };
    let spec = APGenerators::new(a, b, k, n).map_err(to_py)?;
    let mut cfg = match config {
        "desk" => AlgoConfig::desk(k),
        "asymptotic" => AlgoConfig::asymptotic(k),
        other => return Err(PyValueError::new_err(format!("unknown config {other:?}"))),
    };
    cfg.restart_cap = restart_cap;
    let out = partition_ap_with(&spec, &cfg, &mut ChaCha8Rng::seed_from_u64(seed), false).map_err(to_py)?;
    let d = report_dict(py, &out.spectral)?;
    d.set_item("n", n)?;
    d.set_item("generators", spec.graph().gens().to_vec())?;
    d.set_item("signing", out.signing.as_slice().to_vec())?;
    d.set_item(
        "graph_signing",
        spec.to_graph_signing(&out.signing).map_err(to_py)?.as_slice().to_vec(),
    )?;
    d.set_item("lambda_max", out.conditions.lambda.value)?;
    d.set_item("moment_max", out.conditions.moment.value)?;
    d.set_item("conditions_pass", out.conditions.passes())?;
    Ok(d)
}

/// One partial coloring step from `x0`; returns the new point.
#[pyfunction]
#[pyo3(signature = (vectors, thresholds, x0, delta, seed = 0, restart_cap = None, enforce_thresholds = true))]
fn partial_color(
    vectors: Vec<Vec<f64>>,
    thresholds: Vec<f64>,
    x0: Vec<f64>,
    delta: f64,
    seed: u64,
    restart_cap: Option<usize>,
    enforce_thresholds: bool,
) -> PyResult<Vec<f64>> {
    let sys = ConstraintSystem::with_dim(x0.len(), vectors, thresholds).map_err(to_py)?;
    let mut cfg = WalkConfig::new(delta);
    cfg.restart_cap = restart_cap;
    cfg.enforce_thresholds = enforce_thresholds;
    Ok(walk(&sys, &x0, &cfg, &mut ChaCha8Rng::seed_from_u64(seed)).map_err(to_py)?.x)
}

/// Exact ratio of a product signing, by enumeration of `Z_n^d`.
#[pyfunction]
fn product_ratio(kind: &str, n: u64, per_factor: Vec<Vec<i8>>) -> PyResult<f64> {
    let ks = per_factor.iter().map(Vec::len).collect();
    let spec = ProductSpec::new(product_kind(kind)?, n, ks).map_err(to_py)?;
    let per = per_factor.into_iter().map(signing).collect::<PyResult<Vec<_>>>()?;
    let signs = ProductSigning::new(&spec, per).map_err(to_py)?;
    Ok(products::product_spectral_ratio(&spec, &signs).map_err(to_py)?.max_ratio)
}

#[pyfunction]
#[pyo3(signature = (kind, n, ks, seed = 0))]
fn partition_product<'py>(
    py: Python<'py>,
    kind: &str,
    n: u64,
    ks: Vec<usize>,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let spec = ProductSpec::new(product_kind(kind)?, n, ks).map_err(to_py)?;
    let out = products::partition_product(&spec, AlgoConfig::desk, &mut ChaCha8Rng::seed_from_u64(seed))
        .map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("max_ratio", out.report.max_ratio)?;
    d.set_item("argmax", out.report.argmax)?;
    d.set_item(
        "per_factor",
        out.signing.per_factor.iter().map(|y| y.as_slice().to_vec()).collect::<Vec<_>>(),
    )?;
    d.set_item("factor_ratios", out.factor_ratios)?;
    Ok(d)
}

#[pyfunction]
fn gen_lacunary(k: usize, gap: f64) -> PyResult<Vec<u64>> {
    Ok(lacunary::gen_lacunary(k, gap).map_err(to_py)?.gens().to_vec())
}

/// Exact moment as a `fractions.Fraction`.
#[pyfunction]
fn moment_closed_form(py: Python<'_>, k: usize, p: u64) -> PyResult<Py<PyAny>> {
    let r = lacunary::moment_closed_form(k, p).map_err(to_py)?;
    let fraction = py.import("fractions")?.getattr("Fraction")?;
    Ok(fraction.call1((format!("{}/{}", r.numer(), r.denom()),))?.unbind())
}

#[pyfunction]
#[pyo3(signature = (gens, gap, signs, p, quad_tol = 1e-10))]
fn moment_quadrature(gens: Vec<u64>, gap: f64, signs: Vec<i8>, p: u64, quad_tol: f64) -> PyResult<f64> {
    let fam = LacunaryFamily::new(gens, gap).map_err(to_py)?;
    lacunary::moment_quadrature(&fam, &signing(signs)?, p, quad_tol).map_err(to_py)
}

#[pyfunction]
fn normalized_moment<'py>(py: Python<'py>, k: usize, p: u64) -> PyResult<Bound<'py, PyDict>> {
    let r = lacunary::normalized_moment(k, p).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("ratio", r.ratio)?;
    d.set_item("ratio_exact", r.ratio_exact)?;
    d.set_item("lower", r.lower)?;
    d.set_item("upper", r.upper)?;
    d.set_item("within", r.within)?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (gens, quad_tol = 1e-10))]
fn limit_effective_resistances(gens: Vec<u64>, quad_tol: f64) -> PyResult<Vec<f64>> {
    spectral::limit_effective_resistances(&gens, quad_tol).map_err(to_py)
}

#[pymodule]
fn circsplit_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCirculantGraph>()?;
    m.add_function(wrap_pyfunction!(partition, m)?)?;
    m.add_function(wrap_pyfunction!(partial_color, m)?)?;
    m.add_function(wrap_pyfunction!(product_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(partition_product, m)?)?;
    m.add_function(wrap_pyfunction!(gen_lacunary, m)?)?;
    m.add_function(wrap_pyfunction!(moment_closed_form, m)?)?;
    m.add_function(wrap_pyfunction!(moment_quadrature, m)?)?;
    m.add_function(wrap_pyfunction!(normalized_moment, m)?)?;
    m.add_function(wrap_pyfunction!(limit_effective_resistances, m)?)?;
    Ok(())
}
