//! Python bindings for `skewflow`.
//!
//! Structured results (traces, verdicts, reports) cross the boundary as plain
//! dicts decoded from their JSON form.

use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

use skewflow::cli::{run_analysis as run_cli_analysis, RunError, RunOptions};
use skewflow::datko::{
    self, CertificateKind, ClassifyConfig, ContractionCertificate, SamplingSequence,
};
use skewflow::flow::{self, GalleryParams, GrowthBound, TimePair, GALLERY_NAMES};
use skewflow::spaces::{check_class_h, AnySpace, Domain, Threshold, WeightedSpace};

fn value_err(e: skewflow::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn sequence(name: &str) -> PyResult<SamplingSequence> {
    match name {
        "linear" => Ok(SamplingSequence::Linear),
        "quadratic" => Ok(SamplingSequence::Quadratic),
        other => Err(PyValueError::new_err(format!(
            "sequence must be 'linear' or 'quadratic', got {other:?}"
        ))),
    }
}

fn space(carrier: &str, p: Option<f64>, horizon: f64) -> PyResult<AnySpace> {
    let sp = match (carrier, p) {
        ("sequence", Some(p)) => WeightedSpace::lp_sequence(p, horizon),
        ("function", Some(p)) => WeightedSpace::lp_function(p, horizon),
        ("sequence", None) => WeightedSpace::sup(Domain::Sequence, horizon),
        ("function", None) => WeightedSpace::sup(Domain::Function, horizon),
        (other, _) => {
            return Err(PyValueError::new_err(format!(
                "carrier must be 'sequence' or 'function', got {other:?}"
            )))
        }
    };
    sp.map(AnySpace::Weighted).map_err(value_err)
}

/// Names of the built-in systems.
#[pyfunction]
fn gallery_names() -> Vec<&'static str> {
    GALLERY_NAMES.to_vec()
}

/// A gallery system with its default measure and observable.
#[pyclass(name = "System", module = "skewflow", frozen)]
struct PySystem {
    inner: flow::System,
    budget: usize,
}

#[pymethods]
impl PySystem {
    #[new]
    #[pyo3(signature = (name, params = None, budget = 1000))]
    fn new(name: &str, params: Option<GalleryParams>, budget: usize) -> PyResult<Self> {
        let inner = flow::gallery(name, &params.unwrap_or_default()).map_err(value_err)?;
        Ok(Self { inner, budget })
    }

    #[getter]
    fn name(&self) -> &str {
        &self.inner.name
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.cocycle.dim()
    }

    /// `(value, stderr)` of `E‖Φ(t, s)g‖`.
    fn mean(&self, t: f64, s: f64) -> PyResult<(f64, f64)> {
        let m = self
            .inner
            .orbit(self.budget)
            .mean_at(t, s)
            .map_err(value_err)?;
        Ok((m.value, m.stderr))
    }

    /// `(value, stderr)` of `‖g‖₁`.
    fn l1(&self) -> PyResult<(f64, f64)> {
        let m = self.inner.orbit(self.budget).l1().map_err(value_err)?;
        Ok((m.value, m.stderr))
    }

    /// Maximum composition-law residuals `(semiflow, cocycle)` over random triples.
    #[pyo3(signature = (triples = 1000, seed = 0, lo = 1.0, hi = 100.0))]
    fn law_residuals(&self, triples: usize, seed: u64, lo: f64, hi: f64) -> PyResult<(f64, f64)> {
        let grid = flow::random_triples(triples, seed, lo, hi).map_err(value_err)?;
        let samples = self.inner.measure.support_sample(16);
        let probes = vec![vec![1.0; self.dim()]];
        let sf = flow::check_semiflow_laws(self.inner.semiflow.as_ref(), &grid, &samples, 1e-9)
            .map_err(value_err)?;
        let cz = flow::check_cocycle_laws(
            self.inner.cocycle.as_ref(),
            self.inner.semiflow.as_ref(),
            &grid,
            &samples,
            &probes,
            1e-9,
        )
        .map_err(value_err)?;
        Ok((sf.max_residual, cz.max_residual))
    }

    /// Discrete trace over `t_j = j` or `j²` in `ℓᵖ_w`; `p=None` selects the sup norm.
    #[pyo3(signature = (s, horizon = 100_000, p = Some(1.0), sequence = "linear", instability = false))]
    fn datko_discrete<'py>(
        &self,
        py: Python<'py>,
        s: f64,
        horizon: u64,
        p: Option<f64>,
        sequence: &str,
        instability: bool,
    ) -> PyResult<Bound<'py, PyAny>> {
        let sp = space("sequence", p, horizon as f64)?;
        let seq = self::sequence(sequence)?;
        let orbit = self.inner.orbit(self.budget);
        let tr = if instability {
            datko::instability_discrete(&orbit, s, &seq, &sp, horizon)
        } else {
            datko::datko_discrete(&orbit, s, &seq, &sp, horizon)
        }
        .map_err(value_err)?;
        to_py(py, &tr)
    }

    /// Continuous trace in `Lᵖ_w` on `[1, horizon]`.
    #[pyo3(signature = (s, horizon = 1e7, p = Some(1.0), instability = false, sample_at = Vec::new()))]
    fn datko_continuous<'py>(
        &self,
        py: Python<'py>,
        s: f64,
        horizon: f64,
        p: Option<f64>,
        instability: bool,
        sample_at: Vec<f64>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let sp = space("function", p, horizon)?;
        let orbit = self.inner.orbit(self.budget);
        let tr = if instability {
            datko::instability_continuous(&orbit, s, &sp, horizon, &sample_at)
        } else {
            datko::datko_continuous(&orbit, s, &sp, horizon, &sample_at)
        }
        .map_err(value_err)?;
        to_py(py, &tr)
    }

    /// Verdict of the classifier over the default grids.
    #[pyo3(signature = (sequence = "linear", p = 1.0, carrier = "sequence", horizon = None))]
    fn classify<'py>(
        &self,
        py: Python<'py>,
        sequence: &str,
        p: f64,
        carrier: &str,
        horizon: Option<f64>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let h = horizon.unwrap_or(if carrier == "function" { 1e7 } else { 1e5 });
        let cfg = ClassifyConfig {
            space: space(carrier, Some(p), h)?,
            sequence: self::sequence(sequence)?,
            budget: self.budget,
            ..ClassifyConfig::default()
        };
        let sys = &self.inner;
        let out = py
            .detach(|| {
                datko::classify(
                    sys.cocycle.as_ref(),
                    sys.semiflow.as_ref(),
                    &sys.measure,
                    std::slice::from_ref(&sys.observable),
                    &cfg,
                )
            })
            .map_err(value_err)?;
        to_py(py, &out.verdict)
    }

    fn __repr__(&self) -> String {
        format!("System({:?})", self.inner.name)
    }
}

fn growth(m: f64, omega: f64, theta: f64) -> PyResult<GrowthBound> {
    GrowthBound::new(m, omega, theta).map_err(value_err)
}

fn certificate(kind: CertificateKind, c: f64, lam: u64, delta: f64) -> ContractionCertificate {
    ContractionCertificate {
        kind,
        c,
        lambda: lam,
        delta,
        attained_at: delta,
        grid_size: 0,
    }
}

/// `(alpha, K, K1, gamma)` for a contraction certificate `(c, λ, δ)`.
#[pyfunction]
fn lemma_constants_stable(
    m: f64,
    omega: f64,
    theta: f64,
    c: f64,
    lam: u64,
    delta: f64,
) -> PyResult<(f64, f64, Option<f64>, f64)> {
    let k = datko::lemma_constants_stable(
        &growth(m, omega, theta)?,
        &certificate(CertificateKind::Contraction, c, lam, delta),
    )
    .map_err(value_err)?;
    Ok((k.alpha, k.k, k.k1, k.gamma))
}

/// `(alpha, K, gamma)` for an expansion certificate `(c, λ, δ)`.
#[pyfunction]
fn lemma_constants_unstable(
    m: f64,
    omega: f64,
    theta: f64,
    c: f64,
    lam: u64,
    delta: f64,
) -> PyResult<(f64, f64, f64)> {
    let k = datko::lemma_constants_unstable(
        &growth(m, omega, theta)?,
        &certificate(CertificateKind::Expansion, c, lam, delta),
    )
    .map_err(value_err)?;
    Ok((k.alpha, k.k, k.gamma))
}

/// Class-H margins of `ℓᵖ_w` (or the sup-norm space when `p=None`).
#[pyfunction]
#[pyo3(signature = (multipliers, inner, p = Some(1.0), carrier = "sequence"))]
fn class_h<'py>(
    py: Python<'py>,
    multipliers: Vec<f64>,
    inner: Vec<f64>,
    p: Option<f64>,
    carrier: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let sp = space(carrier, p, 1e5)?;
    let rep =
        check_class_h(&sp, &multipliers, &inner, Threshold::default_for(&sp)).map_err(value_err)?;
    to_py(py, &rep)
}

/// Checks that `mean(r, s) ≤ K (r/s)^{-α} ‖g‖₁` on the given pairs; returns the violation count.
#[pyfunction]
fn count_decay_violations(
    system: &PySystem,
    alpha: f64,
    k: f64,
    gamma: f64,
    pairs: Vec<(f64, f64)>,
) -> PyResult<usize> {
    let pairs = pairs
        .into_iter()
        .map(|(r, s)| TimePair::new(r, s))
        .collect::<skewflow::Result<Vec<_>>>()
        .map_err(value_err)?;
    let consts = datko::LemmaConstants {
        alpha,
        k,
        k1: None,
        gamma,
    };
    let check = datko::verify_decay_bound(&system.inner.orbit(system.budget), &consts, &pairs)
        .map_err(value_err)?;
    Ok(check.violations)
}

/// Runs a JSON config file and returns the report as a dict.
#[pyfunction]
#[pyo3(signature = (config_path, out, seed = None, strict = false))]
fn run_analysis<'py>(
    py: Python<'py>,
    config_path: PathBuf,
    out: PathBuf,
    seed: Option<u64>,
    strict: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let opts = RunOptions { out, seed, strict };
    let report = py
        .detach(|| run_cli_analysis(&config_path, &opts))
        .map_err(|e| match e {
            RunError::Validation(_) => PyValueError::new_err(e.to_string()),
            RunError::Numerical(_) => PyRuntimeError::new_err(e.to_string()),
        })?;
    to_py(py, &report)
}

#[pymodule(name = "skewflow")]
fn skewflow_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PySystem>()?;
    m.add_function(wrap_pyfunction!(gallery_names, m)?)?;
    m.add_function(wrap_pyfunction!(lemma_constants_stable, m)?)?;
    m.add_function(wrap_pyfunction!(lemma_constants_unstable, m)?)?;
    m.add_function(wrap_pyfunction!(class_h, m)?)?;
    m.add_function(wrap_pyfunction!(count_decay_violations, m)?)?;
    m.add_function(wrap_pyfunction!(run_analysis, m)?)?;
    Ok(())
}
