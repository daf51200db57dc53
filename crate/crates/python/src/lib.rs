//! Python bindings: barycenters, objectives, the search driver and the
//! verification suite.

use std::cell::RefCell;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use baryopt_core as core;
use core::oracles::{CanoeVariant, FnOracle, NoiseModel, ObjectiveKind};
use core::verify::{run_suite as core_run_suite, Suite};
use core::{CovarianceMode, OracleError, SearchConfig, TestPoint, VarianceSchedule, WeightExponent};

fn err(e: core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn exponent(nu: f64, nu_imag: f64) -> PyResult<WeightExponent> {
    if nu_imag == 0.0 { WeightExponent::real(nu) } else { WeightExponent::complex(nu, nu_imag) }.map_err(err)
}

fn points(xs: Vec<Vec<f64>>, fs: Vec<f64>) -> PyResult<Vec<TestPoint>> {
    if xs.len() != fs.len() {
        return Err(PyValueError::new_err(format!("{} points but {} values", xs.len(), fs.len())));
    }
    xs.into_iter().zip(fs).map(|(x, f)| TestPoint::new(x, f).map_err(err)).collect()
}

fn objective_kind(name: &str, canoe_as_printed: bool) -> PyResult<(ObjectiveKind, CanoeVariant)> {
    let name = if name == "canoe_as_printed" { "canoe" } else { name };
    let kind: ObjectiveKind = name.parse().map_err(err)?;
    let variant = if canoe_as_printed { CanoeVariant::AsPrinted } else { CanoeVariant::Corrected };
    Ok((kind, variant))
}

/// Weighted center of mass of `xs` with weights `exp(-nu f)`; a nonzero
/// `nu_imag` gives the complex barycenter (coordinates must be >= 0).
#[pyfunction]
#[pyo3(signature = (xs, fs, nu, nu_imag = 0.0))]
fn batch_barycenter(xs: Vec<Vec<f64>>, fs: Vec<f64>, nu: f64, nu_imag: f64) -> PyResult<Vec<f64>> {
    let pts = points(xs, fs)?;
    let nu = exponent(nu, nu_imag)?;
    if nu.is_real() {
        return core::batch_barycenter(&pts, nu).map_err(err);
    }
    let first = pts.first().ok_or_else(|| err(core::Error::EmptyPoints))?;
    let mut acc = core::ComplexAccumulator::new(first.dim(), nu);
    for p in &pts {
        acc.accumulate(p).map_err(err)?;
    }
    acc.estimate().map_err(err)
}

/// Normalized barycentric weights of a real barycenter.
#[pyfunction]
fn barycentric_weights(xs: Vec<Vec<f64>>, fs: Vec<f64>, nu: f64) -> PyResult<Vec<f64>> {
    core::barycentric_weights(&points(xs, fs)?, exponent(nu, 0.0)?).map_err(err)
}

/// Recursive barycenter: absorbs one test point at a time.
#[pyclass(name = "BarycenterState")]
struct PyBarycenterState(core::BarycenterState);

#[pymethods]
impl PyBarycenterState {
    #[new]
    fn new(initial_guess: Vec<f64>) -> PyResult<Self> {
        core::BarycenterState::new(initial_guess).map(Self).map_err(err)
    }

    /// Absorbs `(x, f)` and returns the gain of the update.
    fn update(&mut self, x: Vec<f64>, f: f64, nu: f64) -> PyResult<f64> {
        let p = TestPoint::new(x, f).map_err(err)?;
        self.0.update(&p, exponent(nu, 0.0)?).map_err(err)
    }

    fn merge(&self, other: &Self) -> PyResult<Self> {
        self.0.merge(&other.0).map(Self).map_err(err)
    }

    #[getter]
    fn estimate(&self) -> Vec<f64> {
        self.0.estimate().to_vec()
    }

    /// Natural log of the accumulated mass.
    #[getter]
    fn log_mass(&self) -> f64 {
        self.0.log_total_mass()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!("BarycenterState(n={}, estimate={:?})", self.0.len(), self.0.estimate())
    }
}

/// Running sums of the complex barycenter.
#[pyclass(name = "ComplexAccumulator")]
struct PyComplexAccumulator(core::ComplexAccumulator);

#[pymethods]
impl PyComplexAccumulator {
    #[new]
    #[pyo3(signature = (dim, nu, nu_imag, translation = None))]
    fn new(dim: usize, nu: f64, nu_imag: f64, translation: Option<Vec<f64>>) -> PyResult<Self> {
        let nu = WeightExponent::complex(nu, nu_imag).map_err(err)?;
        match translation {
            Some(t) => {
                if t.len() != dim {
                    return Err(err(core::Error::DimensionMismatch { expected: dim, found: t.len() }));
                }
                core::ComplexAccumulator::with_translation(t, nu).map(Self).map_err(err)
            }
            None => Ok(Self(core::ComplexAccumulator::new(dim, nu))),
        }
    }

    fn accumulate(&mut self, x: Vec<f64>, f: f64) -> PyResult<()> {
        self.0.accumulate(&TestPoint::new(x, f).map_err(err)?).map_err(err)
    }

    fn estimate(&self) -> PyResult<Vec<f64>> {
        self.0.estimate().map_err(err)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

/// Names accepted wherever an objective is selected.
#[pyfunction]
fn objectives() -> Vec<&'static str> {
    ObjectiveKind::ALL.iter().map(|k| k.as_str()).collect()
}

#[pyfunction]
#[pyo3(signature = (name, x, canoe_as_printed = false))]
fn objective_value(name: &str, x: Vec<f64>, canoe_as_printed: bool) -> PyResult<f64> {
    let (kind, variant) = objective_kind(name, canoe_as_printed)?;
    kind.build(variant).evaluate(&x).map_err(|e| err(e.into()))
}

fn trace_dict<'py>(py: Python<'py>, trace: &core::RunTrace) -> PyResult<Bound<'py, PyDict>> {
    let records = PyList::empty(py);
    for r in &trace.records {
        let d = PyDict::new(py);
        d.set_item("n", r.n)?;
        d.set_item("x", r.x.clone())?;
        d.set_item("f_value", r.f_value)?;
        d.set_item("estimate", r.estimate.clone())?;
        d.set_item("sigma", r.sigma)?;
        d.set_item("z", r.z.clone())?;
        d.set_item("gain", r.gain)?;
        d.set_item("best_f", r.best_f)?;
        records.append(d)?;
    }
    let out = PyDict::new(py);
    out.set_item("records", records)?;
    out.set_item("best_f", trace.best_f)?;
    out.set_item("best_x", trace.best_x.clone())?;
    out.set_item("final_estimate", trace.final_estimate().map(<[f64]>::to_vec))?;
    out.set_item("generator", trace.generator)?;
    out.set_item("stream_rule", trace.stream_rule)?;
    out.set_item("aborted", trace.aborted.as_ref().map(|a| (a.step, a.reason.clone())))?;
    Ok(out)
}

/// Randomized barycenter search. `objective` is a built-in name or a
/// callable taking a list of floats and returning a float. Returns a dict
/// with the per-query records and the best point found.
#[pyfunction]
#[pyo3(signature = (
    objective, x0, nu, xi, schedule, budget, seed,
    nu_imag = 0.0, domain_shift = None, covariance = "isotropic",
    noise = 0.0, noise_seed = None, canoe_as_printed = false,
))]
#[allow(clippy::too_many_arguments)]
fn run_search<'py>(
    py: Python<'py>,
    objective: Bound<'py, PyAny>,
    x0: Vec<f64>,
    nu: f64,
    xi: f64,
    schedule: &str,
    budget: usize,
    seed: u64,
    nu_imag: f64,
    domain_shift: Option<Vec<f64>>,
    covariance: &str,
    noise: f64,
    noise_seed: Option<u64>,
    canoe_as_printed: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let mut cfg = SearchConfig::new(x0, exponent(nu, nu_imag)?, xi, schedule.parse::<VarianceSchedule>().map_err(err)?, budget, seed);
    cfg.domain_shift = domain_shift;
    cfg.covariance = covariance.parse::<CovarianceMode>().map_err(err)?;
    let noise_model = (noise > 0.0).then(|| NoiseModel { sigma_w: noise, seed: noise_seed.unwrap_or_else(|| core::bench::noise_seed(seed)) });

    let trace = if let Ok(name) = objective.extract::<String>() {
        let (kind, variant) = objective_kind(&name, canoe_as_printed)?;
        let obj = kind.build(variant);
        core::bench::run_one(obj.as_ref(), &cfg, noise_model).map_err(err)?
    } else if objective.is_callable() {
        if noise_model.is_some() {
            return Err(PyValueError::new_err("noise injection is only available for built-in objectives"));
        }
        let raised: RefCell<Option<PyErr>> = RefCell::new(None);
        let mut oracle = FnOracle::new(cfg.dim(), |x: &[f64]| {
            objective.call1((x.to_vec(),)).and_then(|v| v.extract::<f64>()).map_err(|e| {
                let msg = e.to_string();
                *raised.borrow_mut() = Some(e);
                OracleError::Failed(msg)
            })
        });
        let trace = core::run(&cfg, &mut oracle).map_err(err)?;
        if let Some(e) = raised.into_inner() {
            return Err(e);
        }
        trace
    } else {
        return Err(PyValueError::new_err("objective must be a name or a callable"));
    };
    trace_dict(py, &trace)
}

/// Noise-free aggregates `m_bar, m_bbar, eta_bar, eta_bbar, eta_breve`
/// together with the first-order mean and covariance of the noisy
/// barycenter at `sigma_w`.
#[pyfunction]
#[pyo3(signature = (xs, fs, nu, sigma_w = 0.0))]
fn noise_moments<'py>(py: Python<'py>, xs: Vec<Vec<f64>>, fs: Vec<f64>, nu: f64, sigma_w: f64) -> PyResult<Bound<'py, PyDict>> {
    let m = core::verify::noise_moments(&points(xs, fs)?, nu).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("m_bar", m.m_bar)?;
    d.set_item("m_bbar", m.m_bbar)?;
    d.set_item("log_m_bar", m.log_m_bar)?;
    d.set_item("log_m_bbar", m.log_m_bbar)?;
    d.set_item("eta_bar", m.eta_bar.clone())?;
    d.set_item("eta_bbar", m.eta_bbar.clone())?;
    d.set_item("eta_breve", m.eta_breve.to_rows())?;
    d.set_item("predicted_mean", m.predicted_mean(nu, sigma_w))?;
    d.set_item("predicted_covariance", m.predicted_covariance(nu, sigma_w).to_rows())?;
    Ok(d)
}

/// Runs a verification suite (`thm1` .. `thm4` or `all`); returns
/// `(passed, report_text)`.
#[pyfunction]
#[pyo3(signature = (suite, trials = core::verify::DEFAULT_BASE_TRIALS, seed = 1))]
fn run_suite(py: Python<'_>, suite: &str, trials: usize, seed: u64) -> PyResult<(bool, String)> {
    let suite: Suite = suite.parse().map_err(err)?;
    let outcome = py.detach(|| core_run_suite(suite, trials, seed)).map_err(err)?;
    Ok((outcome.pass(), outcome.render()))
}

/// Median and quartiles of best f over seeds `1..=seeds` with the standard
/// settings for `name`.
#[pyfunction]
#[pyo3(name = "bench", signature = (name, seeds = 100, noise = 0.0))]
fn bench_summary<'py>(py: Python<'py>, name: &str, seeds: u64, noise: f64) -> PyResult<Bound<'py, PyDict>> {
    let (kind, variant) = objective_kind(name, false)?;
    let obj = kind.build(variant);
    let seeds: Vec<u64> = (1..=seeds).collect();
    let runs = py
        .detach(|| core::bench::run_seeds(obj.as_ref(), &core::bench::preset(kind, 0), &seeds, noise))
        .map_err(err)?;
    let q = core::bench::quartiles(&runs.iter().map(|r| r.best_f).collect::<Vec<_>>()).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("q1", q.q1)?;
    d.set_item("median", q.median)?;
    d.set_item("q3", q.q3)?;
    d.set_item("best_f", runs.iter().map(|r| r.best_f).collect::<Vec<_>>())?;
    Ok(d)
}

#[pymodule]
fn baryopt(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(batch_barycenter, m)?)?;
    m.add_function(wrap_pyfunction!(barycentric_weights, m)?)?;
    m.add_function(wrap_pyfunction!(objectives, m)?)?;
    m.add_function(wrap_pyfunction!(objective_value, m)?)?;
    m.add_function(wrap_pyfunction!(run_search, m)?)?;
    m.add_function(wrap_pyfunction!(noise_moments, m)?)?;
    m.add_function(wrap_pyfunction!(run_suite, m)?)?;
    m.add_function(wrap_pyfunction!(bench_summary, m)?)?;
    m.add_class::<PyBarycenterState>()?;
    m.add_class::<PyComplexAccumulator>()?;
    Ok(())
}
