//! Python bindings: closed-form bounds, Bregman divergences, audit campaigns
//! and the benchmark runner.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use anytime_core::bench::{
    run_audit_campaign, run_experiment, AuditKind, AuditParams, DataSource, ExperimentConfig, Method,
};
use anytime_core::bounds::{self, BernsteinParams, BoundInputs};
use anytime_core::geometry::{MirrorMap, Vector};
use anytime_core::robust;

fn py_err(err: anytime_core::Error) -> PyErr {
    PyValueError::new_err(err.to_string())
}

fn sgd_inputs(
    diameter: f64,
    sigma: f64,
    smoothness: f64,
    delta: f64,
    horizon: usize,
    beta: Option<f64>,
) -> BoundInputs {
    BoundInputs::sgd(
        diameter,
        sigma,
        smoothness,
        delta,
        horizon,
        beta.unwrap_or(1.0 / smoothness),
    )
}

/// `q_δ` for unit weights over `horizon` rounds.
#[pyfunction]
fn q_delta(diameter: f64, sigma: f64, smoothness: f64, delta: f64, horizon: usize) -> PyResult<f64> {
    bounds::q_delta(&sgd_inputs(diameter, sigma, smoothness, delta, horizon, None)).map_err(py_err)
}

/// `r_δ` for unit weights over `horizon` rounds.
#[pyfunction]
fn r_delta(diameter: f64, sigma: f64, smoothness: f64, delta: f64, horizon: usize) -> PyResult<f64> {
    bounds::r_delta(&sgd_inputs(diameter, sigma, smoothness, delta, horizon, None)).map_err(py_err)
}

/// Excess-risk envelope of anytime SGD with a constant step (default `1/λ`).
#[pyfunction]
#[pyo3(signature = (diameter, sigma, smoothness, delta, horizon, beta=None))]
fn sgd_excess_bound(
    diameter: f64,
    sigma: f64,
    smoothness: f64,
    delta: f64,
    horizon: usize,
    beta: Option<f64>,
) -> PyResult<f64> {
    bounds::sgd_excess_bound(&sgd_inputs(diameter, sigma, smoothness, delta, horizon, beta)).map_err(py_err)
}

#[pyfunction]
fn bernstein_deviation(gamma1: f64, gamma2: f64, bound: f64) -> PyResult<f64> {
    bounds::bernstein_deviation(&BernsteinParams { gamma1, gamma2, bound }).map_err(py_err)
}

/// Threshold offset `c₀` of the smooth truncation rule.
#[pyfunction]
#[pyo3(signature = (smoothness, diameter, sigma, horizon, delta, eps_sigma=0.0))]
fn truncation_offset(
    smoothness: f64,
    diameter: f64,
    sigma: f64,
    horizon: usize,
    delta: f64,
    eps_sigma: f64,
) -> PyResult<f64> {
    robust::truncation_offset(smoothness, diameter, sigma, horizon, delta, eps_sigma).map_err(py_err)
}

/// `B_Φ(u; v)` for `map` in {"euclidean", "entropy"}.
#[pyfunction]
fn bregman(map: &str, u: Vec<f64>, v: Vec<f64>) -> PyResult<f64> {
    let map = match map {
        "euclidean" => MirrorMap::Euclidean,
        "entropy" | "negative_entropy" => MirrorMap::NegativeEntropy,
        other => return Err(PyValueError::new_err(format!("unknown mirror map '{other}'"))),
    };
    let u = Vector::new(u).map_err(py_err)?;
    let v = Vector::new(v).map_err(py_err)?;
    map.bregman(&u, &v).map_err(py_err)
}

/// Runs an audit campaign and returns its report as a dict.
#[pyfunction]
#[pyo3(signature = (kind, replications=None, seed=0))]
fn run_audit<'py>(py: Python<'py>, kind: &str, replications: Option<usize>, seed: u64) -> PyResult<Bound<'py, PyDict>> {
    let kind: AuditKind = kind.parse().map_err(py_err)?;
    let m = replications.unwrap_or_else(|| kind.default_replications());
    let report = run_audit_campaign(kind, m, seed, &AuditParams::default_for(kind)).map_err(py_err)?;
    let out = PyDict::new(py);
    out.set_item("kind", report.kind.as_str())?;
    out.set_item("replications", report.replications)?;
    out.set_item("seed", report.seed)?;
    out.set_item("exceedances", report.exceedances)?;
    out.set_item("frequency", report.frequency)?;
    out.set_item("confidence_interval", report.confidence_interval)?;
    out.set_item("level", report.level)?;
    out.set_item("allowed", report.allowed)?;
    out.set_item("passed", report.passed)?;
    let details = PyDict::new(py);
    for (name, value) in &report.details {
        details.set_item(name, value)?;
    }
    out.set_item("details", details)?;
    Ok(out)
}

/// Runs the benchmark and returns one dict per (trial, method, epoch).
#[pyfunction]
#[pyo3(signature = (dataset, methods=None, trials=10, epochs=5, batch_size=8, delta=0.05, seed=0))]
#[allow(clippy::too_many_arguments)]
fn run_bench<'py>(
    py: Python<'py>,
    dataset: &str,
    methods: Option<Vec<String>>,
    trials: usize,
    epochs: usize,
    batch_size: usize,
    delta: f64,
    seed: u64,
) -> PyResult<Bound<'py, PyList>> {
    let methods = match methods {
        Some(names) => names
            .iter()
            .map(|n| n.parse::<Method>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(py_err)?,
        None => Method::ALL.to_vec(),
    };
    let config = ExperimentConfig {
        methods,
        trials,
        epochs,
        batch_size,
        delta,
        seed,
        ..ExperimentConfig::default()
    };
    config.validate().map_err(py_err)?;
    let data = DataSource::parse(dataset).and_then(|s| s.load()).map_err(py_err)?;
    let records = py.detach(|| run_experiment(&config, &data)).map_err(py_err)?;
    let out = PyList::empty(py);
    for r in records {
        let row = PyDict::new(py);
        row.set_item("trial", r.trial)?;
        row.set_item("epoch", r.epoch)?;
        row.set_item("method", r.method.as_str())?;
        row.set_item("train_loss", r.train_loss)?;
        row.set_item("test_loss", r.test_loss)?;
        row.set_item("truncation_rate", r.truncation_rate)?;
        row.set_item("wall_time_ms", r.wall_time_ms)?;
        out.append(row)?;
    }
    Ok(out)
}

#[pymodule]
fn anytime_robust(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(q_delta, m)?)?;
    m.add_function(wrap_pyfunction!(r_delta, m)?)?;
    m.add_function(wrap_pyfunction!(sgd_excess_bound, m)?)?;
    m.add_function(wrap_pyfunction!(bernstein_deviation, m)?)?;
    m.add_function(wrap_pyfunction!(truncation_offset, m)?)?;
    m.add_function(wrap_pyfunction!(bregman, m)?)?;
    m.add_function(wrap_pyfunction!(run_audit, m)?)?;
    m.add_function(wrap_pyfunction!(run_bench, m)?)?;
    Ok(())
}
