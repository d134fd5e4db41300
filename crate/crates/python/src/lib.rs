//! Python bindings. Samples are passed as lists of rows (or anything a
//! `Vec<Vec<float>>` extracts from); poles default to `e1`.

use hdwatson::distributions::{self, ModelKind, ModelSpec};
use hdwatson::inference;
use hdwatson::montecarlo::{self, SimulationConfig};
use hdwatson::special;
use hdwatson::{DirectionalSample, ReferenceLaw, RngStream, StatisticKind, UnitVector};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: hdwatson::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn pole(theta0: Option<Vec<f64>>, p: usize) -> PyResult<UnitVector> {
    match theta0 {
        None => UnitVector::e1(p).map_err(err),
        Some(v) if v.len() != p => Err(PyValueError::new_err(format!(
            "theta0 has dimension {}, data has dimension {p}",
            v.len()
        ))),
        Some(v) => UnitVector::new(v).map_err(err),
    }
}

fn dim(rows: &[Vec<f64>]) -> PyResult<usize> {
    rows.first()
        .map(Vec::len)
        .ok_or_else(|| PyValueError::new_err("sample is empty"))
}

fn directional(rows: &[Vec<f64>]) -> PyResult<DirectionalSample> {
    DirectionalSample::from_rows_normalized(rows, inference::INPUT_UNIT_TOL).map_err(err)
}

fn method(name: &str) -> PyResult<StatisticKind> {
    StatisticKind::from_name(name).ok_or_else(|| {
        PyValueError::new_err(format!(
            "unknown method `{name}` (expected classical, modified, sign or spiked)"
        ))
    })
}

fn rows_of(sample: &DirectionalSample) -> Vec<Vec<f64>> {
    sample.iter().map(<[f64]>::to_vec).collect()
}

/// Classical Watson statistic of unit-vector rows.
#[pyfunction]
#[pyo3(signature = (rows, theta0=None))]
fn watson_classical(rows: Vec<Vec<f64>>, theta0: Option<Vec<f64>>) -> PyResult<f64> {
    let p = dim(&rows)?;
    let v = hdwatson::watson_classical(&directional(&rows)?, &pole(theta0, p)?).map_err(err)?;
    Ok(v.value)
}

/// Modified (high-dimensional) Watson statistic of unit-vector rows.
#[pyfunction]
#[pyo3(signature = (rows, theta0=None))]
fn watson_modified(rows: Vec<Vec<f64>>, theta0: Option<Vec<f64>>) -> PyResult<f64> {
    let p = dim(&rows)?;
    let v = hdwatson::watson_modified(&directional(&rows)?, &pole(theta0, p)?).map_err(err)?;
    Ok(v.value)
}

/// Sign statistic of unit-vector rows.
#[pyfunction]
#[pyo3(signature = (rows, theta0=None))]
fn sign_statistic(rows: Vec<Vec<f64>>, theta0: Option<Vec<f64>>) -> PyResult<f64> {
    let p = dim(&rows)?;
    let v = hdwatson::sign_statistic(&directional(&rows)?, &pole(theta0, p)?).map_err(err)?;
    Ok(v.value)
}

/// Spikedness statistic of raw (non-normalized) rows.
#[pyfunction]
#[pyo3(signature = (rows, theta0=None))]
fn spiked_statistic(rows: Vec<Vec<f64>>, theta0: Option<Vec<f64>>) -> PyResult<f64> {
    let p = dim(&rows)?;
    let v = hdwatson::spiked_statistic(&rows, &pole(theta0, p)?).map_err(err)?;
    Ok(v.value)
}

/// Runs one test; returns a dict with the statistic, critical value,
/// p-value and decision.
#[pyfunction]
#[pyo3(signature = (rows, method_name, theta0=None, alpha=0.05))]
fn run_test<'py>(
    py: Python<'py>,
    rows: Vec<Vec<f64>>,
    method_name: &str,
    theta0: Option<Vec<f64>>,
    alpha: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let p = dim(&rows)?;
    let kind = method(method_name)?;
    let o = hdwatson::run_test(&rows, &pole(theta0, p)?, kind, alpha).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("method", kind.name())?;
    d.set_item("n", o.statistic.n)?;
    d.set_item("p", o.statistic.p)?;
    d.set_item("statistic", o.statistic.value)?;
    d.set_item("critical_value", o.critical_value)?;
    d.set_item("p_value", o.p_value)?;
    d.set_item("reject", o.reject)?;
    d.set_item("alpha", o.alpha)?;
    d.set_item("reference", o.reference.to_string())?;
    Ok(d)
}

#[pyfunction]
fn normal_quantile(q: f64) -> PyResult<f64> {
    special::normal_quantile(q).map_err(err)
}

#[pyfunction]
fn chisquare_quantile(q: f64, df: u32) -> PyResult<f64> {
    special::chisquare_quantile(q, df).map_err(err)
}

#[pyfunction]
fn normal_cdf(x: f64) -> f64 {
    special::normal_cdf(x)
}

#[pyfunction]
fn chisquare_cdf(x: f64, df: u32) -> f64 {
    special::chisquare_cdf(x, df)
}

/// KS distance to N(0, 1) (`df=None`) or to chi-square(`df`).
#[pyfunction]
#[pyo3(signature = (values, df=None))]
fn ks_distance(values: Vec<f64>, df: Option<u32>) -> PyResult<f64> {
    if values.is_empty() {
        return Err(PyValueError::new_err("values must be nonempty"));
    }
    let law = df.map_or(ReferenceLaw::Normal, ReferenceLaw::ChiSquare);
    Ok(montecarlo::ks_distance(&values, law))
}

fn model(
    dist: &str,
    p: usize,
    kappa: Option<f64>,
    sigma2: Option<f64>,
    lambda_: Option<f64>,
    theta0: Option<Vec<f64>>,
) -> PyResult<ModelSpec> {
    let need = |v: Option<f64>, name: &str| {
        v.ok_or_else(|| PyValueError::new_err(format!("dist `{dist}` requires {name}")))
    };
    let kind = match dist {
        "uniform" => ModelKind::UniformSphere,
        "tangent" => ModelKind::TangentUniform,
        "fvml" => ModelKind::FvML {
            kappa: need(kappa, "kappa")?,
        },
        "purkayastha" => ModelKind::Purkayastha {
            kappa: need(kappa, "kappa")?,
        },
        "spiked" => ModelKind::SpikedGaussian {
            sigma2: sigma2.unwrap_or(1.0),
            lambda: need(lambda_, "lambda_")?,
        },
        other => return Err(PyValueError::new_err(format!("unknown dist `{other}`"))),
    };
    ModelSpec::new(kind, pole(theta0, p)?).map_err(err)
}

/// Draws `count` observations; directional models return unit rows, the
/// spiked model returns raw Gaussian rows.
#[pyfunction]
#[pyo3(signature = (dist, p, count, seed, stream=0, kappa=None, sigma2=None, lambda_=None, theta0=None))]
#[allow(clippy::too_many_arguments)]
fn sample(
    dist: &str,
    p: usize,
    count: usize,
    seed: u64,
    stream: u64,
    kappa: Option<f64>,
    sigma2: Option<f64>,
    lambda_: Option<f64>,
    theta0: Option<Vec<f64>>,
) -> PyResult<Vec<Vec<f64>>> {
    let spec = model(dist, p, kappa, sigma2, lambda_, theta0)?;
    let mut rng = RngStream::new(seed, stream);
    match spec.kind() {
        ModelKind::SpikedGaussian { .. } => {
            distributions::sample_spiked_gaussian(&spec, &mut rng, count).map_err(err)
        }
        ModelKind::TangentUniform => {
            distributions::sample_tangent_uniform(spec.pole(), &mut rng, count)
                .map(|v| v.into_iter().map(UnitVector::into_inner).collect())
                .map_err(err)
        }
        ModelKind::UniformSphere => distributions::sample_uniform_sphere(p, &mut rng, count)
            .map(|s| rows_of(&s))
            .map_err(err),
        ModelKind::FvML { .. } => distributions::sample_fvml(&spec, &mut rng, count)
            .map(|s| rows_of(&s))
            .map_err(err),
        ModelKind::Purkayastha { .. } => distributions::sample_purkayastha(&spec, &mut rng, count)
            .map(|s| rows_of(&s))
            .map_err(err),
    }
}

/// Monte Carlo estimate of `E[u^order]` for the radial part `u`.
#[pyfunction]
#[pyo3(signature = (dist, p, order, draws, seed, kappa=None, sigma2=None, lambda_=None))]
#[allow(clippy::too_many_arguments)]
fn radial_moments(
    dist: &str,
    p: usize,
    order: u32,
    draws: usize,
    seed: u64,
    kappa: Option<f64>,
    sigma2: Option<f64>,
    lambda_: Option<f64>,
) -> PyResult<f64> {
    let spec = model(dist, p, kappa, sigma2, lambda_, None)?;
    distributions::radial_moments(&spec, order, draws, &mut RngStream::new(seed, 0)).map_err(err)
}

/// Runs a simulation campaign and returns the parsed summary document; the
/// per-replicate CSV is included under `"replicates_csv"` on request.
#[pyfunction]
#[pyo3(signature = (
    dist, grid, methods, seed, replicates=2500, kappa=None, sigma2=None, lambda_=None,
    alpha=0.05, bins=41, bin_range=(-4.0, 4.0), threads=0, include_replicates=false
))]
#[allow(clippy::too_many_arguments)]
fn run_simulation<'py>(
    py: Python<'py>,
    dist: &str,
    grid: Vec<(usize, usize)>,
    methods: Vec<String>,
    seed: u64,
    replicates: usize,
    kappa: Option<f64>,
    sigma2: Option<f64>,
    lambda_: Option<f64>,
    alpha: f64,
    bins: usize,
    bin_range: (f64, f64),
    threads: usize,
    include_replicates: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let config = SimulationConfig {
        model: model(dist, 3, kappa, sigma2, lambda_, None)?,
        grid,
        replicates,
        methods: methods.iter().map(|m| method(m)).collect::<PyResult<_>>()?,
        alpha,
        seed,
        bins,
        bin_range,
    };
    let result = py
        .detach(|| montecarlo::run_simulation_with_threads(&config, threads))
        .map_err(err)?;
    let summary = py
        .import("json")?
        .call_method1("loads", (result.summary_json(),))?;
    if include_replicates {
        summary.set_item("replicates_csv", result.replicates_csv())?;
    }
    Ok(summary)
}

#[pymodule(name = "hdwatson")]
fn hdwatson_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(watson_classical, m)?)?;
    m.add_function(wrap_pyfunction!(watson_modified, m)?)?;
    m.add_function(wrap_pyfunction!(sign_statistic, m)?)?;
    m.add_function(wrap_pyfunction!(spiked_statistic, m)?)?;
    m.add_function(wrap_pyfunction!(run_test, m)?)?;
    m.add_function(wrap_pyfunction!(normal_quantile, m)?)?;
    m.add_function(wrap_pyfunction!(chisquare_quantile, m)?)?;
    m.add_function(wrap_pyfunction!(normal_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(chisquare_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(ks_distance, m)?)?;
    m.add_function(wrap_pyfunction!(sample, m)?)?;
    m.add_function(wrap_pyfunction!(radial_moments, m)?)?;
    m.add_function(wrap_pyfunction!(run_simulation, m)?)?;
    Ok(())
}
