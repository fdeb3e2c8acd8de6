//! Python bindings. Structured results cross the boundary as JSON-shaped
//! dicts and lists.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde_json::{json, Value};

use trimerlab::analysis;
use trimerlab::hyperangular::{channel_table, log_grid, TableOptions};
use trimerlab::hyperradial::{solve_bound_states, BoundOptions, PotentialSource, TailModel};
use trimerlab::model::{CutoffForm, ModelConfig};
use trimerlab::twobody::{solve_two_body, RadialDomain, TwoBodyOptions};
use trimerlab::Error;

fn config(alpha2: f64, cutoff: &str, r0: f64) -> trimerlab::Result<ModelConfig> {
    let c = ModelConfig::new(alpha2, cutoff.parse::<CutoffForm>()?).with_r0(r0);
    c.validate()?;
    Ok(c)
}

pub fn two_body_json(alpha2: f64, cutoff: &str, l: u32, n_levels: usize) -> trimerlab::Result<Value> {
    let lv = solve_two_body(&config(alpha2, cutoff, 1.0)?, l, n_levels, RadialDomain::default(), &TwoBodyOptions::default())?;
    Ok(json!(lv
        .levels
        .iter()
        .map(|x| json!({"v": x.v, "E": x.e, "R_mean": x.r_mean, "nodes": x.nodes}))
        .collect::<Vec<_>>()))
}

pub fn channels_json(alpha2: f64, cutoff: &str, r_min: f64, r_max: f64, per_decade: usize, n_channels: usize) -> trimerlab::Result<Value> {
    let grid = log_grid(r_min, r_max, per_decade)?;
    let opts = TableOptions {
        n_channels,
        ..Default::default()
    };
    let t = channel_table(&config(alpha2, cutoff, 1.0)?, &grid, &opts)?;
    let col = |f: &dyn Fn(&trimerlab::hyperangular::ChannelSample) -> &Vec<f64>| -> Vec<Vec<f64>> {
        t.samples.iter().map(|s| f(s).clone()).collect()
    };
    Ok(json!({
        "R": t.r_grid(),
        "U": col(&|s| &s.u),
        "Q": col(&|s| &s.q),
        "W": col(&|s| &s.w),
        "threshold": t.meta.threshold,
    }))
}

pub fn subcritical_ladder_json(beta: f64, delta: f64, wall: f64, n_max: usize) -> trimerlab::Result<Value> {
    let src = PotentialSource::model(TailModel::SubcriticalLog { beta, delta }, 1.0, Some(wall))?;
    let set = solve_bound_states(&src, n_max, &BoundOptions::default())?;
    Ok(serde_json::to_value(&set)?)
}

pub fn fit_json(form: &str, r: &[f64], w: &[f64], window: (f64, f64), r0: f64, threshold: Option<f64>) -> trimerlab::Result<Value> {
    let f = match form {
        "subcritical-log" => analysis::fit_subcritical_tail(r, w, window, r0)?,
        "supercritical-threshold" => analysis::fit_threshold_tail(r, w, threshold, window, r0)?,
        "fermion-log" => analysis::fit_fermion_tail(r, w, window, r0)?,
        o => return Err(Error::InvalidConfig(format!("unknown fit form '{o}'"))),
    };
    Ok(serde_json::to_value(&f)?)
}

fn to_py(e: Error) -> PyErr {
    match e.root() {
        Error::InvalidConfig(_) | Error::Precondition(_) | Error::OutOfRange { .. } | Error::IllConditioned(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn to_object<'py>(py: Python<'py>, v: Value) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(&v).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// (8/3) alpha2 + 5/12 - l(l+1)
#[pyfunction]
#[pyo3(signature = (alpha2, l = 0))]
fn alpha_eff2(alpha2: f64, l: u32) -> f64 {
    analysis::alpha_eff2(alpha2, l)
}

#[pyfunction]
fn alpha_d2(l: u32) -> f64 {
    analysis::alpha_d2(l)
}

/// (energy ratio, radius ratio) of a geometric ladder.
#[pyfunction]
fn geometric_ratios(alpha_eff: f64) -> PyResult<(f64, f64)> {
    analysis::geometric_ratios(alpha_eff).map_err(to_py)
}

#[pyfunction]
fn mass_ratio_map(alpha2: f64) -> PyResult<f64> {
    analysis::mass_ratio_map(alpha2).map_err(to_py)
}

#[pyfunction]
fn alpha2_from_mass_ratio(ratio: f64) -> PyResult<f64> {
    analysis::alpha2_from_mass_ratio(ratio).map_err(to_py)
}

#[pyfunction]
fn predict_spectrum<'py>(py: Python<'py>, beta: f64, r_mean0: f64, e0: f64, n_max: usize) -> PyResult<Bound<'py, PyAny>> {
    let p = analysis::predict_spectrum(beta, r_mean0, e0, n_max).map_err(to_py)?;
    to_object(py, serde_json::to_value(&p).map_err(|e| PyRuntimeError::new_err(e.to_string()))?)
}

#[pyfunction]
#[pyo3(signature = (alpha2, cutoff = "sech2", l = 0, n_levels = 1))]
fn two_body_levels<'py>(py: Python<'py>, alpha2: f64, cutoff: &str, l: u32, n_levels: usize) -> PyResult<Bound<'py, PyAny>> {
    to_object(py, two_body_json(alpha2, cutoff, l, n_levels).map_err(to_py)?)
}

#[pyfunction]
#[pyo3(signature = (alpha2, cutoff = "sech2", r_min = 10.0, r_max = 1e3, per_decade = 10, n_channels = 3))]
fn channels<'py>(
    py: Python<'py>,
    alpha2: f64,
    cutoff: &str,
    r_min: f64,
    r_max: f64,
    per_decade: usize,
    n_channels: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let v = py
        .detach(|| channels_json(alpha2, cutoff, r_min, r_max, per_decade, n_channels))
        .map_err(to_py)?;
    to_object(py, v)
}

/// Bound states of the logarithmic tail model with a hard wall.
#[pyfunction]
#[pyo3(signature = (beta, delta, wall = 100.0, n_max = 10))]
fn subcritical_ladder<'py>(py: Python<'py>, beta: f64, delta: f64, wall: f64, n_max: usize) -> PyResult<Bound<'py, PyAny>> {
    to_object(py, subcritical_ladder_json(beta, delta, wall, n_max).map_err(to_py)?)
}

#[pyfunction]
#[pyo3(signature = (form, r, w, window, r0 = 1.0, threshold = None))]
fn fit_tail<'py>(
    py: Python<'py>,
    form: &str,
    r: Vec<f64>,
    w: Vec<f64>,
    window: (f64, f64),
    r0: f64,
    threshold: Option<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    to_object(py, fit_json(form, &r, &w, window, r0, threshold).map_err(to_py)?)
}

#[pymodule]
fn trimerlab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_function(wrap_pyfunction!(alpha_eff2, m)?)?;
    m.add_function(wrap_pyfunction!(alpha_d2, m)?)?;
    m.add_function(wrap_pyfunction!(geometric_ratios, m)?)?;
    m.add_function(wrap_pyfunction!(mass_ratio_map, m)?)?;
    m.add_function(wrap_pyfunction!(alpha2_from_mass_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(predict_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(two_body_levels, m)?)?;
    m.add_function(wrap_pyfunction!(channels, m)?)?;
    m.add_function(wrap_pyfunction!(subcritical_ladder, m)?)?;
    m.add_function(wrap_pyfunction!(fit_tail, m)?)?;
    Ok(())
}
