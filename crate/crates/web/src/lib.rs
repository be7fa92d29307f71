//! Browser bindings for the demo page in `www/`.
//!
//! Every export returns a JSON string. The `*_json` functions hold the
//! logic and are plain Rust so they can be tested natively.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use pendula_core::emit::{intervals_json, trace_svg};
use pendula_core::lame::{antiperiodic_eigenvalues, instability_interval, verdict};
use pendula_core::orbit::period;
use pendula_core::potential::{system_params, Potential};
use pendula_core::scan::{find_intervals, scan_trace, RunConfig};

const TOL: f64 = 1e-10;
const MAX_POINTS: usize = 2000;

fn text(v: Value) -> String {
    v.to_string()
}

/// Trace curve, detected intervals and an SVG plot for one scan.
pub fn scan_json(potential: &str, kappa: f64, e_min: f64, e_max: f64, points: usize) -> Result<String, String> {
    let pot: Potential = potential.parse().map_err(|e: pendula_core::Error| e.to_string())?;
    if points > MAX_POINTS {
        return Err(format!("at most {MAX_POINTS} points"));
    }
    let mut cfg = RunConfig::new(pot.clone(), kappa, e_min, e_max, points);
    cfg.tol = TOL;
    let samples = scan_trace(&cfg).map_err(|e| e.to_string())?;
    let intervals = find_intervals(&samples, &cfg).map_err(|e| e.to_string())?;
    let params = system_params(&pot, kappa).map_err(|e| e.to_string())?;
    Ok(text(json!({
        "samples": samples,
        "report": intervals_json(&intervals, &samples, &cfg),
        "params": params,
        "log_period": params.log_period(),
        "svg": trace_svg(&samples),
    })))
}

/// Closed-form pendulum verdict at one energy, with the band edges of
/// the underlying Lamé equation.
pub fn lame_json(kappa: f64, energy: f64) -> Result<String, String> {
    let v = verdict(kappa, energy).map_err(|e| e.to_string())?;
    let edges = antiperiodic_eigenvalues(v.params.n, v.params.k2).map_err(|e| e.to_string())?;
    Ok(text(json!({
        "verdict": v,
        "interval": instability_interval(kappa),
        "edges": edges,
    })))
}

/// Period of the synchronous rotation at each energy.
pub fn period_json(potential: &str, energies: &[f64]) -> Result<String, String> {
    let pot: Potential = potential.parse().map_err(|e: pendula_core::Error| e.to_string())?;
    let rows = energies
        .iter()
        .map(|&e| period(&pot, e, TOL).map_err(|err| err.to_string()))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(text(json!(rows)))
}

#[wasm_bindgen]
pub fn scan(potential: &str, kappa: f64, e_min: f64, e_max: f64, points: usize) -> Result<String, JsValue> {
    scan_json(potential, kappa, e_min, e_max, points).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn lame(kappa: f64, energy: f64) -> Result<String, JsValue> {
    lame_json(kappa, energy).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = periods)]
pub fn periods(potential: &str, energies: Vec<f64>) -> Result<String, JsValue> {
    period_json(potential, &energies).map_err(|e| JsValue::from_str(&e))
}
