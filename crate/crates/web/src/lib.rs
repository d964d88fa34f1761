//! WebAssembly bindings for the browser demo in `www/`.
//!
//! The work happens in [`demo`], which is plain Rust and tested natively; the
//! exported functions here only convert its errors into JavaScript ones.

pub mod demo;

use wasm_bindgen::prelude::*;

pub use demo::{Run, Sensing};

/// The bundled rectangle scenario, as TOML.
#[wasm_bindgen]
pub fn default_scenario() -> String {
    disk_formation::scenario::RECT4.to_string()
}

/// Simulates a scenario file with the page's gain, controller and horizon.
#[wasm_bindgen]
pub fn simulate(scenario: &str, gain: f64, controller: &str, t_final: f64) -> Result<Run, JsError> {
    demo::simulate(scenario, gain, controller, t_final).map_err(|e| JsError::new(&e))
}

/// Realizes the target and reports rank, rigidity and `b`.
#[wasm_bindgen]
pub fn check(scenario: &str) -> Result<String, JsError> {
    demo::check(scenario).map_err(|e| JsError::new(&e))
}

/// What robot `i` at `(xi, yi)` measures of robot `j` at `(xj, yj)`.
#[wasm_bindgen]
pub fn sense(
    xi: f64,
    yi: f64,
    xj: f64,
    yj: f64,
    radius: f64,
    d_star: f64,
) -> Result<Sensing, JsError> {
    demo::sense([xi, yi], [xj, yj], radius, d_star).map_err(|e| JsError::new(&e))
}
