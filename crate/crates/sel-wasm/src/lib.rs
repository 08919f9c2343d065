//! Browser bindings: classify a quad, and solve the scalar problem or the
//! system on `(0, 1)`. Results come back as JSON strings.

use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;
use wasm_bindgen::prelude::*;

use sel_core::classifier::{self, ExponentQuad};
use sel_core::geometry::{build_grid, Domain, Grading, Grid, GridFunction};
use sel_core::operators::OperatorSpec;
use sel_core::rates::{fit_rate, RateSpec};
use sel_core::scalar_solver::{solve_scalar_singular, SolverOptions, WeightSpec};
use sel_core::system_solver::{solve_system, PicardOptions};

const MAX_NODES: usize = 1200;

#[derive(Debug, Error)]
pub enum DemoError {
    #[error("n must lie in [20, {MAX_NODES}], got {0}")]
    Nodes(usize),
    #[error("{0}")]
    Core(String),
}

impl From<DemoError> for JsValue {
    fn from(e: DemoError) -> Self {
        JsValue::from_str(&e.to_string())
    }
}

fn core<E: std::fmt::Display>(e: E) -> DemoError {
    DemoError::Core(e.to_string())
}

fn json<T: Serialize>(v: &T) -> Result<String, DemoError> {
    serde_json::to_string(v).map_err(core)
}

fn line(n: usize) -> Result<Arc<Grid>, DemoError> {
    if !(20..=MAX_NODES).contains(&n) {
        return Err(DemoError::Nodes(n));
    }
    let d = Domain::interval(0.0, 1.0).map_err(core)?;
    build_grid(d, n, Grading::BoundaryGraded { strength: 3.0 }).map(Arc::new).map_err(core)
}

#[derive(Serialize)]
struct Profile {
    x: Vec<f64>,
    delta: Vec<f64>,
    value: Vec<f64>,
    predicted: Option<RateSpec>,
    fitted_power: Option<f64>,
    fitted_logpow: Option<f64>,
}

fn profile(u: &GridFunction, predicted: Option<RateSpec>) -> Profile {
    let g = u.grid();
    let fit = predicted.as_ref().and_then(|p| fit_rate(u, p, None).ok());
    Profile {
        x: g.coords().iter().map(|c| c[0]).collect(),
        delta: g.delta().to_vec(),
        value: u.values().to_vec(),
        predicted,
        fitted_power: fit.as_ref().map(|f| f.fitted_power),
        fitted_logpow: fit.as_ref().map(|f| f.fitted_logpow),
    }
}

/// Regime report for `(p, q, r, s)`.
#[wasm_bindgen]
pub fn classify(p: f64, q: f64, r: f64, s: f64) -> Result<String, JsValue> {
    let quad = ExponentQuad::new(p, q, r, s).map_err(core)?;
    Ok(json(&classifier::classify(&quad))?)
}

/// `-u'' = delta^-q u^-p` on `(0, 1)`.
#[wasm_bindgen]
pub fn solve_scalar(p: f64, q: f64, n: usize) -> Result<String, JsValue> {
    let g = line(n)?;
    let w = WeightSpec::power(q);
    let opts = SolverOptions { refinement_check: None, ..SolverOptions::default() };
    let res = solve_scalar_singular(&OperatorSpec::laplacian(), &g, p, &w, &opts).map_err(core)?;
    let predicted = classifier::predicted_rate(p, q, 1.0).ok();
    Ok(json(&profile(&res.u, predicted))?)
}

#[derive(Serialize)]
struct SystemProfile {
    subcase: String,
    iterations: usize,
    in_cone: bool,
    u: Profile,
    v: Profile,
}

/// The coupled system on `(0, 1)` by Picard iteration.
#[wasm_bindgen]
pub fn solve_pair(p: f64, q: f64, r: f64, s: f64, n: usize) -> Result<String, JsValue> {
    let quad = ExponentQuad::new(p, q, r, s).map_err(core)?;
    let g = line(n)?;
    let res = solve_system(&OperatorSpec::laplacian(), &g, &quad, &PicardOptions::default()).map_err(core)?;
    let report = classifier::classify(&quad);
    let out = SystemProfile {
        subcase: res.cone.subcase.to_string(),
        iterations: res.picard_iterations,
        in_cone: res.all_in_cone(),
        u: profile(&res.u, report.rate_u),
        v: profile(&res.v, report.rate_v),
    };
    Ok(json(&out)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classify_round_trips_through_json() {
        let text = classify(0.25, 0.25, 0.25, 0.25).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["subcase"], "III");
    }

    #[test]
    fn scalar_profile_has_one_value_per_node() {
        let text = solve_scalar(0.2, 0.3, 100).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["value"].as_array().unwrap().len(), 100);
        assert_eq!(v["predicted"]["model"], "linear");
    }

    #[test]
    fn pair_solve_reports_the_cone() {
        let text = solve_pair(0.1, 0.3, 1.2, 0.2, 100).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["subcase"], "I");
        assert_eq!(v["in_cone"], true);
    }

    #[test]
    fn node_count_is_bounded() {
        assert!(line(5).is_err());
        assert!(line(MAX_NODES + 1).is_err());
    }
}
