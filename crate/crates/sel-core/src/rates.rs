//! Boundary asymptotics of computed solutions: regression fits against the
//! rate models, comparison with predictions, and the normal-derivative probe.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Grid, GridFunction};

/// Smallest number of nodes a fitting layer may hold.
pub const MIN_LAYER_POINTS: usize = 8;

/// Quotient growth across the probe sequence above which `u / delta` is
/// declared divergent.
pub const PROBE_GROWTH_LIMIT: f64 = 2.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RateError {
    #[error("fitting layer [{lo:e}, {hi:e}] holds {points} nodes, need at least {MIN_LAYER_POINTS}")]
    Layer { lo: f64, hi: f64, points: usize },
    #[error("u is not positive at layer node {node}")]
    NonPositive { node: usize },
    #[error("log scale A = {scale_a} too small for the layer (needs log(A / delta) > {need})")]
    Scale { scale_a: f64, need: f64 },
    #[error("invalid rate spec: {0}")]
    Spec(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateModel {
    /// `delta`
    Linear,
    /// `delta * log^logpow(A / delta)`
    LinearLogpow,
    /// `delta^power`
    Power,
    /// `log^logpow(A / delta)`
    PowerOfLog,
    /// `delta * log(log(A / delta))`
    Loglog,
}

impl RateModel {
    pub fn name(&self) -> &'static str {
        match self {
            RateModel::Linear => "linear",
            RateModel::LinearLogpow => "linear_logpow",
            RateModel::Power => "power",
            RateModel::PowerOfLog => "power_of_log",
            RateModel::Loglog => "loglog",
        }
    }

    pub fn uses_log(&self) -> bool {
        matches!(self, RateModel::LinearLogpow | RateModel::PowerOfLog | RateModel::Loglog)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateSpec {
    pub model: RateModel,
    pub power: f64,
    pub logpow: f64,
    #[serde(rename = "scale_A")]
    pub scale_a: f64,
}

impl RateSpec {
    pub fn linear() -> Self {
        RateSpec { model: RateModel::Linear, power: 1.0, logpow: 0.0, scale_a: 0.0 }
    }

    pub fn linear_logpow(logpow: f64, scale_a: f64) -> Self {
        RateSpec { model: RateModel::LinearLogpow, power: 1.0, logpow, scale_a }
    }

    pub fn power(power: f64) -> Self {
        RateSpec { model: RateModel::Power, power, logpow: 0.0, scale_a: 0.0 }
    }

    pub fn power_of_log(logpow: f64, scale_a: f64) -> Self {
        RateSpec { model: RateModel::PowerOfLog, power: 0.0, logpow, scale_a }
    }

    pub fn loglog(scale_a: f64) -> Self {
        RateSpec { model: RateModel::Loglog, power: 1.0, logpow: 1.0, scale_a }
    }

    /// Model value at distance `d`.
    pub fn eval(&self, d: f64) -> f64 {
        match self.model {
            RateModel::Linear => d,
            RateModel::Power => d.powf(self.power),
            RateModel::LinearLogpow => d * (self.scale_a / d).ln().powf(self.logpow),
            RateModel::PowerOfLog => (self.scale_a / d).ln().powf(self.logpow),
            RateModel::Loglog => d * (self.scale_a / d).ln().ln(),
        }
    }

    /// Whether the profile vanishes slower than `delta` at the boundary.
    pub fn is_sublinear(&self) -> bool {
        match self.model {
            RateModel::Linear => false,
            RateModel::Power => self.power < 1.0,
            RateModel::LinearLogpow => self.logpow > 0.0,
            RateModel::PowerOfLog | RateModel::Loglog => true,
        }
    }

    pub fn validate(&self) -> Result<(), RateError> {
        let finite = |v: f64| v.is_finite();
        match self.model {
            RateModel::Power if !(self.power > 0.0 && self.power <= 1.0) => {
                Err(RateError::Spec(format!("power model needs power in (0, 1], got {}", self.power)))
            }
            m if m.uses_log() && !(self.scale_a > 0.0 && finite(self.scale_a)) => {
                Err(RateError::Spec(format!("{} model needs a positive scale A", m.name())))
            }
            _ if !finite(self.logpow) => Err(RateError::Spec("log power must be finite".into())),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RateFit {
    pub model: RateModel,
    pub fitted_power: f64,
    pub fitted_logpow: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub layer: (f64, f64),
    pub n_points: usize,
}

impl RateFit {
    /// The fitted profile vanishes slower than `delta` by more than `tol`.
    pub fn is_sublinear(&self, tol: f64) -> bool {
        match self.model {
            RateModel::Linear | RateModel::Power => self.fitted_power < 1.0 - tol,
            RateModel::LinearLogpow | RateModel::Loglog => self.fitted_logpow > tol,
            RateModel::PowerOfLog => true,
        }
    }
}

/// `[lo, hi]` for `model`: `lo` skips the two boundary-adjacent cells, `hi` is
/// `0.1 max delta`, or `1e-3 max delta` for log-corrected models when that
/// still leaves enough nodes.
pub fn default_layer(grid: &Grid, model: RateModel) -> (f64, f64) {
    let levels = grid.delta_levels();
    let lo = levels.get(2).or(levels.last()).copied().unwrap_or(0.0);
    let dmax = grid.max_delta();
    if model.uses_log() {
        let deep = 1e-3 * dmax;
        let count = grid.interior_nodes().into_iter().filter(|&i| (lo..=deep).contains(&grid.delta()[i])).count();
        if count >= MIN_LAYER_POINTS {
            return (lo, deep);
        }
    }
    (lo, 0.1 * dmax)
}

struct Regression {
    slope: f64,
    intercept: f64,
    r_squared: f64,
}

fn regress(xs: &[f64], ys: &[f64]) -> Regression {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let ss_res: f64 = xs.iter().zip(ys).map(|(x, y)| (y - my - slope * (x - mx)).powi(2)).sum();
    let r_squared = if syy > 0.0 { (1.0 - ss_res / syy).clamp(0.0, 1.0) } else { 1.0 };
    Regression { slope, intercept: my - slope * mx, r_squared }
}

/// Regression of `log u` in the model's log coordinates over `layer`
/// (default from [`default_layer`]). Log-corrected models are fitted in two
/// stages: the power is fixed at `model.power` and only the log exponent is fitted.
pub fn fit_rate(u: &GridFunction, model: &RateSpec, layer: Option<(f64, f64)>) -> Result<RateFit, RateError> {
    model.validate()?;
    let grid = u.grid();
    let (lo, hi) = layer.unwrap_or_else(|| default_layer(grid, model.model));
    let nodes: Vec<usize> = grid.interior_nodes().into_iter().filter(|&i| (lo..=hi).contains(&grid.delta()[i])).collect();
    if nodes.len() < MIN_LAYER_POINTS {
        return Err(RateError::Layer { lo, hi, points: nodes.len() });
    }
    if let Some(&i) = nodes.iter().find(|&&i| !(u.values()[i] > 0.0)) {
        return Err(RateError::NonPositive { node: i });
    }
    let log_of = |d: f64, need: f64| -> Result<f64, RateError> {
        let l = (model.scale_a / d).ln();
        if l > need {
            Ok(l)
        } else {
            Err(RateError::Scale { scale_a: model.scale_a, need })
        }
    };
    let mut xs = Vec::with_capacity(nodes.len());
    let mut ys = Vec::with_capacity(nodes.len());
    for &i in &nodes {
        let d = grid.delta()[i];
        let lu = u.values()[i].ln();
        let (x, y) = match model.model {
            RateModel::Linear | RateModel::Power => (d.ln(), lu),
            RateModel::LinearLogpow => (log_of(d, 0.0)?.ln(), lu - model.power * d.ln()),
            RateModel::PowerOfLog => (log_of(d, 0.0)?.ln(), lu),
            RateModel::Loglog => (log_of(d, 1.0)?.ln().ln(), lu - d.ln()),
        };
        xs.push(x);
        ys.push(y);
    }
    let r = regress(&xs, &ys);
    let (fitted_power, fitted_logpow) = match model.model {
        RateModel::Linear | RateModel::Power => (r.slope, 0.0),
        RateModel::LinearLogpow => (model.power, r.slope),
        RateModel::PowerOfLog => (0.0, r.slope),
        RateModel::Loglog => (1.0, r.slope),
    };
    Ok(RateFit {
        model: model.model,
        fitted_power,
        fitted_logpow,
        intercept: r.intercept,
        r_squared: r.r_squared,
        layer: (lo, hi),
        n_points: nodes.len(),
    })
}

/// Minimum coefficient of determination for a passing comparison.
pub const MIN_R_SQUARED: f64 = 0.99;

#[derive(Debug, Clone, Serialize)]
pub struct RateComparison {
    pub pass: bool,
    pub model_match: bool,
    pub d_power: f64,
    pub d_logpow: f64,
    pub r_squared: f64,
    pub diagnostic: Option<String>,
}

pub fn compare(fit: &RateFit, predicted: &RateSpec, tol_power: f64, tol_logpow: f64) -> RateComparison {
    let model_match = fit.model == predicted.model;
    let d_power = fit.fitted_power - predicted.power;
    let d_logpow = fit.fitted_logpow - predicted.logpow;
    let mut why = Vec::new();
    if !model_match {
        why.push(format!("model mismatch: fitted {} against predicted {}", fit.model.name(), predicted.model.name()));
    }
    if d_power.abs() > tol_power {
        why.push(format!("power off by {d_power:+.4} (tol {tol_power})"));
    }
    if d_logpow.abs() > tol_logpow {
        why.push(format!("log power off by {d_logpow:+.4} (tol {tol_logpow})"));
    }
    if !(fit.r_squared >= MIN_R_SQUARED) {
        why.push(format!("R^2 = {:.5} below {MIN_R_SQUARED}", fit.r_squared));
    }
    RateComparison {
        pass: why.is_empty(),
        model_match,
        d_power,
        d_logpow,
        r_squared: fit.r_squared,
        diagnostic: if why.is_empty() { None } else { Some(why.join("; ")) },
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NormalProbe {
    pub finite: bool,
    /// Quotient closest to the boundary.
    pub magnitude: f64,
    /// First over last quotient of the sequence.
    pub growth: f64,
    /// `(t, u(x0 + t n) / t)` from the interior toward the boundary.
    pub quotients: Vec<(f64, f64)>,
}

/// Difference quotients `u(x0 + t n) / t` along the grid's normal ray for
/// dyadic `t` from `0.1 max delta` down to the layer floor, interpolating
/// linearly in `delta` between ray nodes.
pub fn normal_derivative_probe(u: &GridFunction) -> Result<NormalProbe, RateError> {
    let grid = u.grid();
    let (lo, _) = default_layer(grid, RateModel::Linear);
    let hi = 0.1 * grid.max_delta();
    let ray: Vec<(f64, f64)> = grid.normal_ray().into_iter().map(|i| (grid.delta()[i], u.values()[i])).collect();
    let mut ts = Vec::new();
    let mut t = hi;
    while t >= lo {
        ts.push(t);
        t *= 0.5;
    }
    if ts.len() < 2 {
        return Err(RateError::Layer { lo, hi, points: ts.len() });
    }
    let interp = |t: f64| -> Option<f64> {
        ray.windows(2).find(|w| w[0].0 <= t && t <= w[1].0).map(|w| {
            let (d0, u0) = w[0];
            let (d1, u1) = w[1];
            if d1 > d0 {
                u0 + (u1 - u0) * (t - d0) / (d1 - d0)
            } else {
                u0
            }
        })
    };
    let mut quotients = Vec::with_capacity(ts.len());
    for t in ts {
        let v = interp(t).ok_or(RateError::Layer { lo, hi, points: ray.len() })?;
        if !(v > 0.0) {
            return Err(RateError::NonPositive { node: 0 });
        }
        quotients.push((t, v / t));
    }
    let first = quotients[0].1;
    let last = quotients[quotients.len() - 1].1;
    let growth = last / first;
    Ok(NormalProbe { finite: growth <= PROBE_GROWTH_LIMIT, magnitude: last, growth, quotients })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_grid, Domain, Grading};
    use std::sync::Arc;

    fn grid() -> Arc<Grid> {
        Arc::new(build_grid(Domain::interval(0.0, 1.0).unwrap(), 801, Grading::BoundaryGraded { strength: 2.0 }).unwrap())
    }

    #[test]
    fn synthetic_power() {
        let g = grid();
        let u = GridFunction::from_fn(&g, |_, d| d.powf(0.6));
        let f = fit_rate(&u, &RateSpec::power(0.6), None).unwrap();
        assert!((f.fitted_power - 0.6).abs() < 1e-10 && f.r_squared > 1.0 - 1e-12);
        assert!(compare(&f, &RateSpec::power(0.6), 0.01, 0.01).pass);
    }

    #[test]
    fn synthetic_logpow() {
        let g = grid();
        let spec = RateSpec::linear_logpow(2.0 / 3.0, 2.0);
        let u = GridFunction::from_fn(&g, |_, d| spec.eval(d));
        let f = fit_rate(&u, &spec, None).unwrap();
        assert!((f.fitted_logpow - 2.0 / 3.0).abs() < 0.02);
    }

    #[test]
    fn mismatch_fails() {
        let g = grid();
        let u = GridFunction::from_fn(&g, |_, d| d);
        let f = fit_rate(&u, &RateSpec::linear(), None).unwrap();
        let c = compare(&f, &RateSpec::power(0.375), 0.05, 0.05);
        assert!(!c.pass && !c.model_match && c.diagnostic.is_some());
    }

    #[test]
    fn probe_separates() {
        let g = grid();
        let lin = normal_derivative_probe(&GridFunction::from_fn(&g, |_, d| d)).unwrap();
        assert!(lin.finite && (lin.magnitude - 1.0).abs() < 1e-9);
        let half = normal_derivative_probe(&GridFunction::from_fn(&g, |_, d| d.sqrt())).unwrap();
        assert!(!half.finite);
    }

    #[test]
    fn layer_too_thin() {
        let g = Arc::new(build_grid(Domain::interval(0.0, 1.0).unwrap(), 12, Grading::Uniform).unwrap());
        let u = GridFunction::from_fn(&g, |_, d| d);
        assert!(matches!(fit_rate(&u, &RateSpec::linear(), None), Err(RateError::Layer { .. })));
    }
}
