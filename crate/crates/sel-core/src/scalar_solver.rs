//! The singular scalar Dirichlet problem `F(D^2 u, Du, u, x) = k(delta) u^(-p)`,
//! `u = 0` on the boundary.
//!
//! Solves go through a regularized family `k (u + eps)^(-p)` with a geometric
//! schedule for `eps`, ending with an exact `eps = 0` solve. Each level is a
//! damped Newton iteration in which the Pucci operator is linearized by its
//! active coefficient matrix (policy iteration).

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::barrier::{self, BarrierError, Side};
use crate::eigensolver;
use crate::geometry::{build_grid, Domain, GeometryError, Grid, GridFunction, Layout, MIN_NODES};
use crate::linalg::{LinalgError, SparseRows};
use crate::operators::{Discretization, OperatorError, OperatorSpec};
use crate::quad;

#[derive(Debug, Error, Clone)]
pub enum ScalarError {
    #[error("invalid weight: {0}")]
    Weight(String),
    #[error("invalid solver option: {0}")]
    Options(String),
    #[error("Newton iteration did not converge at eps = {eps:e} after {iterations} iterations (scaled residual {residual:e})")]
    NewtonDivergence { eps: f64, iterations: usize, residual: f64, last: Box<GridFunction> },
    #[error("positivity breach at node {node} (eps = {eps:e}): the iterate is driven to zero")]
    PositivityBreach { node: usize, eps: f64, last: Box<GridFunction> },
    #[error("solution does not settle under refinement: sup-norm changes by {rel_change:.3} between n = {n_coarse} and n = {n}")]
    RefinementDivergence { rel_change: f64, n_coarse: usize, n: usize, last: Box<GridFunction> },
    #[error("load is not integrable at the boundary: {0}")]
    UnboundedLoad(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Grid(#[from] GeometryError),
    #[error(transparent)]
    Barrier(#[from] BarrierError),
}

impl ScalarError {
    /// Failures that point at a missing solution rather than at bad input.
    pub fn is_nonexistence_signal(&self) -> bool {
        matches!(
            self,
            ScalarError::NewtonDivergence { .. }
                | ScalarError::PositivityBreach { .. }
                | ScalarError::RefinementDivergence { .. }
                | ScalarError::UnboundedLoad(_)
        )
    }

    /// Last iterate carried by a solver failure.
    pub fn partial(&self) -> Option<&GridFunction> {
        match self {
            ScalarError::NewtonDivergence { last, .. }
            | ScalarError::PositivityBreach { last, .. }
            | ScalarError::RefinementDivergence { last, .. } => Some(last),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightForm {
    /// `delta^(-q)`
    Power,
    /// `delta^(-q) log^(-a)(A / delta)`
    PowerLog,
    /// `delta^(-1) log^(-1)(A / delta)`
    LoglogFree,
}

/// Boundary weight `k(delta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightSpec {
    pub form: WeightForm,
    #[serde(default)]
    pub q_w: f64,
    #[serde(default)]
    pub a_w: f64,
    #[serde(default = "default_scale")]
    pub scale_a: f64,
}

fn default_scale() -> f64 {
    f64::INFINITY
}

impl WeightSpec {
    pub fn power(q: f64) -> Self {
        WeightSpec { form: WeightForm::Power, q_w: q, a_w: 0.0, scale_a: f64::INFINITY }
    }

    pub fn constant() -> Self {
        Self::power(0.0)
    }

    pub fn power_log(q: f64, a: f64, scale_a: f64) -> Self {
        WeightSpec { form: WeightForm::PowerLog, q_w: q, a_w: a, scale_a }
    }

    pub fn loglog_free(scale_a: f64) -> Self {
        WeightSpec { form: WeightForm::LoglogFree, q_w: 1.0, a_w: 1.0, scale_a }
    }

    /// `(q, a)` of the equivalent power-log weight.
    pub fn exponents(&self) -> (f64, f64) {
        match self.form {
            WeightForm::Power => (self.q_w, 0.0),
            WeightForm::PowerLog => (self.q_w, self.a_w),
            WeightForm::LoglogFree => (1.0, 1.0),
        }
    }

    pub fn uses_scale(&self) -> bool {
        self.form != WeightForm::Power
    }

    pub fn validate(&self, domain: &Domain) -> Result<(), ScalarError> {
        let (q, a) = self.exponents();
        if !q.is_finite() || !a.is_finite() {
            return Err(ScalarError::Weight("exponents must be finite".into()));
        }
        if q < 0.0 {
            return Err(ScalarError::Weight(format!("q_w must be >= 0, got {q}")));
        }
        if self.uses_scale() && !(self.scale_a > domain.diameter() && self.scale_a.is_finite()) {
            return Err(ScalarError::Weight(format!(
                "log-weighted forms need a finite scale_a above diam = {}, got {}",
                domain.diameter(),
                self.scale_a
            )));
        }
        Ok(())
    }

    pub fn eval(&self, delta: f64) -> f64 {
        if delta <= 0.0 {
            return f64::INFINITY;
        }
        let (q, a) = self.exponents();
        let mut k = delta.powf(-q);
        if self.uses_scale() && a != 0.0 {
            k *= (self.scale_a / delta).ln().powf(-a);
        }
        k
    }

    /// `M(d) = int_0^d t k(t) dt`, or `None` when it diverges.
    pub fn moment(&self, d: f64) -> Option<f64> {
        let (q, a) = self.exponents();
        if q > 2.0 {
            return None;
        }
        if !self.uses_scale() || a == 0.0 {
            return if q < 2.0 { Some(d.powf(2.0 - q) / (2.0 - q)) } else { None };
        }
        let l = (self.scale_a / d).ln();
        if q == 2.0 {
            // int_l^inf s^(-a) ds
            return if a > 1.0 { Some(l.powf(1.0 - a) / (a - 1.0)) } else { None };
        }
        // t = d e^(-s): d^(2-q) int_0^inf e^(-(2-q) s) (l + s)^(-a) ds
        let rate = 2.0 - q;
        let span = 60.0 / rate;
        let v = quad::integrate(|s| (-rate * s).exp() * (l + s).powf(-a), 0.0, span, 60);
        Some(d.powf(2.0 - q) * v)
    }
}

/// How the weight enters the discrete load.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoadRule {
    /// `k(delta_i)` at the node.
    #[default]
    Collocation,
    /// Hat-function average of `k(delta)` over the node's dual cell (intervals only).
    Galerkin,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialGuess {
    /// `H(c phi)` from the barrier ODE and the principal eigenfunction, falling
    /// back to the scaled distance when the barrier cannot be built.
    #[default]
    Barrier,
    ScaledDistance,
    Flat,
    Given(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOptions {
    pub tol: f64,
    /// Newton iterations per continuation level.
    pub max_iter: usize,
    /// First regularization level; `0` solves the singular problem directly.
    pub eps0: f64,
    pub eps_ratio: f64,
    pub eps_min: f64,
    /// Relative sup-norm change tolerated between `n` and roughly `n / 2`.
    pub refinement_check: Option<f64>,
    pub load_rule: LoadRule,
    pub initial: InitialGuess,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-10,
            max_iter: 100,
            eps0: 1.0,
            eps_ratio: 0.25,
            eps_min: 1e-10,
            refinement_check: Some(0.05),
            load_rule: LoadRule::Collocation,
            initial: InitialGuess::Barrier,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<(), ScalarError> {
        if !(self.tol > 0.0) {
            return Err(ScalarError::Options(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(ScalarError::Options("max_iter must be positive".into()));
        }
        if !(self.eps0 >= 0.0) || !(self.eps_min > 0.0) || !(self.eps_ratio > 0.0 && self.eps_ratio < 1.0) {
            return Err(ScalarError::Options("eps schedule needs eps0 >= 0, eps_min > 0, 0 < eps_ratio < 1".into()));
        }
        if let Some(t) = self.refinement_check {
            if !(t > 0.0) {
                return Err(ScalarError::Options(format!("refinement threshold must be positive, got {t}")));
            }
        }
        Ok(())
    }

    fn schedule(&self, p: f64) -> Vec<f64> {
        let mut path = Vec::new();
        if p > 0.0 && self.eps0 > 0.0 {
            let mut e = self.eps0;
            while e > self.eps_min {
                path.push(e);
                e *= self.eps_ratio;
            }
        }
        path.push(0.0);
        path
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub u: GridFunction,
    pub iterations: usize,
    pub final_residual: f64,
    pub epsilon_path: Vec<f64>,
    pub converged: bool,
    pub initial_guess: String,
    /// Solutions never decreased as `eps` shrank.
    pub eps_monotone: bool,
    pub refinement_change: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveSummary {
    pub iterations: usize,
    pub final_residual: f64,
    pub epsilon_path: Vec<f64>,
    pub converged: bool,
    pub initial_guess: String,
    pub eps_monotone: bool,
    pub refinement_change: Option<f64>,
    pub sup_norm: f64,
}

impl SolveResult {
    pub fn summary(&self) -> SolveSummary {
        SolveSummary {
            iterations: self.iterations,
            final_residual: self.final_residual,
            epsilon_path: self.epsilon_path.clone(),
            converged: self.converged,
            initial_guess: self.initial_guess.clone(),
            eps_monotone: self.eps_monotone,
            refinement_change: self.refinement_change,
            sup_norm: self.u.sup_norm(),
        }
    }
}

/// Discrete load `k` at every unknown of `disc`.
pub fn weight_loads(disc: &Discretization, weight: &WeightSpec, rule: LoadRule) -> Result<Vec<f64>, ScalarError> {
    let grid = disc.grid();
    weight.validate(grid.domain())?;
    match rule {
        LoadRule::Collocation => Ok((0..disc.unknowns()).map(|k| weight.eval(grid.delta()[disc.node(k)])).collect()),
        LoadRule::Galerkin => galerkin_loads(disc, weight),
    }
}

/// `int g(d) k(d) dd` over `[d0, d1]` (`d0 > 0`) for linear `g = c0 + c1 d`,
/// by Gauss-Legendre in `ln d`.
fn piece_integral(weight: &WeightSpec, d0: f64, d1: f64, c0: f64, c1: f64) -> f64 {
    let (l0, l1) = (d0.ln(), d1.ln());
    quad::integrate(
        |s| {
            let d = s.exp();
            (c0 + c1 * d) * weight.eval(d) * d
        },
        l0,
        l1,
        2,
    )
}

fn galerkin_loads(disc: &Discretization, weight: &WeightSpec) -> Result<Vec<f64>, ScalarError> {
    let grid = disc.grid();
    let x = match grid.layout() {
        Layout::Line { x } => x,
        _ => return Err(ScalarError::Weight("Galerkin loads are implemented on intervals only".into())),
    };
    let n = x.len();
    let len = x.from_lo[n - 1];
    let half = 0.5 * len;
    // contributions of cell j = [x_j, x_{j+1}] to the hats of its two nodes
    let mut left_hat = vec![0.0; n - 1]; // hat of node j+1 (rising)
    let mut right_hat = vec![0.0; n - 1]; // hat of node j (falling)
    for j in 0..n - 1 {
        let h = x.gap(j);
        if j == 0 {
            left_hat[j] = weight
                .moment(h)
                .ok_or_else(|| ScalarError::UnboundedLoad(format!("int_0 t k(t) dt diverges for {weight:?}")))?
                / h;
            continue;
        }
        if j == n - 2 {
            right_hat[j] = weight
                .moment(h)
                .ok_or_else(|| ScalarError::UnboundedLoad(format!("int_0 t k(t) dt diverges for {weight:?}")))?
                / h;
            continue;
        }
        let (lo_j, lo_j1) = (x.from_lo[j], x.from_lo[j + 1]);
        let (hi_j, hi_j1) = (x.from_hi[j], x.from_hi[j + 1]);
        if lo_j1 <= half * (1.0 + 1e-15) {
            // left half: d = x - a, x - x_j = d - lo_j, x_{j+1} - x = lo_j1 - d
            left_hat[j] = piece_integral(weight, lo_j, lo_j1, -lo_j, 1.0) / h;
            right_hat[j] = piece_integral(weight, lo_j, lo_j1, lo_j1, -1.0) / h;
        } else if hi_j <= half * (1.0 + 1e-15) {
            // right half: d = b - x, x - x_j = hi_j - d, x_{j+1} - x = d - hi_j1
            left_hat[j] = piece_integral(weight, hi_j1, hi_j, hi_j, -1.0) / h;
            right_hat[j] = piece_integral(weight, hi_j1, hi_j, -hi_j1, 1.0) / h;
        } else {
            // the cell straddles the midpoint
            let a = piece_integral(weight, lo_j, half, -lo_j, 1.0) + piece_integral(weight, hi_j1, half, h + hi_j1, -1.0);
            let b = piece_integral(weight, lo_j, half, h + lo_j, -1.0) + piece_integral(weight, hi_j1, half, -hi_j1, 1.0);
            left_hat[j] = a / h;
            right_hat[j] = b / h;
        }
    }
    Ok((0..disc.unknowns())
        .map(|k| {
            let i = disc.node(k);
            let w = 0.5 * (x.gap(i - 1) + x.gap(i));
            (left_hat[i - 1] + right_hat[i]) / w
        })
        .collect())
}

/// Componentwise backward error `|R_k| / (sum_j |J_kj| |x_j| + |g_k|)` of
/// `R = F(x) - g` with `g = load (x + eps)^(-p)`; its round-off floor stays
/// near machine precision on strongly graded grids.
fn scaled_residual(fv: &[f64], scale: &[f64], load: &[f64], x: &[f64], p: f64, eps: f64) -> (f64, Vec<f64>) {
    let mut worst: f64 = 0.0;
    let mut r = Vec::with_capacity(x.len());
    for k in 0..x.len() {
        let g = load[k] * (x[k] + eps).powf(-p);
        let rk = fv[k] - g;
        worst = worst.max(rk.abs() / (scale[k] + g.abs() + f64::MIN_POSITIVE));
        r.push(rk);
    }
    if worst.is_nan() {
        worst = f64::INFINITY;
    }
    (worst, r)
}

fn operator_scale(jac: &SparseRows, x: &[f64]) -> Vec<f64> {
    (0..x.len()).map(|k| jac.row(k).iter().map(|&(c, v)| v.abs() * x[c].abs()).sum()).collect()
}

const STEP_FLOOR: f64 = 1.0 / 1_048_576.0;
const TO_BOUNDARY: f64 = 0.9;

/// Damped Newton for `F(x) = load (x + eps)^(-p)` over the unknowns of `disc`.
/// Returns the iteration count and final scaled residual.
pub(crate) fn newton(
    disc: &Discretization,
    load: &[f64],
    p: f64,
    eps: f64,
    x: &mut Vec<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<(usize, f64), ScalarError> {
    let n = disc.unknowns();
    let fail_last = |x: &[f64]| Box::new(GridFunction::new(disc.grid(), disc.expand(x)).expect("grid length"));
    let mut last_res = f64::INFINITY;
    for it in 0..=max_iter {
        let u = disc.expand(x);
        let (fv, jac) = disc.linearize(&u);
        let (res, r) = scaled_residual(&fv, &operator_scale(&jac, x), load, x, p, eps);
        last_res = res;
        if res < tol {
            return Ok((it, res));
        }
        if it == max_iter {
            break;
        }
        let mut full = jac.clone();
        if p > 0.0 {
            for k in 0..n {
                full.add(k, k, p * load[k] * (x[k] + eps).powf(-p - 1.0));
            }
        }
        let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        let d = full.solve(&rhs)?;
        // a correction at round-off level means the residual cannot drop further
        let rel = d.iter().zip(x.iter()).fold(0.0f64, |m, (a, b)| m.max(a.abs() / (b.abs() + eps)));
        if rel <= 1e-13 {
            return Ok((it, res));
        }
        let mut tau_pos: f64 = 1.0;
        let mut limiting = 0;
        if p > 0.0 {
            for k in 0..n {
                if d[k] < 0.0 {
                    let t = TO_BOUNDARY * (x[k] + eps) / -d[k];
                    if t < tau_pos {
                        tau_pos = t;
                        limiting = k;
                    }
                }
            }
        }
        if tau_pos < STEP_FLOOR {
            return Err(ScalarError::PositivityBreach { node: disc.node(limiting), eps, last: fail_last(x) });
        }
        let mut tau = tau_pos;
        loop {
            let xn: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + tau * b).collect();
            let fvn = disc.apply(&disc.expand(&xn));
            let (resn, _) = scaled_residual(&fvn, &operator_scale(&jac, &xn), load, &xn, p, eps);
            if resn <= (1.0 - 1e-4 * tau) * res || resn < tol {
                *x = xn;
                break;
            }
            tau *= 0.5;
            if tau < STEP_FLOOR {
                return Err(ScalarError::NewtonDivergence { eps, iterations: it + 1, residual: res, last: fail_last(x) });
            }
        }
    }
    Err(ScalarError::NewtonDivergence { eps, iterations: max_iter, residual: last_res, last: fail_last(x) })
}

/// Continuation over the `eps` schedule starting from `x` (unknowns only).
pub(crate) fn solve_load(
    disc: &Discretization,
    load: &[f64],
    p: f64,
    x0: Vec<f64>,
    opts: &SolverOptions,
) -> Result<(Vec<f64>, usize, f64, Vec<f64>, bool), ScalarError> {
    let mut x = x0;
    let mut total = 0;
    let mut res = f64::INFINITY;
    let path = opts.schedule(p);
    let mut monotone = true;
    let mut prev: Option<Vec<f64>> = None;
    for &eps in &path {
        let (it, r) = newton(disc, load, p, eps, &mut x, opts.tol, opts.max_iter)?;
        total += it;
        res = r;
        if let Some(pv) = &prev {
            let scale = x.iter().cloned().fold(0.0, f64::max);
            if pv.iter().zip(&x).any(|(a, b)| *b < a - 1e-8 * scale) {
                monotone = false;
            }
        }
        prev = Some(x.clone());
    }
    if p > 0.0 {
        if let Some(k) = (0..x.len()).find(|&k| !(x[k] > 0.0)) {
            return Err(ScalarError::PositivityBreach {
                node: disc.node(k),
                eps: 0.0,
                last: Box::new(GridFunction::new(disc.grid(), disc.expand(&x))?),
            });
        }
    }
    Ok((x, total, res, path, monotone))
}

fn distance_profile(grid: &Arc<Grid>, p: f64, weight: &WeightSpec) -> Vec<f64> {
    let (q, _) = weight.exponents();
    let gamma = if q < 2.0 && p + q > 1.0 { (2.0 - q) / (1.0 + p) } else { 1.0 };
    let dmax = grid.max_delta();
    grid.delta().iter().map(|d| (d / dmax).powf(gamma)).collect()
}

fn barrier_profile(spec: &OperatorSpec, grid: &Arc<Grid>, p: f64, weight: &WeightSpec) -> Result<Vec<f64>, ScalarError> {
    let pair = eigensolver::principal_eigenpair(spec, grid, 1e-8, 200).map_err(|e| ScalarError::Options(e.to_string()))?;
    let (q, _) = weight.exponents();
    let sol = barrier::solve_barrier_ode(q.clamp(0.05, 1.9), p, 0.5, 400)?;
    let c = sol.b / pair.phi.sup_norm();
    let v = barrier::composite_barrier(1.0, c, &sol, &pair.phi)?;
    Ok(v.into_values())
}

fn initial_values(
    spec: &OperatorSpec,
    grid: &Arc<Grid>,
    p: f64,
    weight: &WeightSpec,
    init: &InitialGuess,
) -> Result<(Vec<f64>, String), ScalarError> {
    match init {
        InitialGuess::Barrier => match barrier_profile(spec, grid, p, weight) {
            Ok(v) => Ok((v, "barrier".into())),
            Err(_) => Ok((distance_profile(grid, p, weight), "scaled_distance (barrier fallback)".into())),
        },
        InitialGuess::ScaledDistance => Ok((distance_profile(grid, p, weight), "scaled_distance".into())),
        InitialGuess::Flat => Ok((grid.interior_mask().iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(), "flat".into())),
        InitialGuess::Given(v) => {
            if v.len() != grid.len() {
                return Err(GeometryError::Length { expected: grid.len(), got: v.len() }.into());
            }
            Ok((v.clone(), "given".into()))
        }
    }
}

fn solve_once(
    spec: &OperatorSpec,
    grid: &Arc<Grid>,
    p: f64,
    weight: &WeightSpec,
    opts: &SolverOptions,
) -> Result<SolveResult, ScalarError> {
    let disc = Discretization::new(spec, grid)?;
    let load = weight_loads(&disc, weight, opts.load_rule)?;
    let (init, used) = initial_values(spec, grid, p, weight, &opts.initial)?;
    let x0 = disc.restrict(&init);
    let (x, iterations, res, path, monotone) = solve_load(&disc, &load, p, x0, opts)?;
    let u = GridFunction::new(grid, disc.expand(&x))?;
    u.check_finite()?;
    Ok(SolveResult {
        u,
        iterations,
        final_residual: res,
        epsilon_path: path,
        converged: true,
        initial_guess: used,
        eps_monotone: monotone,
        refinement_change: None,
    })
}

/// Solves `F(D^2 u, Du, u, x) = k(delta) u^(-p)` with zero boundary data.
pub fn solve_scalar_singular(
    spec: &OperatorSpec,
    grid: &Arc<Grid>,
    p: f64,
    weight: &WeightSpec,
    opts: &SolverOptions,
) -> Result<SolveResult, ScalarError> {
    opts.validate()?;
    if !(p >= 0.0 && p.is_finite()) {
        return Err(ScalarError::Options(format!("p must be >= 0, got {p}")));
    }
    weight.validate(grid.domain())?;
    let mut res = solve_once(spec, grid, p, weight, opts)?;
    if let Some(threshold) = opts.refinement_check {
        let n_coarse = grid.n().div_ceil(2).max(MIN_NODES);
        if n_coarse < grid.n() {
            let coarse = Arc::new(build_grid(*grid.domain(), n_coarse, grid.grading())?);
            let mut copts = opts.clone();
            copts.refinement_check = None;
            if matches!(copts.initial, InitialGuess::Given(_)) {
                copts.initial = InitialGuess::Barrier;
            }
            let fine = res.u.sup_norm();
            let rel = match solve_once(spec, &coarse, p, weight, &copts) {
                Ok(c) => (fine - c.u.sup_norm()).abs() / fine,
                Err(e) if e.is_nonexistence_signal() => f64::INFINITY,
                Err(e) => return Err(e),
            };
            res.refinement_change = Some(rel);
            if !(rel <= threshold) {
                return Err(ScalarError::RefinementDivergence {
                    rel_change: rel,
                    n_coarse,
                    n: grid.n(),
                    last: Box::new(res.u),
                });
            }
        }
    }
    Ok(res)
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub holds: bool,
    pub first_violation: Option<usize>,
    pub max_violation: f64,
    pub sub_margin_min: f64,
    pub super_margin_min: f64,
    /// Set when either function fails its discrete margin check.
    pub warning: Option<String>,
}

/// Checks `u_sub <= u_super` nodewise, after measuring how well each side
/// satisfies its inequality.
pub fn comparison_check(
    spec: &OperatorSpec,
    grid: &Arc<Grid>,
    u_sub: &GridFunction,
    u_super: &GridFunction,
    p: f64,
    weight: &WeightSpec,
) -> Result<ComparisonReport, ScalarError> {
    u_sub.check_same_grid(u_super)?;
    let rhs_of = |w: &GridFunction| {
        let vals: Vec<f64> = (0..grid.len())
            .map(|i| if grid.is_interior(i) { weight.eval(grid.delta()[i]) * w.values()[i].powf(-p) } else { 0.0 })
            .collect();
        GridFunction::new(grid, vals)
    };
    let m_sub = barrier::barrier_margin(spec, grid, u_sub, &rhs_of(u_sub)?, Side::Sub)?;
    let m_sup = barrier::barrier_margin(spec, grid, u_super, &rhs_of(u_super)?, Side::Super)?;
    // margins are judged relative to the size of the right-hand side
    let rel_min = |m: &GridFunction, w: &GridFunction| {
        grid.interior_nodes()
            .iter()
            .map(|&i| m.values()[i] / (1.0 + weight.eval(grid.delta()[i]) * w.values()[i].powf(-p)))
            .fold(f64::INFINITY, f64::min)
    };
    let sub_margin_min = rel_min(&m_sub, u_sub);
    let super_margin_min = rel_min(&m_sup, u_super);
    let mut warns = Vec::new();
    if sub_margin_min < -1e-8 {
        warns.push(format!("u_sub is not a discrete subsolution (relative margin {sub_margin_min:e})"));
    }
    if super_margin_min < -1e-8 {
        warns.push(format!("u_super is not a discrete supersolution (relative margin {super_margin_min:e})"));
    }
    let mut first = None;
    let mut worst: f64 = 0.0;
    for i in 0..grid.len() {
        let gap = u_sub.values()[i] - u_super.values()[i];
        if gap > 0.0 {
            if first.is_none() {
                first = Some(i);
            }
            worst = worst.max(gap);
        }
    }
    Ok(ComparisonReport {
        holds: first.is_none(),
        first_violation: first,
        max_violation: worst,
        sub_margin_min,
        super_margin_min,
        warning: if warns.is_empty() { None } else { Some(warns.join("; ")) },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Finiteness {
    Finite,
    Infinite,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct IntegralVerdict {
    /// Closed-form classification of `int_0^A t k(t) dt`.
    pub verdict: Finiteness,
    pub quadrature: Finiteness,
    /// Partial integrals over `(A e^(-S), A / e]` for `S = 2, 4, 8, ...`.
    pub partial_integrals: Vec<f64>,
}

/// Whether `int_0^A t k(t) dt` is finite.
pub fn integral_criterion(weight: &WeightSpec) -> IntegralVerdict {
    let (q, a) = weight.exponents();
    let a = if weight.uses_scale() { a } else { 0.0 };
    let verdict = if q > 2.0 || (q == 2.0 && a <= 1.0) { Finiteness::Infinite } else { Finiteness::Finite };
    // t = A e^(-s): int_1^S A^(2-q) e^(-(2-q) s) s^(-a) ds
    let big_a = if weight.scale_a.is_finite() { weight.scale_a } else { 1.0 };
    let f = |s: f64| {
        let v = ((2.0 - q) * (big_a.ln() - s)).exp() * s.powf(-a);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut partial = Vec::new();
    let mut total = 0.0;
    let mut lo = 1.0;
    let mut incs = Vec::new();
    for k in 1..=12 {
        let hi = 2f64.powi(k);
        let inc = quad::integrate(f, lo, hi, 8 * k as usize);
        total += inc;
        partial.push(total);
        incs.push(inc);
        lo = hi;
    }
    let quadrature = {
        let n = incs.len();
        let (a1, a2) = (incs[n - 2], incs[n - 1]);
        if !a2.is_finite() || !total.is_finite() {
            Finiteness::Infinite
        } else if a2 <= 1e-16 * total {
            Finiteness::Finite
        } else {
            let ratio = a2 / a1;
            if ratio < 0.95 {
                Finiteness::Finite
            } else if ratio > 0.999 {
                Finiteness::Infinite
            } else {
                Finiteness::Inconclusive
            }
        }
    };
    IntegralVerdict { verdict, quadrature, partial_integrals: partial }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LowerBoundKind {
    /// `delta`
    Linear,
    /// `delta log^theta(A / delta)`
    LinearLogpow { theta: f64, scale_a: f64 },
    /// `delta log(log(A / delta))`
    Loglog { scale_a: f64 },
}

impl LowerBoundKind {
    pub fn model(&self, d: f64) -> f64 {
        match *self {
            LowerBoundKind::Linear => d,
            LowerBoundKind::LinearLogpow { theta, scale_a } => d * (scale_a / d).ln().powf(theta),
            LowerBoundKind::Loglog { scale_a } => d * (scale_a / d).ln().ln(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LowerBound {
    pub constant: f64,
    pub ok: bool,
}

/// Largest `c` with `u >= c model(delta)` over the interior nodes.
pub fn lower_bound_check(u: &GridFunction, kind: LowerBoundKind) -> LowerBound {
    let grid = u.grid();
    let c = grid
        .interior_nodes()
        .iter()
        .map(|&i| u.values()[i] / kind.model(grid.delta()[i]))
        .fold(f64::INFINITY, f64::min);
    LowerBound { constant: c, ok: c > 0.0 && c.is_finite() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Grading;

    fn line(n: usize, grading: Grading) -> Arc<Grid> {
        Arc::new(build_grid(Domain::interval(0.0, 1.0).unwrap(), n, grading).unwrap())
    }

    #[test]
    fn quadratic_solution_is_exact() {
        let g = line(41, Grading::Uniform);
        let r = solve_scalar_singular(&OperatorSpec::laplacian(), &g, 0.0, &WeightSpec::constant(), &SolverOptions::default()).unwrap();
        for (i, v) in r.u.values().iter().enumerate() {
            let x = g.point(i)[0];
            assert!((v - 0.5 * x * (1.0 - x)).abs() < 1e-12);
        }
    }

    #[test]
    fn moments_match_closed_forms() {
        let w = WeightSpec::power(0.5);
        assert!((w.moment(0.1).unwrap() - 0.1f64.powf(1.5) / 1.5).abs() < 1e-15);
        assert!(WeightSpec::power(2.0).moment(0.1).is_none());
        let w = WeightSpec::power_log(2.0, 1.5, 100.0);
        let l = (100.0f64 / 0.01).ln();
        assert!((w.moment(0.01).unwrap() - 2.0 / l.sqrt()).abs() < 1e-12);
        // numeric moment against direct quadrature in ln t
        let w = WeightSpec::power_log(1.0, 0.7, 10.0);
        let direct = quad::integrate(|s: f64| s.exp() * s.exp() * w.eval(s.exp()), (1e-40f64).ln(), (0.05f64).ln(), 200);
        assert!((w.moment(0.05).unwrap() - direct).abs() < 1e-10 * direct);
    }

    #[test]
    fn galerkin_matches_collocation_for_smooth_weight() {
        let g = line(65, Grading::BoundaryGraded { strength: 1.0 });
        let d = Discretization::new(&OperatorSpec::laplacian(), &g).unwrap();
        let w = WeightSpec::power(0.0);
        let gal = weight_loads(&d, &w, LoadRule::Galerkin).unwrap();
        assert!(gal.iter().all(|v| (v - 1.0).abs() < 1e-12), "{gal:?}");
    }

    #[test]
    fn integral_criterion_examples() {
        assert_eq!(integral_criterion(&WeightSpec::power(2.0)).verdict, Finiteness::Infinite);
        assert_eq!(integral_criterion(&WeightSpec::power(2.0)).quadrature, Finiteness::Infinite);
        let w = WeightSpec::power_log(2.0, 1.5, 10.0);
        assert_eq!(integral_criterion(&w).verdict, Finiteness::Finite);
        assert_eq!(integral_criterion(&w).quadrature, Finiteness::Finite);
        let w = WeightSpec::power_log(1.0, -3.0, 10.0);
        assert_eq!(integral_criterion(&w).quadrature, Finiteness::Finite);
        let w = WeightSpec::power_log(2.0, 0.5, 10.0);
        assert_eq!(integral_criterion(&w).quadrature, Finiteness::Infinite);
        assert_eq!(integral_criterion(&WeightSpec::power(2.5)).quadrature, Finiteness::Infinite);
    }

    #[test]
    fn lower_bound_of_distance() {
        let g = line(33, Grading::Uniform);
        let u = GridFunction::from_fn(&g, |_, d| d);
        let lb = lower_bound_check(&u, LowerBoundKind::Linear);
        assert!((lb.constant - 1.0).abs() < 1e-15 && lb.ok);
    }
}
