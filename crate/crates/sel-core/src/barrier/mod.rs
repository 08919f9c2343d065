//! The barrier ODE `H'' = -t^(-alpha) H^(-beta)`, `H(0) = 0`, together with
//! the composite and logarithmic barriers built from it and the discrete
//! sub/supersolution margins used to certify them.
//!
//! The ODE is solved by shooting: `H(b) = 1` is fixed and the slope `H'(b)` is
//! bisected. Each shot integrates backward in `tau = -ln t`,
//!
//! ```text
//! dH/dtau = -t H',    dH'/dtau = t^(1 - alpha) H^(-beta),
//! ```
//!
//! down to a floor `t_min`. A shot whose `H` reaches zero before `t_min` has too
//! large a slope. Otherwise the slope is too small when the residual
//! `G = H - t H' - t^(2-alpha) H^(-beta) / (2 - alpha - beta kappa)` (with
//! `kappa = t H' / H`) is positive at `t_min`: `G` vanishes to leading order on
//! the solution with `H(0) = 0`, for both the linear and the log-corrected
//! behaviour near zero.

pub mod interp;
pub mod rk45;

use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::geometry::{GeometryError, Grid, GridFunction};
use crate::operators::{Discretization, OperatorError, OperatorSpec};
use interp::MonotoneCubic;
use rk45::{Outcome, Rk45, State};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BarrierError {
    #[error("invalid barrier input: {0}")]
    Input(String),
    #[error("shooting bracket failure: {0}")]
    Bracket(String),
    #[error("H reached zero at interior t = {t:e}")]
    Singularity { t: f64 },
    #[error("composition out of range: c * max(phi) = {arg} exceeds b = {b}")]
    Range { arg: f64, b: f64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("no admissible scale found after {steps} steps (last {scale:e}, min margin {margin:e})")]
    ScaleSearch { steps: usize, scale: f64, margin: f64 },
    #[error(transparent)]
    Grid(#[from] GeometryError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

/// Flags and witnessing constants for the properties of `H`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BarrierProps {
    pub positive_ok: bool,
    pub concave_ok: bool,
    /// `H(t) > t H'(t)` at every sample.
    pub con_ok: bool,
    /// `(c1, c2)` with `c1 t <= H <= c2 t`; only checked when `alpha + beta < 1`.
    pub linear_bounds: Option<(f64, f64)>,
    pub linear_bounds_ok: Option<bool>,
    /// Fitted `theta` in `H ~ t (-ln t)^theta`; only when `beta = 1 - alpha`.
    pub log_rate: Option<f64>,
    pub log_rate_ok: Option<bool>,
    /// Smallest `C1` with `H' <= C1 t^(-alpha) H^(-beta)` over the samples.
    pub hp_constant: f64,
    pub hp_bound_ok: bool,
}

impl BarrierProps {
    pub fn all_ok(&self) -> bool {
        self.positive_ok
            && self.concave_ok
            && self.con_ok
            && self.linear_bounds_ok.unwrap_or(true)
            && self.log_rate_ok.unwrap_or(true)
            && self.hp_bound_ok
    }
}

#[derive(Debug, Clone)]
pub struct BarrierSolution {
    pub alpha_ode: f64,
    pub beta_ode: f64,
    pub b: f64,
    /// Shot slope `H'(b)`.
    pub slope_b: f64,
    /// Smallest integrated abscissa.
    pub t_min: f64,
    pub ts: Vec<f64>,
    pub h: Vec<f64>,
    pub hp: Vec<f64>,
    pub props: BarrierProps,
    interp: MonotoneCubic,
}

/// Deepest tabulated abscissa (relative to `b`) in the log case.
const DEEP_FLOOR: f64 = 1e-150;

/// Relative tolerance of the `beta = 1 - alpha` guard.
const LOG_CASE_TOL: f64 = 1e-9;

fn is_log_case(alpha: f64, beta: f64) -> bool {
    (beta - (1.0 - alpha)).abs() <= LOG_CASE_TOL
}

fn integration_floor(alpha: f64, beta: f64, b: f64) -> f64 {
    if alpha + beta < 1.0 {
        1e-6 * b
    } else {
        1e-12 * b
    }
}

fn rhs(alpha: f64, beta: f64) -> impl Fn(f64, &State) -> Option<State> {
    move |tau: f64, y: &State| {
        let t = (-tau).exp();
        if !(y[0] > 0.0) || !y[1].is_finite() {
            return None;
        }
        Some([-t * y[1], t.powf(1.0 - alpha) * y[0].powf(-beta)])
    }
}

fn target_residual(alpha: f64, beta: f64, t: f64, y: &State) -> f64 {
    let (h, hp) = (y[0], y[1]);
    let kappa = t * hp / h;
    let den = 2.0 - alpha - beta * kappa;
    let corr = if den > 0.0 { t.powf(2.0 - alpha) * h.powf(-beta) / den } else { 0.0 };
    h - t * hp - corr
}

enum Shot {
    Hit,
    Reached(State),
}

fn shoot(alpha: f64, beta: f64, b: f64, s: f64, t_min: f64) -> Shot {
    match Rk45::default().integrate(rhs(alpha, beta), -b.ln(), [1.0, s], -t_min.ln(), &[], |_, _, _| {}) {
        Outcome::Reached(y) => Shot::Reached(y),
        Outcome::Failed { .. } => Shot::Hit,
    }
}

/// `true` when the slope `s` is too small (the shot stays above the target).
fn too_small(alpha: f64, beta: f64, b: f64, s: f64, t_min: f64) -> Option<bool> {
    match shoot(alpha, beta, b, s, t_min) {
        Shot::Hit => Some(false),
        Shot::Reached(y) => {
            let g = target_residual(alpha, beta, t_min, &y);
            if g.is_finite() {
                Some(g > 0.0)
            } else {
                None
            }
        }
    }
}

fn rhs_up(alpha: f64, beta: f64) -> impl Fn(f64, &State) -> Option<State> {
    move |u: f64, y: &State| {
        if !(y[0] > 0.0) || !y[1].is_finite() {
            return None;
        }
        let t = u.exp();
        Some([t * y[1], -((1.0 - alpha) * u - beta * y[0].ln()).exp()])
    }
}

/// Slope `H'` at `t` putting `(H, H')` on `G = 0`.
fn manifold_slope(alpha: f64, beta: f64, t: f64, h: f64) -> f64 {
    let ratio = ((2.0 - alpha) * t.ln() - (1.0 + beta) * h.ln()).exp();
    let mut kappa = 1.0;
    for _ in 0..100 {
        let den = 2.0 - alpha - beta * kappa;
        let next = if den > 0.0 { 1.0 - ratio / den } else { 1.0 };
        if (next - kappa).abs() <= 1e-16 {
            kappa = next;
            break;
        }
        kappa = next;
    }
    kappa * h / t
}

fn shoot_up(alpha: f64, beta: f64, t_lo: f64, ln_h0: f64, t_hi: f64, stops: &[f64], on_stop: impl FnMut(usize, f64, &State)) -> Option<State> {
    let h0 = ln_h0.exp();
    let y0 = [h0, manifold_slope(alpha, beta, t_lo, h0)];
    match Rk45::default().integrate(rhs_up(alpha, beta), t_lo.ln(), y0, t_hi.ln(), stops, on_stop) {
        Outcome::Reached(y) => Some(y),
        Outcome::Failed { .. } => None,
    }
}

/// Fills samples `ts < t_floor` by integrating upward from `ts[0]`, with the
/// starting amplitude bisected so that `H(t_floor)` matches the backward shot.
fn upward_extension(
    alpha: f64,
    beta: f64,
    ts: &[f64],
    t_floor: f64,
    at_floor: State,
    h: &mut [f64],
    hp: &mut [f64],
) -> Result<(), BarrierError> {
    let t_lo = ts[0];
    let target = at_floor[0];
    let kappa = (t_floor * at_floor[1] / at_floor[0]).clamp(0.0, 1.0);
    let guess = target.ln() + kappa * (t_lo.ln() - t_floor.ln());
    // an amplitude too small bends H back down to zero before the floor
    let above = |x: f64| -> bool { shoot_up(alpha, beta, t_lo, x, t_floor, &[], |_, _, _| {}).is_some_and(|y| y[0] > target) };
    let (mut lo, mut hi) = (guess - 1.0, guess + 1.0);
    let mut widen = 0;
    while above(lo) {
        lo -= 2f64.powi(widen);
        widen += 1;
        if widen > 40 {
            return Err(BarrierError::Bracket("upward extension: no lower amplitude".into()));
        }
    }
    widen = 0;
    while !above(hi) {
        hi += 2f64.powi(widen);
        widen += 1;
        if widen > 40 {
            return Err(BarrierError::Bracket("upward extension: no upper amplitude".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if above(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let x = hi;
    let h0 = x.exp();
    h[0] = h0;
    hp[0] = manifold_slope(alpha, beta, t_lo, h0);
    let stops: Vec<f64> = ts[1..].iter().map(|t| t.ln()).collect();
    shoot_up(alpha, beta, t_lo, x, t_floor, &stops, |k, _, y| {
        h[k + 1] = y[0];
        hp[k + 1] = y[1];
    })
    .ok_or(BarrierError::Singularity { t: t_lo })?;
    Ok(())
}

/// Solves `H'' = -t^(-alpha) H^(-beta)` on `(0, b]` with `H(0) = 0`, `H(b) = 1`,
/// returning `n` log-spaced samples between the integration floor and `b`.
pub fn solve_barrier_ode(alpha: f64, beta: f64, b: f64, n: usize) -> Result<BarrierSolution, BarrierError> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(BarrierError::Input(format!("alpha_ode must lie in (0, 2), got {alpha}")));
    }
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(BarrierError::Input(format!("beta_ode must be >= 0, got {beta}")));
    }
    if !(b > 0.0 && b < 1.0) {
        return Err(BarrierError::Input(format!("b must lie in (0, 1), got {b}")));
    }
    if n < 16 {
        return Err(BarrierError::Input(format!("need at least 16 samples, got {n}")));
    }
    let t_min = integration_floor(alpha, beta, b);

    let mut lo = 0.0;
    match too_small(alpha, beta, b, lo, t_min) {
        Some(true) => {}
        _ => return Err(BarrierError::Bracket(format!("H'(b) = 0 already reaches zero before t = {t_min:e}; shrink b"))),
    }
    let mut hi = 1.0;
    let mut doublings = 0;
    while too_small(alpha, beta, b, hi, t_min) == Some(true) {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > 60 {
            return Err(BarrierError::Bracket(format!("no upper slope found below {hi:e}")));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match too_small(alpha, beta, b, mid, t_min) {
            Some(true) => lo = mid,
            Some(false) => hi = mid,
            None => return Err(BarrierError::Bracket(format!("non-finite target residual at slope {mid:e}"))),
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
    }
    let s = lo;

    // Below the shooting floor the backward shot loses the constant mode to
    // rounding. In the log case (beta = 1 - alpha) the asymptotics set in only
    // logarithmically, so the tabulation continues with an upward integration
    // from a deep start on the G = 0 manifold, matched to the backward shot at
    // the floor. Upward integration is stable only in this case: for
    // alpha + beta > 1 the linear mode grows relative to t^gamma.
    let deep = is_log_case(alpha, beta);
    let t_lo = if deep { DEEP_FLOOR * b } else { t_min };
    let (lt0, lt1) = (t_lo.ln(), b.ln());
    let mut ts: Vec<f64> = (0..n).map(|k| (lt0 + (lt1 - lt0) * k as f64 / (n - 1) as f64).exp()).collect();
    ts[0] = t_lo;
    ts[n - 1] = b;
    let split = ts.iter().position(|&t| t >= t_min).unwrap_or(n - 1);
    let stops: Vec<f64> = ts[split..n - 1].iter().rev().map(|t| -t.ln()).collect();
    let mut h = vec![0.0; n];
    let mut hp = vec![0.0; n];
    h[n - 1] = 1.0;
    hp[n - 1] = s;
    let out = Rk45::default().integrate(rhs(alpha, beta), -b.ln(), [1.0, s], -t_min.ln(), &stops, |k, _, y| {
        let idx = n - 2 - k;
        h[idx] = y[0];
        hp[idx] = y[1];
    });
    let at_floor = match out {
        Outcome::Reached(y) => y,
        Outcome::Failed { t, .. } => return Err(BarrierError::Singularity { t: (-t).exp() }),
    };
    if deep && split > 0 {
        upward_extension(alpha, beta, &ts[..split], t_min, at_floor, &mut h[..split], &mut hp[..split])?;
    }
    let interp = MonotoneCubic::with_slopes(ts.clone(), h.clone(), hp.clone());
    let mut sol = BarrierSolution {
        alpha_ode: alpha,
        beta_ode: beta,
        b,
        slope_b: s,
        t_min: ts[0],
        ts,
        h,
        hp,
        props: BarrierProps {
            positive_ok: false,
            concave_ok: false,
            con_ok: false,
            linear_bounds: None,
            linear_bounds_ok: None,
            log_rate: None,
            log_rate_ok: None,
            hp_constant: f64::NAN,
            hp_bound_ok: false,
        },
        interp,
    };
    sol.props = verify_barrier_properties(&sol);
    Ok(sol)
}

impl BarrierSolution {
    /// `H(t)` for `0 <= t <= b`: monotone cubic between samples, power-law
    /// extension `H(t0) (t / t0)^kappa` below the first sample.
    pub fn eval(&self, t: f64) -> Result<f64, BarrierError> {
        if t > self.b * (1.0 + 1e-12) {
            return Err(BarrierError::Range { arg: t, b: self.b });
        }
        Ok(self.eval_clamped(t))
    }

    fn eval_clamped(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let t0 = self.ts[0];
        if t < t0 {
            let kappa = (t0 * self.hp[0] / self.h[0]).min(1.0);
            return self.h[0] * (t / t0).powf(kappa);
        }
        self.interp.eval(t.min(self.b))
    }

    /// Extrapolated `H(0+) = H - t H'` at the first sample.
    pub fn intercept(&self) -> f64 {
        self.h[0] - self.ts[0] * self.hp[0]
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<(), csv::Error> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["t", "H", "Hp"])?;
        for i in 0..self.ts.len() {
            wtr.write_record([format!("{:e}", self.ts[i]), format!("{:e}", self.h[i]), format!("{:e}", self.hp[i])])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Checks positivity, concavity, `H > t H'`, the linear bounds (when
/// `alpha + beta < 1`), the log rate (when `beta = 1 - alpha`) and the bound
/// on `H'`, sample by sample.
pub fn verify_barrier_properties(sol: &BarrierSolution) -> BarrierProps {
    let (a, bt) = (sol.alpha_ode, sol.beta_ode);
    let n = sol.ts.len();
    let positive_ok = (0..n).all(|i| sol.h[i] > 0.0 && sol.hp[i] > 0.0 && sol.h[i].is_finite() && sol.hp[i].is_finite());
    let concave_ok = (0..n).all(|i| -(sol.ts[i].powf(-a)) * sol.h[i].powf(-bt) < 0.0)
        && (0..n - 1).all(|i| sol.hp[i + 1] < sol.hp[i]);
    let con_ok = (0..n).all(|i| sol.h[i] > sol.ts[i] * sol.hp[i]);

    let (linear_bounds, linear_bounds_ok) = if a + bt < 1.0 {
        let ratios: Vec<f64> = (0..n).map(|i| sol.h[i] / sol.ts[i]).collect();
        let c1 = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let c2 = ratios.iter().cloned().fold(0.0, f64::max);
        // H / t must settle to a finite positive limit at the small end
        let t10 = 10.0 * sol.ts[0];
        let k = sol.ts.iter().position(|&t| t >= t10).unwrap_or(n - 1);
        let settled = (ratios[k] - ratios[0]).abs() <= 0.1 * ratios[0];
        (Some((c1, c2)), Some(c1 > 0.0 && c2.is_finite() && settled))
    } else {
        (None, None)
    };

    let (log_rate, log_rate_ok) = if is_log_case(a, bt) {
        let t10 = 10.0 * sol.ts[0];
        let idx: Vec<usize> = (0..n).filter(|&i| sol.ts[i] <= t10 * (1.0 + 1e-12)).collect();
        if idx.len() >= 3 {
            let x: Vec<f64> = idx.iter().map(|&i| (-sol.ts[i].ln()).ln()).collect();
            let y: Vec<f64> = idx.iter().map(|&i| (sol.h[i] / sol.ts[i]).ln()).collect();
            let theta = linear_fit(&x, &y).0;
            let expect = 1.0 / (2.0 - a);
            (Some(theta), Some((theta - expect).abs() <= 0.05 * expect))
        } else {
            (None, Some(false))
        }
    } else {
        (None, None)
    };

    let hp_constant = (0..n).map(|i| sol.hp[i] * sol.ts[i].powf(a) * sol.h[i].powf(bt)).fold(0.0, f64::max);
    BarrierProps {
        positive_ok,
        concave_ok,
        con_ok,
        linear_bounds,
        linear_bounds_ok,
        log_rate,
        log_rate_ok,
        hp_bound_ok: hp_constant.is_finite() && hp_constant > 0.0,
        hp_constant,
    }
}

/// `v = m H(c phi)` nodewise.
pub fn composite_barrier(m: f64, c: f64, sol: &BarrierSolution, phi: &GridFunction) -> Result<GridFunction, BarrierError> {
    if !(m > 0.0 && c > 0.0) {
        return Err(BarrierError::Input(format!("m and c must be positive, got m = {m}, c = {c}")));
    }
    let arg = c * phi.sup_norm();
    if arg > sol.b * (1.0 + 1e-12) {
        return Err(BarrierError::Range { arg, b: sol.b });
    }
    Ok(phi.map(|p| m * sol.eval_clamped(c * p.max(0.0))))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LogBarrierKind {
    /// `phi log^b(A / phi)`
    PhiLogPow,
    /// `log^b(B / phi)`
    LogPowOnly,
    /// `phi log(log(A / phi))`
    PhiLogLog,
}

pub fn log_barrier(kind: LogBarrierKind, phi: &GridFunction, a_or_b: f64, exponent_b: f64) -> Result<GridFunction, BarrierError> {
    let grid = phi.grid();
    let pmax = grid.interior_nodes().iter().map(|&i| phi.values()[i]).fold(0.0, f64::max);
    if pmax <= 0.0 {
        return Err(BarrierError::Precondition("phi must be positive somewhere in the interior".into()));
    }
    let vals: Vec<f64> = match kind {
        LogBarrierKind::PhiLogPow => {
            if (a_or_b / pmax).ln() <= 1.0 {
                return Err(BarrierError::Precondition(format!("log(A/phi) > 1 needs A > e * max(phi) = {:e}", std::f64::consts::E * pmax)));
            }
            phi.values().iter().map(|&p| if p > 0.0 { p * (a_or_b / p).ln().powf(exponent_b) } else { 0.0 }).collect()
        }
        LogBarrierKind::LogPowOnly => {
            let need = 2.0 * (1.0 - exponent_b);
            if (a_or_b / pmax).ln() < need {
                return Err(BarrierError::Precondition(format!(
                    "log(B/phi) >= 2(1 - b) = {need} needs B >= {:e}",
                    pmax * need.exp()
                )));
            }
            if exponent_b > 0.0 {
                return Err(BarrierError::Precondition("log^b(B/phi) with b > 0 has no finite boundary trace".into()));
            }
            let trace = if exponent_b == 0.0 { 1.0 } else { 0.0 };
            phi.values().iter().map(|&p| if p > 0.0 { (a_or_b / p).ln().powf(exponent_b) } else { trace }).collect()
        }
        LogBarrierKind::PhiLogLog => {
            let diam = grid.domain().diameter();
            if a_or_b <= 6.0 * diam {
                return Err(BarrierError::Precondition(format!("A > 6 diam = {:e} required, got {a_or_b}", 6.0 * diam)));
            }
            if (a_or_b / pmax).ln() <= 1.0 {
                return Err(BarrierError::Precondition(format!("log(A/phi) > 1 needs A > e * max(phi) = {:e}", std::f64::consts::E * pmax)));
            }
            phi.values().iter().map(|&p| if p > 0.0 { p * (a_or_b / p).ln().ln() } else { 0.0 }).collect()
        }
    };
    Ok(GridFunction::new(grid, vals)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Sub,
    Super,
}

/// `rhs - F(w)` (sub) or `F(w) - rhs` (super) at interior nodes, zero on the boundary.
pub fn barrier_margin(
    spec: &OperatorSpec,
    grid: &Arc<Grid>,
    w: &GridFunction,
    rhs: &GridFunction,
    side: Side,
) -> Result<GridFunction, BarrierError> {
    if !w.grid().same_as(grid) {
        return Err(GeometryError::Mismatch.into());
    }
    w.check_same_grid(rhs)?;
    let fw = Discretization::new(spec, grid)?.residual_field(w.values());
    let vals = (0..grid.len())
        .map(|i| {
            if !grid.is_interior(i) {
                0.0
            } else {
                match side {
                    Side::Sub => rhs.values()[i] - fw.values()[i],
                    Side::Super => fw.values()[i] - rhs.values()[i],
                }
            }
        })
        .collect();
    Ok(GridFunction::new(grid, vals)?)
}

pub fn min_interior(f: &GridFunction) -> f64 {
    let g = f.grid();
    g.interior_nodes().iter().map(|&i| f.values()[i]).fold(f64::INFINITY, f64::min)
}

/// Halves (sub) or doubles (super) a scale until the barrier built by `build`
/// has a nonnegative margin at every interior node. Returns the scale, the
/// barrier and its margin.
pub fn search_scale(
    spec: &OperatorSpec,
    grid: &Arc<Grid>,
    side: Side,
    start: f64,
    max_steps: usize,
    build: impl Fn(f64) -> Result<(GridFunction, GridFunction), BarrierError>,
) -> Result<(f64, GridFunction, GridFunction), BarrierError> {
    let mut scale = start;
    let mut last = f64::NEG_INFINITY;
    for _ in 0..max_steps {
        let (w, rhs) = build(scale)?;
        let margin = barrier_margin(spec, grid, &w, &rhs, side)?;
        last = min_interior(&margin);
        if last >= 0.0 {
            return Ok((scale, w, margin));
        }
        scale = match side {
            Side::Sub => 0.5 * scale,
            Side::Super => 2.0 * scale,
        };
    }
    Err(BarrierError::ScaleSearch { steps: max_steps, scale, margin: last })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn input_validation() {
        assert!(solve_barrier_ode(0.0, 0.5, 0.5, 100).is_err());
        assert!(solve_barrier_ode(0.5, -0.1, 0.5, 100).is_err());
        assert!(solve_barrier_ode(0.5, 0.5, 1.0, 100).is_err());
    }

    #[test]
    fn linear_regime_properties() {
        let sol = solve_barrier_ode(0.3, 0.4, 0.5, 400).unwrap();
        assert!(sol.props.all_ok(), "{:?}", sol.props);
        assert!(sol.props.linear_bounds_ok == Some(true));
        assert!(sol.intercept().abs() < 1e-6 * sol.h[0].max(1e-300) / sol.ts[0]);
        assert_eq!(sol.eval(0.0).unwrap(), 0.0);
        assert!(sol.eval(0.6).is_err());
    }

    #[test]
    fn deterministic() {
        let a = solve_barrier_ode(0.5, 0.5, 0.5, 64).unwrap();
        let b = solve_barrier_ode(0.5, 0.5, 0.5, 64).unwrap();
        assert_eq!(a.slope_b.to_bits(), b.slope_b.to_bits());
        assert_eq!(a.h, b.h);
    }
}

#[cfg(test)]
mod accuracy {
    use super::*;

    #[test]
    fn beta_zero_matches_closed_form() {
        for alpha in [0.3, 0.5, 0.9] {
            let b = 0.5;
            let sol = solve_barrier_ode(alpha, 0.0, b, 500).unwrap();
            let k = (1.0 - alpha) * (2.0 - alpha);
            let s0 = (1.0 + b.powf(2.0 - alpha) / k) / b;
            for (t, h) in sol.ts.iter().zip(&sol.h) {
                let ex = s0 * t - t.powf(2.0 - alpha) / k;
                assert!(((h - ex) / ex).abs() < 1e-7, "alpha {alpha} t {t}");
            }
        }
    }

    #[test]
    fn log_case_exponent() {
        let sol = solve_barrier_ode(0.6, 0.4, 0.5, 600).unwrap();
        assert!(sol.props.all_ok(), "{:?}", sol.props);
        assert!((sol.props.log_rate.unwrap() - 1.0 / 1.4).abs() < 0.01);
    }

    #[test]
    fn superlinear_case_is_shot() {
        let sol = solve_barrier_ode(1.2, 0.3, 0.5, 200).unwrap();
        assert!(sol.props.all_ok(), "{:?}", sol.props);
    }

    #[test]
    fn steep_case_without_solution_reports_bracket() {
        assert!(matches!(solve_barrier_ode(1.5, 0.0, 0.5, 100), Err(BarrierError::Bracket(_))));
    }
}
