//! The coupled system `F(u) = u^-p v^-q`, `F(v) = u^-r v^-s` with zero
//! Dirichlet data, solved by Picard iteration of the decoupled map
//! `(u, v) -> (T u, T v)` inside explicit envelope cones.

use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::classifier::{self, ClassifierError, ExistenceCase, ExponentQuad, Subcase};
use crate::geometry::{GeometryError, Grid, GridFunction};
use crate::operators::{Discretization, OperatorError, OperatorSpec};
use crate::scalar_solver::{self, ScalarError, SolverOptions};

#[derive(Debug, Error, Clone)]
pub enum SystemError {
    #[error("regime not covered by the existence theorem: {0}")]
    UnsupportedRegime(String),
    #[error("cone constants infeasible: {0}")]
    Infeasible(String),
    #[error("invalid system input: {0}")]
    Input(String),
    #[error("{component} is not positive at node {node}")]
    Positivity { component: &'static str, node: usize },
    #[error("Picard iteration did not converge in {iterations} steps (last change {change:e})")]
    NoConvergence { iterations: usize, change: f64, u: Box<GridFunction>, v: Box<GridFunction> },
    #[error("decoupled {component} solve failed in Picard step {iteration}: {source}")]
    Decoupled {
        component: &'static str,
        iteration: usize,
        #[source]
        source: ScalarError,
    },
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Grid(#[from] GeometryError),
}

impl SystemError {
    /// Last iterates carried by a failed iteration.
    pub fn partial(&self) -> Option<(&GridFunction, &GridFunction)> {
        match self {
            SystemError::NoConvergence { u, v, .. } => Some((u, v)),
            _ => None,
        }
    }
}

/// `coef delta^pow log^lpow(A / delta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Envelope {
    pub coef: f64,
    pub pow: f64,
    pub lpow: f64,
    #[serde(rename = "scale_A")]
    pub scale_a: f64,
}

impl Envelope {
    fn shape(pow: f64) -> Self {
        Envelope { coef: 1.0, pow, lpow: 0.0, scale_a: 0.0 }
    }

    fn scaled(self, c: f64) -> Self {
        Envelope { coef: self.coef * c, ..self }
    }

    pub fn eval(&self, d: f64) -> f64 {
        let mut v = self.coef * d.powf(self.pow);
        if self.lpow != 0.0 {
            v *= (self.scale_a / d).ln().powf(self.lpow);
        }
        v
    }
}

/// Solutions of the eq81-type inequalities
/// `M1^(r/(1+s)) m2 <= c1 < c2 <= M1 m2^(q/(1+p))` and its mirror.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConeConstants {
    pub m1: f64,
    #[serde(rename = "M1")]
    pub big_m1: f64,
    pub m2: f64,
    #[serde(rename = "M2")]
    pub big_m2: f64,
    /// `1 - qr / ((1+p)(1+s))`; also the slack, in logarithms relative to
    /// `ln(c2 / c1)`, left in every inequality.
    pub margin: f64,
}

impl ConeConstants {
    /// Smallest slack of the four inequalities, in logarithms.
    pub fn slack(&self, c1: f64, c2: f64, quad: &ExponentQuad) -> f64 {
        let k1 = quad.r / (1.0 + quad.s);
        let k2 = quad.q / (1.0 + quad.p);
        let (x1, bx1, x2, bx2) = (self.m1.ln(), self.big_m1.ln(), self.m2.ln(), self.big_m2.ln());
        [
            c1.ln() - (k1 * bx1 + x2),
            (bx1 + k2 * x2) - c2.ln(),
            c1.ln() - (k2 * bx2 + x1),
            (bx2 + k1 * x1) - c2.ln(),
        ]
        .into_iter()
        .fold(f64::INFINITY, f64::min)
    }
}

pub fn choose_cone_constants(c1: f64, c2: f64, quad: &ExponentQuad) -> Result<ConeConstants, SystemError> {
    if !(c1 > 0.0 && c1 < 1.0 && c2 > 1.0 && c2.is_finite()) {
        return Err(SystemError::Input(format!("need 0 < c1 < 1 < c2, got c1 = {c1}, c2 = {c2}")));
    }
    if !(quad.det > 0.0) {
        return Err(SystemError::Infeasible(format!("determinant (1+p)(1+s) - qr = {} is not positive", quad.det)));
    }
    let k1 = quad.r / (1.0 + quad.s);
    let k2 = quad.q / (1.0 + quad.p);
    let margin = 1.0 - k1 * k2;
    let (l1, l2) = (c1.ln(), c2.ln());
    let t = margin * (l2 - l1) / 2.0;
    // k1 X + y = l1 - t, X + k2 y = l2 + t for (X, y) = (ln M1, ln m2), and
    // the same with (k1, k2) exchanged for (ln M2, ln m1)
    let pair = |ka: f64, kb: f64| {
        let big = ((l2 + t) - kb * (l1 - t)) / margin;
        let small = ((l1 - t) - ka * (l2 + t)) / margin;
        (big.exp(), small.exp())
    };
    let (big_m1, m2) = pair(k1, k2);
    let (big_m2, m1) = pair(k2, k1);
    let out = ConeConstants { m1, big_m1, m2, big_m2, margin };
    let slack = out.slack(c1, c2, quad);
    if !(m1 < 1.0 && m2 < 1.0 && big_m1 > 1.0 && big_m2 > 1.0) || !(slack >= -1e-12 * (l2 - l1)) {
        return Err(SystemError::Infeasible(format!("constants {out:?} violate the inequalities (slack {slack:e})")));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConeSpec {
    pub u_lower: Envelope,
    pub u_upper: Envelope,
    pub v_lower: Envelope,
    pub v_upper: Envelope,
    pub constants: ConeConstants,
    pub c1: f64,
    pub c2: f64,
    pub subcase: Subcase,
    /// Free exponent of subcases II and IV to VI.
    pub free_a: Option<f64>,
    /// `true` when the cone was built for the swapped quad and mirrored back.
    pub mirrored: bool,
}

impl ConeSpec {
    /// Relative amount by which `w` leaves `[lower, upper]`, 0 when inside.
    fn excess(lower: &Envelope, upper: &Envelope, w: &GridFunction) -> f64 {
        let grid = w.grid();
        let d = grid.delta();
        let mut worst: f64 = 0.0;
        for i in grid.interior_nodes() {
            let (lo, hi) = (lower.eval(d[i]), upper.eval(d[i]));
            let x = w.values()[i];
            worst = worst.max((lo - x) / lo).max((x - hi) / hi);
        }
        worst
    }

    pub fn u_excess(&self, u: &GridFunction) -> f64 {
        Self::excess(&self.u_lower, &self.u_upper, u)
    }

    pub fn v_excess(&self, v: &GridFunction) -> f64 {
        Self::excess(&self.v_lower, &self.v_upper, v)
    }

    /// `lower^(1 - theta) upper^theta` for both components.
    pub fn interpolate(&self, grid: &Arc<Grid>, theta: f64) -> (GridFunction, GridFunction) {
        let mix = |lo: &Envelope, hi: &Envelope| {
            GridFunction::from_fn(grid, |_, d| if d > 0.0 { lo.eval(d).powf(1.0 - theta) * hi.eval(d).powf(theta) } else { 0.0 })
        };
        (mix(&self.u_lower, &self.u_upper), mix(&self.v_lower, &self.v_upper))
    }

    fn check_ordered(&self, grid: &Grid) -> Result<(), SystemError> {
        for i in grid.interior_nodes() {
            let d = grid.delta()[i];
            if self.u_lower.eval(d) > self.u_upper.eval(d) || self.v_lower.eval(d) > self.v_upper.eval(d) {
                return Err(SystemError::Infeasible(format!("envelopes cross at node {i} (delta = {d:e})")));
            }
        }
        Ok(())
    }
}

const SUBCASE_TWO_A: f64 = 0.5 * (1.0 / std::f64::consts::E + 1.0);

/// Envelope shapes `(u_lower, u_upper, v_lower, v_upper)` with unit
/// coefficients and the free exponent used, for a quad under the first
/// existence case or the third.
fn envelope_shapes(quad: &ExponentQuad, subcase: Subcase) -> ([Envelope; 4], Option<f64>) {
    let lin = Envelope::shape(1.0);
    let gamma_v = (2.0 - quad.r) / (1.0 + quad.s);
    match subcase {
        Subcase::I => ([lin, lin, Envelope::shape(gamma_v), Envelope::shape(gamma_v)], None),
        Subcase::II => ([lin, lin, lin, Envelope::shape(1.0 - SUBCASE_TWO_A)], Some(SUBCASE_TWO_A)),
        Subcase::III => ([lin; 4], None),
        Subcase::IV => ([lin, Envelope::shape(1.0 - SUBCASE_TWO_A), lin, lin], Some(SUBCASE_TWO_A)),
        Subcase::V => {
            let a = 0.5 * (f64::max(0.0, (1.0 - quad.s) / quad.r) + 1.0);
            (
                [lin, Envelope::shape(a), Envelope::shape((2.0 - a * quad.r) / (1.0 + quad.s)), Envelope::shape(gamma_v)],
                Some(a),
            )
        }
        Subcase::VI => {
            let up = Envelope::shape(1.0 - SUBCASE_TWO_A);
            ([lin, up, lin, up], Some(SUBCASE_TWO_A))
        }
        Subcase::Case3 => {
            let (a, b) = classifier::case_three_powers(quad);
            ([Envelope::shape(a), Envelope::shape(a), Envelope::shape(b), Envelope::shape(b)], None)
        }
    }
}

/// Where the cone of `quad` comes from: the subcase, and whether the quad is
/// handled through its swap.
fn cone_source(quad: &ExponentQuad) -> Result<(Subcase, bool), SystemError> {
    let report = classifier::classify(quad);
    match report.existence {
        Some(ExistenceCase::E1) => Ok((classifier::case_one_subcase(quad).expect("E1 has a subcase"), false)),
        Some(ExistenceCase::E2) => Ok((classifier::case_one_subcase(&quad.swapped()).expect("E2 has a subcase"), true)),
        Some(ExistenceCase::E3) => Ok((Subcase::Case3, false)),
        None => Err(SystemError::UnsupportedRegime(format!(
            "(p, q, r, s) = ({}, {}, {}, {}) satisfies none of the existence conditions",
            quad.p, quad.q, quad.r, quad.s
        ))),
    }
}

/// Unit-coefficient envelope shapes for `quad`, already mirrored back when the
/// cone comes from the swapped quad.
pub fn cone_shapes(quad: &ExponentQuad) -> Result<(Subcase, [Envelope; 4], Option<f64>, bool), SystemError> {
    let (subcase, swap) = cone_source(quad)?;
    if swap {
        let ([ul, uu, vl, vu], a) = envelope_shapes(&quad.swapped(), subcase);
        Ok((subcase, [vl, vu, ul, uu], a, true))
    } else {
        let (sh, a) = envelope_shapes(quad, subcase);
        Ok((subcase, sh, a, false))
    }
}

pub fn cone_for_regime(quad: &ExponentQuad, c1: f64, c2: f64, grid: &Grid) -> Result<ConeSpec, SystemError> {
    if !(quad.det > 0.0) {
        return Err(SystemError::UnsupportedRegime(format!("determinant {} is not positive", quad.det)));
    }
    let (subcase, [ul, uu, vl, vu], free_a, mirrored) = cone_shapes(quad)?;
    let k = choose_cone_constants(c1, c2, quad)?;
    let cone = ConeSpec {
        u_lower: ul.scaled(k.m1),
        u_upper: uu.scaled(k.big_m1),
        v_lower: vl.scaled(k.m2),
        v_upper: vu.scaled(k.big_m2),
        constants: k,
        c1,
        c2,
        subcase,
        free_a,
        mirrored,
    };
    cone.check_ordered(grid)?;
    Ok(cone)
}

/// Frozen-coefficient loads `other^(-exponent)` at the unknowns.
fn frozen_loads(disc: &Discretization, other: &[f64], exponent: f64) -> Vec<f64> {
    (0..disc.unknowns()).map(|k| other[disc.node(k)].powf(-exponent)).collect()
}

/// One decoupled solve `F(w) = load w^-p`, warm-started from `start`.
fn decoupled_solve(
    disc: &Discretization,
    load: &[f64],
    p: f64,
    start: &[f64],
    opts: &SolverOptions,
) -> Result<Vec<f64>, ScalarError> {
    let mut x = disc.restrict(start);
    match scalar_solver::newton(disc, load, p, 0.0, &mut x, opts.tol, opts.max_iter) {
        Ok(_) => Ok(x),
        Err(e) if e.is_nonexistence_signal() => {
            let (x, ..) = scalar_solver::solve_load(disc, load, p, disc.restrict(start), opts)?;
            Ok(x)
        }
        Err(e) => Err(e),
    }
}

/// `c1 < 1 < c2` bounding the discrete prototype solutions against the
/// envelope shapes: `T` applied to the extreme shapes of the other component.
pub fn certify_envelope_constants(spec: &OperatorSpec, grid: &Arc<Grid>, quad: &ExponentQuad) -> Result<(f64, f64), SystemError> {
    let (_, [ul, uu, vl, vu], _, _) = cone_shapes(quad)?;
    let disc = Discretization::new(spec, grid)?;
    let opts = SolverOptions { refinement_check: None, ..SolverOptions::default() };
    let d = grid.delta();
    let profile = |e: &Envelope| -> Vec<f64> { d.iter().map(|&x| if x > 0.0 { e.eval(x) } else { 0.0 }).collect() };
    let (pu_l, pu_u, pv_l, pv_u) = (profile(&ul), profile(&uu), profile(&vl), profile(&vu));
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    // (frozen other component, exponent on it, own p, own lower shape, own upper shape)
    let jobs = [
        (&pv_u, quad.q, quad.p, &pu_l, true),
        (&pv_l, quad.q, quad.p, &pu_u, false),
        (&pu_u, quad.r, quad.s, &pv_l, true),
        (&pu_l, quad.r, quad.s, &pv_u, false),
    ];
    for (other, k, p, own, lower) in jobs {
        let load = frozen_loads(&disc, other, k);
        let x = decoupled_solve(&disc, &load, p, own, &opts)?;
        for (j, &w) in x.iter().enumerate() {
            let ratio = w / own[disc.node(j)];
            if lower {
                lo = lo.min(ratio);
            } else {
                hi = hi.max(ratio);
            }
        }
    }
    if !(lo > 0.0 && hi.is_finite()) {
        return Err(SystemError::Infeasible(format!("prototype ratios out of range: [{lo}, {hi}]")));
    }
    Ok((lo.min(0.5), hi.max(2.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PicardOptions {
    /// Relative sup-norm change between successive iterates.
    pub tol: f64,
    pub max_iter: usize,
    /// Project every iterate onto the envelopes.
    pub clamp: bool,
    /// Starting point `lower^(1 - theta) upper^theta`; `0.5` is the geometric mean.
    pub start_theta: f64,
}

impl Default for PicardOptions {
    fn default() -> Self {
        PicardOptions { tol: 1e-10, max_iter: 60, clamp: false, start_theta: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub change_u: f64,
    pub change_v: f64,
    pub u_excess: f64,
    pub v_excess: f64,
    pub in_cone: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SystemResidual {
    /// `sup delta^min(q,r) |F(u) - u^-p v^-q|`.
    pub residual_u: f64,
    pub residual_v: f64,
    pub unweighted_u: f64,
    pub unweighted_v: f64,
}

#[derive(Debug, Clone)]
pub struct SystemResult {
    pub u: GridFunction,
    pub v: GridFunction,
    pub picard_iterations: usize,
    pub residual: SystemResidual,
    pub stayed_in_cone: Vec<bool>,
    pub history: Vec<IterationRecord>,
    pub cone: ConeSpec,
}

#[derive(Debug, Clone, Serialize)]
pub struct SystemSummary {
    pub quad: ExponentQuad,
    pub subcase: Subcase,
    pub picard_iterations: usize,
    pub residual: SystemResidual,
    pub all_in_cone: bool,
    pub stayed_in_cone: Vec<bool>,
    /// Ratios of successive iterate changes.
    pub contraction_estimates: Vec<f64>,
    pub history: Vec<IterationRecord>,
    pub cone: ConeSpec,
}

impl SystemResult {
    pub fn all_in_cone(&self) -> bool {
        self.stayed_in_cone.iter().all(|&b| b)
    }

    pub fn contraction_estimates(&self) -> Vec<f64> {
        self.history
            .windows(2)
            .map(|w| w[1].change_u.max(w[1].change_v) / w[0].change_u.max(w[0].change_v))
            .collect()
    }

    pub fn summary(&self, quad: &ExponentQuad) -> SystemSummary {
        SystemSummary {
            quad: *quad,
            subcase: self.cone.subcase,
            picard_iterations: self.picard_iterations,
            residual: self.residual,
            all_in_cone: self.all_in_cone(),
            stayed_in_cone: self.stayed_in_cone.clone(),
            contraction_estimates: self.contraction_estimates(),
            history: self.history.clone(),
            cone: self.cone.clone(),
        }
    }
}

pub fn system_residual(
    spec: &OperatorSpec,
    grid: &Arc<Grid>,
    u: &GridFunction,
    v: &GridFunction,
    quad: &ExponentQuad,
) -> Result<SystemResidual, SystemError> {
    u.check_same_grid(v)?;
    if !u.grid().same_as(grid) {
        return Err(GeometryError::Mismatch.into());
    }
    let disc = Discretization::new(spec, grid)?;
    let (fu, fv) = (disc.apply(u.values()), disc.apply(v.values()));
    let weight_pow = quad.q.min(quad.r);
    let mut out = SystemResidual { residual_u: 0.0, residual_v: 0.0, unweighted_u: 0.0, unweighted_v: 0.0 };
    for k in 0..disc.unknowns() {
        let i = disc.node(k);
        let (a, b) = (u.values()[i], v.values()[i]);
        if !(a > 0.0) {
            return Err(SystemError::Positivity { component: "u", node: i });
        }
        if !(b > 0.0) {
            return Err(SystemError::Positivity { component: "v", node: i });
        }
        let ru = (fu[k] - a.powf(-quad.p) * b.powf(-quad.q)).abs();
        let rv = (fv[k] - a.powf(-quad.r) * b.powf(-quad.s)).abs();
        let w = grid.delta()[i].powf(weight_pow);
        out.unweighted_u = out.unweighted_u.max(ru);
        out.unweighted_v = out.unweighted_v.max(rv);
        out.residual_u = out.residual_u.max(w * ru);
        out.residual_v = out.residual_v.max(w * rv);
    }
    Ok(out)
}

fn rel_change(new: &[f64], old: &[f64]) -> f64 {
    let scale = new.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    new.iter().zip(old).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())) / scale
}

fn clamp_into(values: &mut [f64], grid: &Grid, lower: &Envelope, upper: &Envelope) {
    for i in grid.interior_nodes() {
        let d = grid.delta()[i];
        values[i] = values[i].clamp(lower.eval(d), upper.eval(d));
    }
}

/// Jacobi-Picard iteration; `observe` sees every iterate `(k, u_k, v_k)`,
/// starting with `k = 0`.
fn iterate(
    spec: &OperatorSpec,
    grid: &Arc<Grid>,
    quad: &ExponentQuad,
    cone: &ConeSpec,
    opts: &PicardOptions,
    mut observe: impl FnMut(usize, &GridFunction, &GridFunction),
) -> Result<SystemResult, SystemError> {
    if !(opts.tol > 0.0) || opts.max_iter == 0 || !(opts.start_theta >= 0.0 && opts.start_theta <= 1.0) {
        return Err(SystemError::Input(format!("bad Picard options {opts:?}")));
    }
    let disc = Discretization::new(spec, grid)?;
    let inner = SolverOptions { tol: (opts.tol * 1e-3).clamp(1e-14, 1e-10), refinement_check: None, ..SolverOptions::default() };
    let (mut u, mut v) = cone.interpolate(grid, opts.start_theta);
    observe(0, &u, &v);
    let mut history = Vec::new();
    let mut flags = Vec::new();
    let mut change = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let load_u = frozen_loads(&disc, v.values(), quad.q);
        let load_v = frozen_loads(&disc, u.values(), quad.r);
        let (nu, nv) = rayon::join(
            || decoupled_solve(&disc, &load_u, quad.p, u.values(), &inner),
            || decoupled_solve(&disc, &load_v, quad.s, v.values(), &inner),
        );
        let nu = nu.map_err(|source| SystemError::Decoupled { component: "u", iteration: it, source })?;
        let nv = nv.map_err(|source| SystemError::Decoupled { component: "v", iteration: it, source })?;
        let mut nu = disc.expand(&nu);
        let mut nv = disc.expand(&nv);
        let next_u = GridFunction::new(grid, nu.clone())?;
        let next_v = GridFunction::new(grid, nv.clone())?;
        let (ue, ve) = (cone.u_excess(&next_u), cone.v_excess(&next_v));
        let in_cone = ue <= 1e-9 && ve <= 1e-9;
        if opts.clamp {
            clamp_into(&mut nu, grid, &cone.u_lower, &cone.u_upper);
            clamp_into(&mut nv, grid, &cone.v_lower, &cone.v_upper);
        }
        let (cu, cv) = (rel_change(&nu, u.values()), rel_change(&nv, v.values()));
        change = cu.max(cv);
        u = GridFunction::new(grid, nu)?;
        v = GridFunction::new(grid, nv)?;
        observe(it, &u, &v);
        history.push(IterationRecord { iteration: it, change_u: cu, change_v: cv, u_excess: ue, v_excess: ve, in_cone });
        flags.push(in_cone);
        if change < opts.tol {
            let residual = system_residual(spec, grid, &u, &v, quad)?;
            return Ok(SystemResult { u, v, picard_iterations: it, residual, stayed_in_cone: flags, history, cone: cone.clone() });
        }
    }
    Err(SystemError::NoConvergence { iterations: opts.max_iter, change, u: Box::new(u), v: Box::new(v) })
}

pub fn picard_iterate(
    spec: &OperatorSpec,
    grid: &Arc<Grid>,
    quad: &ExponentQuad,
    cone: &ConeSpec,
    opts: &PicardOptions,
) -> Result<SystemResult, SystemError> {
    iterate(spec, grid, quad, cone, opts, |_, _, _| {})
}

/// Certifies envelope constants, builds the cone and iterates.
pub fn solve_system(spec: &OperatorSpec, grid: &Arc<Grid>, quad: &ExponentQuad, opts: &PicardOptions) -> Result<SystemResult, SystemError> {
    let (c1, c2) = certify_envelope_constants(spec, grid, quad)?;
    let cone = cone_for_regime(quad, c1, c2, grid)?;
    picard_iterate(spec, grid, quad, &cone, opts)
}

#[derive(Debug, Clone, Serialize)]
pub struct UniquenessReport {
    /// Sup-norm distance of the two limits, per component.
    pub limit_distance_u: f64,
    pub limit_distance_v: f64,
    /// `max |ln u1 - ln u2|, max |ln v1 - ln v2|` after each step.
    pub log_distance: Vec<f64>,
    /// `d_(k+2) / d_k` over one full `u -> v -> u` cycle.
    pub cycle_contraction: Vec<f64>,
    /// Largest cycle ratio once the distance is above the noise level.
    pub empirical_contraction: f64,
    pub predicted_contraction: f64,
    pub iterations: (usize, usize),
}

fn log_distance(a: &GridFunction, b: &GridFunction) -> f64 {
    a.grid()
        .interior_nodes()
        .into_iter()
        .map(|i| (a.values()[i].ln() - b.values()[i].ln()).abs())
        .fold(0.0, f64::max)
}

/// Runs the iteration from the cone points `theta = 1/4` and `theta = 3/4`
/// and compares the two trajectories.
pub fn uniqueness_probe(spec: &OperatorSpec, grid: &Arc<Grid>, quad: &ExponentQuad, tol: f64) -> Result<UniquenessReport, SystemError> {
    let report = classifier::classify(quad);
    if !report.unique {
        return Err(SystemError::UnsupportedRegime(format!(
            "(p, q, r, s) = ({}, {}, {}, {}) meets neither uniqueness condition",
            quad.p, quad.q, quad.r, quad.s
        )));
    }
    let (c1, c2) = certify_envelope_constants(spec, grid, quad)?;
    let cone = cone_for_regime(quad, c1, c2, grid)?;
    let run = |theta: f64| -> Result<(SystemResult, Vec<(GridFunction, GridFunction)>), SystemError> {
        let mut traj = Vec::new();
        let opts = PicardOptions { tol, start_theta: theta, ..PicardOptions::default() };
        let res = iterate(spec, grid, quad, &cone, &opts, |_, u, v| traj.push((u.clone(), v.clone())))?;
        Ok((res, traj))
    };
    let (a, ta) = run(0.25)?;
    let (b, tb) = run(0.75)?;
    let dist = |x: &GridFunction, y: &GridFunction| x.values().iter().zip(y.values()).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
    let steps = ta.len().min(tb.len());
    let log_d: Vec<f64> =
        (0..steps).map(|k| log_distance(&ta[k].0, &tb[k].0).max(log_distance(&ta[k].1, &tb[k].1))).collect();
    let cycle: Vec<f64> = (2..steps).map(|k| log_d[k] / log_d[k - 2]).collect();
    let noise = 1e3 * tol;
    let empirical = (2..steps).filter(|&k| log_d[k] > noise).map(|k| log_d[k] / log_d[k - 2]).fold(0.0, f64::max);
    Ok(UniquenessReport {
        limit_distance_u: dist(&a.u, &b.u),
        limit_distance_v: dist(&a.v, &b.v),
        log_distance: log_d,
        cycle_contraction: cycle,
        empirical_contraction: empirical,
        predicted_contraction: quad.contraction_exponent(),
        iterations: (a.picard_iterations, b.picard_iterations),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_grid, Domain, Grading};

    fn quad(p: f64, q: f64, r: f64, s: f64) -> ExponentQuad {
        ExponentQuad::new(p, q, r, s).unwrap()
    }

    #[test]
    fn constants_satisfy_inequalities() {
        let qd = quad(0.25, 0.25, 0.25, 0.25);
        let k = choose_cone_constants(0.5, 2.0, &qd).unwrap();
        assert!(k.slack(0.5, 2.0, &qd) > 0.0);
        // log-spaced grid search finds the feasible region around the returned point
        let mut hits = 0;
        for i in 0..40 {
            for j in 0..40 {
                let big = (0.2 * i as f64).exp();
                let small = (-0.2 * j as f64).exp();
                let c = ConeConstants { m1: small, big_m1: big, m2: small, big_m2: big, margin: k.margin };
                if c.slack(0.5, 2.0, &qd) >= 0.0 {
                    hits += 1;
                }
            }
        }
        assert!(hits > 0);
        assert!(choose_cone_constants(0.5, 0.5, &qd).is_err());
        let thin = choose_cone_constants(0.5, 2.0, &quad(0.0, 0.99, 0.99, 0.0)).unwrap();
        assert!(thin.margin < 0.02);
        assert!(choose_cone_constants(0.5, 2.0, &quad(0.0, 1.0, 1.0, 0.0)).is_err());
    }

    #[test]
    fn subcase_envelopes() {
        let g = build_grid(Domain::interval(0.0, 1.0).unwrap(), 50, Grading::Uniform).unwrap();
        let c = cone_for_regime(&quad(0.25, 0.25, 0.25, 0.25), 0.5, 2.0, &g).unwrap();
        assert_eq!(c.subcase, Subcase::III);
        assert_eq!((c.u_lower.pow, c.v_upper.pow), (1.0, 1.0));
        let c = cone_for_regime(&quad(0.1, 0.3, 1.2, 0.2), 0.5, 2.0, &g).unwrap();
        assert_eq!(c.subcase, Subcase::I);
        assert!((c.v_lower.pow - 2.0 / 3.0).abs() < 1e-12);
        let c = cone_for_regime(&quad(0.5, 0.5, 0.3, 0.3), 0.5, 2.0, &g).unwrap();
        assert_eq!(c.subcase, Subcase::IV);
        assert!(matches!(cone_for_regime(&quad(0.0, 2.0, 0.5, 0.0), 0.5, 2.0, &g), Err(SystemError::UnsupportedRegime(_))));
    }

    #[test]
    fn symmetric_instance_gives_equal_components() {
        let g = Arc::new(build_grid(Domain::interval(0.0, 1.0).unwrap(), 100, Grading::Uniform).unwrap());
        let qd = quad(0.3, 0.2, 0.2, 0.3);
        let res = solve_system(&OperatorSpec::laplacian(), &g, &qd, &PicardOptions::default()).unwrap();
        let gap = res.u.values().iter().zip(res.v.values()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(gap < 1e-9, "{gap}");
        assert!(res.all_in_cone());
        assert!(res.residual.residual_u < 1e-6);
    }
}
