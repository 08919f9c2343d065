//! The acceptance suite: ten self-contained checks, each reduced to one
//! pass/fail line with the measured numbers.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::barrier;
use crate::classifier::{self, ExistenceCase, ExponentQuad, NonexistenceCase, Subcase, SweepRange};
use crate::eigensolver;
use crate::geometry::{build_grid, Domain, Grading, Grid, GridFunction};
use crate::operators::{evaluate_f, pucci_minus, pucci_plus, Field, HessianData, OperatorSpec, PucciSign, SymMat};
use crate::oracle;
use crate::rates::{self, RateModel, RateSpec};
use crate::scalar_solver::{self, Finiteness, LoadRule, SolverOptions, WeightSpec};
use crate::system_solver::{self, PicardOptions};

pub const CRITERIA: usize = 10;

/// Criteria expected to fail: the discrete problem has a solution for every n
/// where the continuous one has none, and its boundary ratio grows with n.
pub const UNATTAINABLE: [usize; 1] = [5];

#[derive(Debug, Clone, Serialize)]
pub struct CriterionOutcome {
    pub id: usize,
    pub name: &'static str,
    pub pass: bool,
    pub details: Vec<String>,
}

impl fmt::Display for CriterionOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {:>2} {}: {}", if self.pass { "PASS" } else { "FAIL" }, self.id, self.name, self.details.join("; "))
    }
}

/// Accumulates sub-checks of one criterion.
struct Checks {
    pass: bool,
    details: Vec<String>,
}

impl Checks {
    fn new() -> Self {
        Checks { pass: true, details: Vec::new() }
    }

    fn check(&mut self, ok: bool, detail: String) {
        self.pass &= ok;
        self.details.push(if ok { detail } else { format!("FAILED {detail}") });
    }

    fn fail(&mut self, detail: String) {
        self.check(false, detail);
    }

    fn finish(self, id: usize, name: &'static str) -> CriterionOutcome {
        CriterionOutcome { id, name, pass: self.pass, details: self.details }
    }
}

pub fn criterion_name(id: usize) -> &'static str {
    match id {
        1 => "operator axioms",
        2 => "principal eigenpair",
        3 => "barrier ODE",
        4 => "scalar boundary rates",
        5 => "non-existence reflection",
        6 => "pure-log dichotomy",
        7 => "system solve",
        8 => "uniqueness contraction",
        9 => "classifier",
        10 => "C1 probe consistency",
        _ => "unknown",
    }
}

/// Runs criterion `id` (1 to 10).
pub fn run_criterion(id: usize) -> CriterionOutcome {
    let name = criterion_name(id);
    let checks = match id {
        1 => operator_axioms(),
        2 => eigenpair(),
        3 => barrier_ode(),
        4 => scalar_rates(),
        5 => nonexistence_reflection(),
        6 => pure_log(),
        7 => system_solve(),
        8 => uniqueness(),
        9 => classifier_checks(),
        10 => c1_probe(),
        _ => {
            let mut c = Checks::new();
            c.fail(format!("no criterion {id}"));
            c
        }
    };
    checks.finish(id, name)
}

fn interval(n: usize, grading: Grading) -> Arc<Grid> {
    Arc::new(build_grid(Domain::interval(0.0, 1.0).expect("unit interval"), n, grading).expect("grid"))
}

fn random_sym(rng: &mut ChaCha8Rng) -> SymMat {
    SymMat::new2(rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0))
}

fn norm(m: &SymMat) -> f64 {
    m.xx.abs() + 2.0 * m.xy.abs() + m.yy.abs()
}

const AXIOM_SAMPLES: usize = 1000;

fn operator_axioms() -> Checks {
    let mut c = Checks::new();
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    let (lambda, big_lambda) = (1.0, 2.0);
    let mut duality = 0;
    let mut subadd = 0;
    let mut homog = 0;
    let mut sandwich = 0;
    let (gamma_drift, gamma_zeroth) = (0.7, 1.3);
    for k in 0..AXIOM_SAMPLES {
        let m = random_sym(&mut rng);
        let n = random_sym(&mut rng);
        let scale = 1.0 + norm(&m) + norm(&n);
        if (pucci_plus(&m.scale(-1.0), lambda, big_lambda) + pucci_minus(&m, lambda, big_lambda)).abs() > 1e-12 * scale {
            duality += 1;
        }
        if pucci_plus(&m.add(&n), lambda, big_lambda) > pucci_plus(&m, lambda, big_lambda) + pucci_plus(&n, lambda, big_lambda) + 1e-12 * scale {
            subadd += 1;
        }
        // one member of the model family per sample: Pucci part, drift |b| <= Gamma, 0 <= c <= gamma
        let sign = if k % 2 == 0 { PucciSign::Plus } else { PucciSign::Minus };
        let angle: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let bmag = rng.random_range(0.0..gamma_drift);
        let zeroth = rng.random_range(0.0..gamma_zeroth);
        let spec = OperatorSpec::pucci(lambda, big_lambda, sign)
            .expect("valid constants")
            .with_drift(gamma_drift, Field::Constant([bmag * angle.cos(), bmag * angle.sin()]))
            .with_zeroth(gamma_zeroth, Field::Constant(zeroth));
        let point = |mat: SymMat, rng: &mut ChaCha8Rng| HessianData {
            matrix: mat,
            gradient: [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)],
            value: rng.random_range(-5.0..5.0),
            location: vec![0.3, 0.4],
        };
        let x = point(m, &mut rng);
        let y = point(n, &mut rng);
        let fx = evaluate_f(&spec, &x);
        for t in [0.0, 0.5, 3.5] {
            let tx = HessianData {
                matrix: x.matrix.scale(t),
                gradient: [t * x.gradient[0], t * x.gradient[1]],
                value: t * x.value,
                location: x.location.clone(),
            };
            if (evaluate_f(&spec, &tx) - t * fx).abs() > 1e-12 * scale * (1.0 + t) {
                homog += 1;
            }
        }
        let diff = fx - evaluate_f(&spec, &y);
        let dm = x.matrix.sub(&y.matrix);
        let dp = ((x.gradient[0] - y.gradient[0]).powi(2) + (x.gradient[1] - y.gradient[1]).powi(2)).sqrt();
        let dr = x.value - y.value;
        let lo = pucci_minus(&dm, lambda, big_lambda) - gamma_drift * dp - gamma_zeroth * (-dr).max(0.0);
        let hi = pucci_plus(&dm, lambda, big_lambda) + gamma_drift * dp + gamma_zeroth * dr.max(0.0);
        if diff < lo - 1e-12 * scale || diff > hi + 1e-12 * scale {
            sandwich += 1;
        }
    }
    c.check(duality == 0, format!("duality violations {duality}/{AXIOM_SAMPLES}"));
    c.check(subadd == 0, format!("subadditivity violations {subadd}/{AXIOM_SAMPLES}"));
    c.check(homog == 0, format!("homogeneity violations {homog}/{}", 3 * AXIOM_SAMPLES));
    c.check(sandwich == 0, format!("sandwich violations {sandwich}/{AXIOM_SAMPLES}"));
    c
}

fn eigenpair() -> Checks {
    let mut c = Checks::new();
    let pi = std::f64::consts::PI;
    let g = Arc::new(build_grid(Domain::interval(0.0, pi).expect("interval"), 400, Grading::Uniform).expect("grid"));
    match eigensolver::principal_eigenpair(&OperatorSpec::laplacian(), &g, 1e-10, 200) {
        Ok(pair) => {
            c.check((pair.mu - 1.0).abs() < 1e-3, format!("mu(0,pi) = {:.6}", pair.mu));
            let b = eigensolver::verify_eigen_bounds(&pair);
            c.check(
                b.c_low > 0.0 && b.c_low <= b.c_high && b.c_low >= 0.6,
                format!("C_low = {:.4} (sine oracle {:.4}), C_high = {:.4}", b.c_low, 2.0 / pi, b.c_high),
            );
        }
        Err(e) => c.fail(format!("eigensolver on (0,pi): {e}")),
    }
    let spec = OperatorSpec::pucci(1.0, 2.0, PucciSign::Plus).expect("valid constants");
    match eigensolver::principal_eigenpair(&spec, &interval(400, Grading::Uniform), 1e-10, 200) {
        Ok(pair) => {
            let ex = 2.0 * pi * pi;
            c.check((pair.mu - ex).abs() / ex < 1e-2, format!("Pucci mu = {:.4} vs {:.4}", pair.mu, ex));
        }
        Err(e) => c.fail(format!("Pucci eigensolver: {e}")),
    }
    c
}

fn barrier_ode() -> Checks {
    let mut c = Checks::new();
    match barrier::solve_barrier_ode(0.3, 0.4, 0.5, 2000) {
        Ok(sol) => {
            let p = &sol.props;
            c.check(
                p.con_ok && p.linear_bounds_ok == Some(true) && p.hp_bound_ok,
                format!("(0.3,0.4): con {} Lip {:?} hp {} (C1 = {:.3})", p.con_ok, p.linear_bounds_ok, p.hp_bound_ok, p.hp_constant),
            );
        }
        Err(e) => c.fail(format!("(0.3,0.4): {e}")),
    }
    match barrier::solve_barrier_ode(0.6, 0.4, 0.5, 2000) {
        Ok(sol) => {
            let ex = 1.0 / (2.0 - 0.6);
            match sol.props.log_rate {
                Some(th) => c.check((th - ex).abs() <= 0.05 * ex, format!("(0.6,0.4): log exponent {th:.4} vs {ex:.4}")),
                None => c.fail("(0.6,0.4): no log exponent fitted".into()),
            }
        }
        Err(e) => c.fail(format!("(0.6,0.4): {e}")),
    }
    let mut worst: f64 = 0.0;
    for alpha in [0.3, 0.5, 0.9] {
        match barrier::solve_barrier_ode(alpha, 0.0, 0.5, 200) {
            Ok(sol) => {
                for (&t, &h) in sol.ts.iter().zip(&sol.h).step_by(10) {
                    match oracle::barrier_beta_zero(alpha, 0.5, t) {
                        Ok(ex) => worst = worst.max(((h - ex) / ex).abs()),
                        Err(e) => {
                            c.fail(format!("oracle alpha {alpha}: {e}"));
                            return c;
                        }
                    }
                }
            }
            Err(e) => c.fail(format!("beta = 0, alpha {alpha}: {e}")),
        }
    }
    c.check(worst < 1e-6, format!("beta = 0 vs quadrature: max rel err {worst:.2e}"));
    c
}

fn describe_fit(fit: &rates::RateFit, cmp: &rates::RateComparison) -> String {
    let mut out = format!(
        "{} fit: power {:.4}, log power {:.4}, R^2 {:.5}",
        fit.model.name(),
        fit.fitted_power,
        fit.fitted_logpow,
        fit.r_squared
    );
    if let Some(d) = &cmp.diagnostic {
        out.push_str(&format!(" ({d})"));
    }
    out
}

fn scalar_options() -> SolverOptions {
    SolverOptions { refinement_check: None, ..SolverOptions::default() }
}

/// The scalar instances of the rate check: `(p, q, predicted rate, power tol, logpow tol)`.
fn scalar_instances() -> Vec<(f64, f64, RateSpec, f64, f64)> {
    vec![
        (0.2, 0.3, RateSpec::linear(), 0.05, 0.05),
        (0.5, 0.5, RateSpec::linear_logpow(2.0 / 3.0, 1.0), 0.05, 0.05),
        (3.0, 0.5, RateSpec::power(0.375), 0.02, 0.02),
    ]
}

fn scalar_rates() -> Checks {
    let mut c = Checks::new();
    let g = interval(1600, Grading::BoundaryGraded { strength: 4.0 });
    for (p, q, pred, tp, tl) in scalar_instances() {
        let weight = WeightSpec::power(q);
        match classifier::predicted_rate_for_weight(p, &weight) {
            Ok(model) if model.model == pred.model && (model.power - pred.power).abs() < 1e-12 && (model.logpow - pred.logpow).abs() < 1e-12 => {}
            other => c.fail(format!("({p},{q}): classifier prediction {other:?} differs from {pred:?}")),
        }
        let res = match scalar_solver::solve_scalar_singular(&OperatorSpec::laplacian(), &g, p, &weight, &scalar_options()) {
            Ok(r) => r,
            Err(e) => {
                c.fail(format!("({p},{q}): {e}"));
                continue;
            }
        };
        match rates::fit_rate(&res.u, &pred, None) {
            Ok(fit) => {
                let cmp = rates::compare(&fit, &pred, tp, tl);
                c.check(cmp.pass, format!("({p},{q}) {}", describe_fit(&fit, &cmp)));
            }
            Err(e) => c.fail(format!("({p},{q}) fit: {e}")),
        }
        match oracle::IntervalShot::new(p, q, 100_000, 1e-14) {
            Ok(shot) => {
                let err = g.delta().iter().zip(res.u.values()).map(|(&d, &u)| (shot.eval(d) - u).abs()).fold(0.0, f64::max);
                c.check(err < 1e-3, format!("({p},{q}) shooting oracle sup err {err:.2e}"));
            }
            Err(e) => c.fail(format!("({p},{q}) oracle: {e}")),
        }
    }
    c
}

fn nonexistence_reflection() -> Checks {
    let mut c = Checks::new();
    let weight = WeightSpec::power(2.0);
    let mut ratios = Vec::new();
    for n in [200, 400, 800] {
        let g = interval(n, Grading::Uniform);
        match scalar_solver::solve_scalar_singular(&OperatorSpec::laplacian(), &g, 0.0, &weight, &SolverOptions::default()) {
            Ok(r) => c.fail(format!("n = {n}: converged (sup {:.4}), no divergence reported", r.u.sup_norm())),
            Err(e) if e.is_nonexistence_signal() => {
                c.check(true, format!("n = {n}: {e}"));
                if let Some(u) = e.partial() {
                    ratios.push((n, scalar_solver::lower_bound_check(u, scalar_solver::LowerBoundKind::Linear).constant));
                }
            }
            Err(e) => c.fail(format!("n = {n}: unexpected error {e}")),
        }
    }
    let decreasing = ratios.len() == 3 && ratios.windows(2).all(|w| w[1].1 < w[0].1);
    let shown: Vec<String> = ratios.iter().map(|(n, r)| format!("{n}: {r:.3}")).collect();
    c.check(decreasing, format!("layer ratio min u/delta by n [{}] must decrease", shown.join(", ")));
    c
}

fn pure_log() -> Checks {
    let mut c = Checks::new();
    let g = interval(1600, Grading::BoundaryGraded { strength: 4.0 });
    let opts = SolverOptions { load_rule: LoadRule::Galerkin, ..SolverOptions::default() };
    let scale = 100.0;
    let w = WeightSpec::power_log(2.0, 1.5, scale);
    let verdict = scalar_solver::integral_criterion(&w);
    c.check(verdict.verdict == Finiteness::Finite, format!("a = 1.5 integral {:?}", verdict.verdict));
    match scalar_solver::solve_scalar_singular(&OperatorSpec::laplacian(), &g, 0.0, &w, &opts) {
        Ok(r) => match classifier::predicted_rate_for_weight(0.0, &w) {
            Ok(pred) => match rates::fit_rate(&r.u, &pred, None) {
                Ok(fit) => {
                    let ex = pred.logpow;
                    let rel = ((fit.fitted_logpow - ex) / ex).abs();
                    c.check(
                        pred.model == RateModel::PowerOfLog && rel <= 0.1,
                        format!("a = 1.5 log exponent {:.4} vs {ex:.4} ({:.1}%)", fit.fitted_logpow, 100.0 * rel),
                    );
                }
                Err(e) => c.fail(format!("a = 1.5 fit: {e}")),
            },
            Err(e) => c.fail(format!("a = 1.5 prediction: {e}")),
        },
        Err(e) => c.fail(format!("a = 1.5 solve: {e}")),
    }
    let w = WeightSpec::power_log(2.0, 0.5, scale);
    let verdict = scalar_solver::integral_criterion(&w);
    c.check(
        verdict.verdict == Finiteness::Infinite && verdict.quadrature == Finiteness::Infinite,
        format!("a = 0.5 integral {:?} (quadrature {:?})", verdict.verdict, verdict.quadrature),
    );
    match scalar_solver::solve_scalar_singular(&OperatorSpec::laplacian(), &g, 0.0, &w, &opts) {
        Ok(_) => c.fail("a = 0.5: solver converged".into()),
        Err(e) => c.check(e.is_nonexistence_signal(), format!("a = 0.5: {e}")),
    }
    c
}

fn system_grid() -> Arc<Grid> {
    interval(800, Grading::BoundaryGraded { strength: 2.0 })
}

const SYSTEM_TOL: f64 = 1e-10;

fn system_options() -> PicardOptions {
    PicardOptions { tol: SYSTEM_TOL, max_iter: 60, ..PicardOptions::default() }
}

/// System instances of the acceptance suite.
fn system_instances() -> [ExponentQuad; 2] {
    [ExponentQuad::new(0.25, 0.25, 0.25, 0.25).expect("quad"), ExponentQuad::new(0.1, 0.3, 1.2, 0.2).expect("quad")]
}

fn system_solve() -> Checks {
    let mut c = Checks::new();
    let g = system_grid();
    for (k, quad) in system_instances().iter().enumerate() {
        let tag = format!("({}, {}, {}, {})", quad.p, quad.q, quad.r, quad.s);
        let res = match system_solver::solve_system(&OperatorSpec::laplacian(), &g, quad, &system_options()) {
            Ok(r) => r,
            Err(e) => {
                c.fail(format!("{tag}: {e}"));
                continue;
            }
        };
        let rr = res.residual;
        c.check(
            res.picard_iterations <= 60 && rr.residual_u < 1e-6 && rr.residual_v < 1e-6 && res.all_in_cone(),
            format!(
                "{tag} subcase {}: {} iterations, weighted residuals {:.1e}/{:.1e}, in cone {}",
                res.cone.subcase,
                res.picard_iterations,
                rr.residual_u,
                rr.residual_v,
                res.all_in_cone()
            ),
        );
        let report = classifier::classify(quad);
        let (Some(ru), Some(rv)) = (report.rate_u, report.rate_v) else {
            c.fail(format!("{tag}: no rate prediction"));
            continue;
        };
        // the first instance checks both components, the second the v envelope power
        let targets: Vec<(&str, &GridFunction, RateSpec)> = if k == 0 { vec![("u", &res.u, ru), ("v", &res.v, rv)] } else { vec![("v", &res.v, rv)] };
        if k == 1 {
            c.check((rv.power - 2.0 / 3.0).abs() < 1e-12, format!("{tag}: predicted v power {:.4}", rv.power));
        }
        for (name, w, pred) in targets {
            match rates::fit_rate(w, &pred, None) {
                Ok(fit) => {
                    let cmp = rates::compare(&fit, &pred, 0.05, 0.05);
                    c.check(cmp.pass, format!("{tag} {name} {}", describe_fit(&fit, &cmp)));
                }
                Err(e) => c.fail(format!("{tag} {name} fit: {e}")),
            }
        }
    }
    c
}

fn uniqueness() -> Checks {
    let mut c = Checks::new();
    let quad = system_instances()[0];
    match system_solver::uniqueness_probe(&OperatorSpec::laplacian(), &system_grid(), &quad, SYSTEM_TOL) {
        Ok(rep) => {
            let d = rep.limit_distance_u.max(rep.limit_distance_v);
            c.check(d <= 10.0 * SYSTEM_TOL, format!("limit distance {d:.2e} (bound {:.0e})", 10.0 * SYSTEM_TOL));
            c.check(
                rep.empirical_contraction <= rep.predicted_contraction + 0.05,
                format!("cycle contraction {:.4} vs exponent {:.4} + 0.05", rep.empirical_contraction, rep.predicted_contraction),
            );
        }
        Err(e) => c.fail(format!("{e}")),
    }
    c
}

/// Hand-checked expectations: `(quad, nonexistence, existence, subcase, u_c1, v_c1, unique)`.
#[allow(clippy::type_complexity)]
pub fn golden_table() -> Vec<((f64, f64, f64, f64), Option<NonexistenceCase>, Option<ExistenceCase>, Option<Subcase>, bool, bool, bool)> {
    use ExistenceCase::*;
    use NonexistenceCase::*;
    vec![
        ((0.0, 0.5, 2.0, 0.0), Some(N1), None, None, false, false, false),
        ((0.25, 0.25, 0.25, 0.25), None, Some(E1), Some(Subcase::III), true, true, true),
        ((2.0, 0.5, 0.9, 0.0), None, Some(E2), Some(Subcase::I), false, true, true),
        ((0.1, 0.3, 1.2, 0.2), None, Some(E1), Some(Subcase::I), true, false, true),
        ((0.5, 0.5, 0.3, 0.3), None, Some(E1), Some(Subcase::IV), false, true, true),
        ((0.0, 0.5, 0.5, 0.0), None, Some(E1), Some(Subcase::III), true, true, true),
        ((1.0, 1.0, 1.0, 1.0), None, Some(E3), Some(Subcase::Case3), false, false, false),
        ((3.0, 3.0, 2.5, 0.0), Some(N3), None, None, false, false, false),
        ((0.0, 2.0, 0.5, 0.0), Some(N2), None, None, false, false, false),
        ((0.2, 0.3, 0.5, 0.5), None, Some(E1), Some(Subcase::II), true, false, true),
        ((0.5, 0.5, 0.5, 0.5), None, Some(E1), Some(Subcase::VI), false, false, false),
        ((0.5, 0.75, 1.0, 0.5), None, Some(E1), Some(Subcase::V), false, false, false),
    ]
}

pub fn acceptance_sweep() -> Result<Vec<classifier::RegimeReport>, classifier::ClassifierError> {
    let outer = SweepRange { lo: 0.0, hi: 3.0, step: 0.375 };
    let inner = SweepRange { lo: 0.375, hi: 3.375, step: 0.375 };
    classifier::sweep(&outer, &inner, &inner, &outer)
}

fn classifier_checks() -> Checks {
    let mut c = Checks::new();
    match acceptance_sweep() {
        Ok(reports) => {
            let asym: Vec<String> = reports
                .iter()
                .filter(|r| !classifier::classify(&r.quad.swapped()).same_flags(&r.mirrored()))
                .map(|r| format!("({},{},{},{})", r.quad.p, r.quad.q, r.quad.r, r.quad.s))
                .collect();
            let conflicts: Vec<String> = reports
                .iter()
                .filter(|r| r.conflicting())
                .map(|r| format!("({},{},{},{})", r.quad.p, r.quad.q, r.quad.r, r.quad.s))
                .collect();
            c.check(reports.len() == 6561 && asym.is_empty(), format!("{} quads, asymmetric rows {} {:?}", reports.len(), asym.len(), asym.iter().take(5).collect::<Vec<_>>()));
            c.check(conflicts.is_empty(), format!("overlapping existence/non-existence rows {} {:?}", conflicts.len(), conflicts.iter().take(5).collect::<Vec<_>>()));
        }
        Err(e) => c.fail(format!("sweep: {e}")),
    }
    let mut mismatches = Vec::new();
    let table = golden_table();
    for ((p, q, r, s), n, e, sub, uc, vc, un) in &table {
        let quad = match ExponentQuad::new(*p, *q, *r, *s) {
            Ok(x) => x,
            Err(err) => {
                mismatches.push(format!("({p},{q},{r},{s}): {err}"));
                continue;
            }
        };
        let rep = classifier::classify(&quad);
        let got = (rep.nonexistence, rep.existence, rep.subcase, rep.u_c1, rep.v_c1, rep.unique);
        if got != (*n, *e, *sub, *uc, *vc, *un) {
            mismatches.push(format!("({p},{q},{r},{s}): got {got:?}"));
        }
    }
    c.check(mismatches.is_empty(), format!("golden table {}/{} match {:?}", table.len() - mismatches.len(), table.len(), mismatches));
    c
}

/// One solved profile for the probe consistency check.
fn probe_row(c: &mut Checks, tag: &str, u: &GridFunction, pred: &RateSpec, theorem_c1: bool) {
    let fit = match rates::fit_rate(u, pred, None) {
        Ok(f) => f,
        Err(e) => {
            c.fail(format!("{tag} fit: {e}"));
            return;
        }
    };
    let probe = match rates::normal_derivative_probe(u) {
        Ok(p) => p,
        Err(e) => {
            c.fail(format!("{tag} probe: {e}"));
            return;
        }
    };
    let sub = fit.is_sublinear(0.05);
    c.check(
        probe.finite == !sub && probe.finite == theorem_c1,
        format!("{tag}: probe finite {} (growth {:.2}), sublinear fit {sub}, theorem C1 {theorem_c1}", probe.finite, probe.growth),
    );
}

fn c1_probe() -> Checks {
    let mut c = Checks::new();
    let g = interval(1600, Grading::BoundaryGraded { strength: 4.0 });
    for (p, q, pred, _, _) in scalar_instances() {
        match scalar_solver::solve_scalar_singular(&OperatorSpec::laplacian(), &g, p, &WeightSpec::power(q), &scalar_options()) {
            Ok(r) => probe_row(&mut c, &format!("scalar ({p},{q})"), &r.u, &pred, p + q < 1.0),
            Err(e) => c.fail(format!("scalar ({p},{q}): {e}")),
        }
    }
    let sg = system_grid();
    for quad in system_instances() {
        let tag = format!("system ({}, {}, {}, {})", quad.p, quad.q, quad.r, quad.s);
        let rep = classifier::classify(&quad);
        match (system_solver::solve_system(&OperatorSpec::laplacian(), &sg, &quad, &system_options()), rep.rate_u, rep.rate_v) {
            (Ok(r), Some(ru), Some(rv)) => {
                probe_row(&mut c, &format!("{tag} u"), &r.u, &ru, rep.u_c1);
                probe_row(&mut c, &format!("{tag} v"), &r.v, &rv, rep.v_c1);
            }
            (Err(e), ..) => c.fail(format!("{tag}: {e}")),
            _ => c.fail(format!("{tag}: no rate prediction")),
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_quads_are_valid() {
        for (q, ..) in golden_table() {
            assert!(ExponentQuad::new(q.0, q.1, q.2, q.3).is_ok());
        }
    }

    #[test]
    fn unknown_criterion_fails() {
        assert!(!run_criterion(11).pass);
    }
}
