//! Classification of exponent quads `(p, q, r, s)` into non-existence,
//! existence, C1-regularity and uniqueness regimes, with predicted boundary
//! rates.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rates::{RateModel, RateSpec};
use crate::scalar_solver::{WeightForm, WeightSpec};

/// Tolerance for the equalities and strict inequalities of the regime tests.
pub const EQ_TOL: f64 = 1e-12;

fn lt(a: f64, b: f64) -> bool {
    a < b - EQ_TOL
}
fn le(a: f64, b: f64) -> bool {
    a <= b + EQ_TOL
}
fn eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= EQ_TOL
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassifierError {
    #[error("invalid exponents: {0}")]
    Quad(String),
    #[error("no solution: {0}")]
    NoSolution(String),
    #[error("invalid sweep range: {0}")]
    Range(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct QuadInput {
    p: f64,
    q: f64,
    r: f64,
    s: f64,
}

/// Exponents of `F(u) = u^-p v^-q`, `F(v) = u^-r v^-s` with the derived
/// determinant and regime exponents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "QuadInput")]
pub struct ExponentQuad {
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub s: f64,
    pub det: f64,
    pub alpha_reg: f64,
    pub beta_reg: f64,
}

impl TryFrom<QuadInput> for ExponentQuad {
    type Error = ClassifierError;
    fn try_from(v: QuadInput) -> Result<Self, Self::Error> {
        ExponentQuad::new(v.p, v.q, v.r, v.s)
    }
}

impl ExponentQuad {
    pub fn new(p: f64, q: f64, r: f64, s: f64) -> Result<Self, ClassifierError> {
        if ![p, q, r, s].iter().all(|v| v.is_finite()) {
            return Err(ClassifierError::Quad("exponents must be finite".into()));
        }
        if p < 0.0 || s < 0.0 {
            return Err(ClassifierError::Quad(format!("p and s must be >= 0, got p = {p}, s = {s}")));
        }
        if !(q > 0.0 && r > 0.0) {
            return Err(ClassifierError::Quad(format!("q and r must be > 0, got q = {q}, r = {r}")));
        }
        Ok(ExponentQuad {
            p,
            q,
            r,
            s,
            det: (1.0 + p) * (1.0 + s) - q * r,
            alpha_reg: p + q * f64::min(1.0, (2.0 - r) / (1.0 + s)),
            beta_reg: s + r * f64::min(1.0, (2.0 - q) / (1.0 + p)),
        })
    }

    /// `(v, u)` roles exchanged: `(p, q, r, s) -> (s, r, q, p)`.
    pub fn swapped(&self) -> Self {
        ExponentQuad::new(self.s, self.r, self.q, self.p).expect("swap keeps a valid quad valid")
    }

    /// The alternative `alpha = (p + q) min{1, (2 - r) / (1 + s)}` and its mirror.
    pub fn alt_alpha_beta(&self) -> (f64, f64) {
        (
            (self.p + self.q) * f64::min(1.0, (2.0 - self.r) / (1.0 + self.s)),
            (self.r + self.s) * f64::min(1.0, (2.0 - self.q) / (1.0 + self.p)),
        )
    }

    /// Contraction exponent `qr / ((1 + p)(1 + s))` of the uniqueness argument.
    pub fn contraction_exponent(&self) -> f64 {
        self.q * self.r / ((1.0 + self.p) * (1.0 + self.s))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NonexistenceCase {
    N1,
    N2,
    N3,
    N4,
}

impl NonexistenceCase {
    pub fn mirror(self) -> Self {
        match self {
            NonexistenceCase::N1 => NonexistenceCase::N2,
            NonexistenceCase::N2 => NonexistenceCase::N1,
            NonexistenceCase::N3 => NonexistenceCase::N4,
            NonexistenceCase::N4 => NonexistenceCase::N3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ExistenceCase {
    E1,
    E2,
    E3,
}

impl ExistenceCase {
    pub fn mirror(self) -> Self {
        match self {
            ExistenceCase::E1 => ExistenceCase::E2,
            ExistenceCase::E2 => ExistenceCase::E1,
            ExistenceCase::E3 => ExistenceCase::E3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Subcase {
    I,
    II,
    III,
    IV,
    V,
    VI,
    #[serde(rename = "case3")]
    Case3,
}

impl fmt::Display for Subcase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Subcase::I => "I",
            Subcase::II => "II",
            Subcase::III => "III",
            Subcase::IV => "IV",
            Subcase::V => "V",
            Subcase::VI => "VI",
            Subcase::Case3 => "case3",
        };
        f.write_str(s)
    }
}

/// Subcase of the first existence case for `quad`, or `None` when
/// `alpha <= 1, r < 2` fails.
pub fn case_one_subcase(quad: &ExponentQuad) -> Option<Subcase> {
    let a = quad.alpha_reg;
    if !(le(a, 1.0) && lt(quad.r, 2.0)) {
        return None;
    }
    let rs = quad.r + quad.s;
    let at_one = eq(a, 1.0);
    Some(match (rs, at_one) {
        (x, false) if lt(1.0, x) => Subcase::I,
        (x, false) if eq(x, 1.0) => Subcase::II,
        (_, false) => Subcase::III,
        (x, true) if lt(x, 1.0) => Subcase::IV,
        (x, true) if lt(1.0, x) => Subcase::V,
        _ => Subcase::VI,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeReport {
    pub quad: ExponentQuad,
    pub nonexistence: Option<NonexistenceCase>,
    /// Every non-existence condition that holds.
    pub nonexistence_cases: Vec<NonexistenceCase>,
    pub existence: Option<ExistenceCase>,
    pub existence_cases: Vec<ExistenceCase>,
    /// Subcase of the primary existence case. For `E2` it is the subcase of
    /// the swapped quad.
    pub subcase: Option<Subcase>,
    pub u_c1: bool,
    pub v_c1: bool,
    pub both_c1: bool,
    pub unique: bool,
    pub rate_u: Option<RateSpec>,
    pub rate_v: Option<RateSpec>,
    pub alpha_variant_disagrees: bool,
    pub notes: Vec<String>,
}

impl RegimeReport {
    pub fn undetermined(&self) -> bool {
        self.nonexistence.is_none() && self.existence.is_none()
    }

    /// Both a non-existence and an existence condition fire.
    pub fn conflicting(&self) -> bool {
        self.nonexistence.is_some() && self.existence.is_some()
    }

    /// The report expected for the swapped quad.
    pub fn mirrored(&self) -> RegimeReport {
        let mut n: Vec<_> = self.nonexistence_cases.iter().map(|c| c.mirror()).collect();
        n.sort();
        let mut e: Vec<_> = self.existence_cases.iter().map(|c| c.mirror()).collect();
        e.sort();
        RegimeReport {
            quad: self.quad.swapped(),
            nonexistence: n.first().copied(),
            nonexistence_cases: n,
            existence: e.first().copied(),
            subcase: e.first().and_then(|c| match c {
                ExistenceCase::E1 => case_one_subcase(&self.quad.swapped()),
                ExistenceCase::E2 => case_one_subcase(&self.quad),
                ExistenceCase::E3 => Some(Subcase::Case3),
            }),
            existence_cases: e,
            u_c1: self.v_c1,
            v_c1: self.u_c1,
            both_c1: self.both_c1,
            unique: self.unique,
            rate_u: self.rate_v,
            rate_v: self.rate_u,
            alpha_variant_disagrees: self.alpha_variant_disagrees,
            notes: Vec::new(),
        }
    }

    /// Compares the regime flags (not the notes) with another report.
    pub fn same_flags(&self, other: &RegimeReport) -> bool {
        let rates_eq = |a: &Option<RateSpec>, b: &Option<RateSpec>| match (a, b) {
            (None, None) => true,
            (Some(x), Some(y)) => {
                x.model == y.model
                    && (x.power - y.power).abs() <= 1e-12
                    && (x.logpow - y.logpow).abs() <= 1e-12
                    && x.scale_a == y.scale_a
            }
            _ => false,
        };
        self.nonexistence_cases == other.nonexistence_cases
            && self.existence_cases == other.existence_cases
            && self.subcase == other.subcase
            && self.u_c1 == other.u_c1
            && self.v_c1 == other.v_c1
            && self.both_c1 == other.both_c1
            && self.unique == other.unique
            && self.alpha_variant_disagrees == other.alpha_variant_disagrees
            && rates_eq(&self.rate_u, &other.rate_u)
            && rates_eq(&self.rate_v, &other.rate_v)
    }
}

fn nonexistence_cases(q: &ExponentQuad) -> Vec<NonexistenceCase> {
    let ExponentQuad { p, q: qq, r, s, .. } = *q;
    let mut out = Vec::new();
    if r * f64::min(1.0, (2.0 - qq) / (1.0 + p)) >= 2.0 - EQ_TOL {
        out.push(NonexistenceCase::N1);
    }
    if qq * f64::min(1.0, (2.0 - r) / (1.0 + s)) >= 2.0 - EQ_TOL {
        out.push(NonexistenceCase::N2);
    }
    if lt(f64::max(1.0, r - 1.0), p) && lt((1.0 - s) * (1.0 + p), 2.0 * r) && lt((1.0 + p) * (1.0 + s), qq * (1.0 + p - r)) {
        out.push(NonexistenceCase::N3);
    }
    if lt(f64::max(1.0, qq - 1.0), s) && lt((1.0 - p) * (1.0 + s), 2.0 * qq) && lt((1.0 + p) * (1.0 + s), r * (1.0 + s - qq)) {
        out.push(NonexistenceCase::N4);
    }
    out
}

fn existence_cases(q: &ExponentQuad, alpha: f64, beta: f64) -> Vec<ExistenceCase> {
    let mut out = Vec::new();
    if !(q.det > EQ_TOL) {
        return out;
    }
    if le(alpha, 1.0) && lt(q.r, 2.0) {
        out.push(ExistenceCase::E1);
    }
    if le(beta, 1.0) && lt(q.q, 2.0) {
        out.push(ExistenceCase::E2);
    }
    if q.p >= 1.0 - EQ_TOL && q.s >= 1.0 - EQ_TOL && lt(q.q, 2.0) && lt(q.r, 2.0) {
        out.push(ExistenceCase::E3);
    }
    out
}

/// Boundary rate of `F(u) = delta^-q log^-a(A/delta) u^-p` near the boundary.
pub fn predicted_rate_log(p: f64, q: f64, a: f64, scale_a: f64) -> Result<RateSpec, ClassifierError> {
    if !(p >= 0.0) || !q.is_finite() || !a.is_finite() {
        return Err(ClassifierError::Quad(format!("rate needs p >= 0 and finite q, a; got p {p}, q {q}, a {a}")));
    }
    if lt(2.0, q) {
        return Err(ClassifierError::NoSolution(format!("weight exponent q = {q} > 2: int_0 t k(t) dt diverges")));
    }
    if eq(q, 2.0) {
        return if lt(1.0, a) {
            Ok(RateSpec::power_of_log((1.0 - a) / (1.0 + p), scale_a))
        } else {
            Err(ClassifierError::NoSolution(format!("q = 2 with log power a = {a} <= 1: int_0 t k(t) dt diverges")))
        };
    }
    let sum = p + q;
    Ok(if lt(sum, 1.0) {
        RateSpec::linear()
    } else if eq(sum, 1.0) {
        if eq(a, 0.0) {
            RateSpec::linear_logpow(1.0 / (1.0 + p), scale_a)
        } else {
            RateSpec::linear_logpow((1.0 - a) / (1.0 + p), scale_a)
        }
    } else {
        RateSpec::power((2.0 - q) / (1.0 + p))
    })
}

/// Boundary rate of `F(u) = delta^-q u^-p`: linear for `p + q < 1`,
/// `delta log^(1/(1+p))` for `p + q = 1`, `delta^((2-q)/(1+p))` for `p + q > 1`.
pub fn predicted_rate(p_eff: f64, q_eff: f64, scale_a: f64) -> Result<RateSpec, ClassifierError> {
    predicted_rate_log(p_eff, q_eff, 0.0, scale_a)
}

/// Rate for a scalar solve with the given weight.
pub fn predicted_rate_for_weight(p: f64, weight: &WeightSpec) -> Result<RateSpec, ClassifierError> {
    match weight.form {
        WeightForm::Power => predicted_rate(p, weight.q_w, 0.0),
        WeightForm::PowerLog => predicted_rate_log(p, weight.q_w, weight.a_w, weight.scale_a),
        WeightForm::LoglogFree => Ok(RateSpec::loglog(weight.scale_a)),
    }
}

/// Weight seen by one component when the other behaves like `other`:
/// `delta^(-k gamma) log^(-k theta)`.
fn induced_rate(p: f64, k: f64, other: &RateSpec, scale_a: f64) -> Option<RateSpec> {
    match other.model {
        RateModel::Linear | RateModel::Power => predicted_rate(p, k * other.power, scale_a).ok(),
        RateModel::LinearLogpow => predicted_rate_log(p, k, k * other.logpow, scale_a).ok(),
        RateModel::PowerOfLog | RateModel::Loglog => None,
    }
}

/// Rates of `(u, v)` from the bootstrap of the existence proofs: `u` sees the
/// weight `v^-q`, `v` sees `u^-r`. Iterated from linear profiles to a fixed
/// point, which keeps the prediction symmetric under the swap.
pub fn bootstrap_rates(quad: &ExponentQuad, scale_a: f64) -> Option<(RateSpec, RateSpec)> {
    let close = |a: &RateSpec, b: &RateSpec| a.model == b.model && (a.power - b.power).abs() <= 1e-14 && (a.logpow - b.logpow).abs() <= 1e-14;
    let (mut u, mut v) = (RateSpec::linear(), RateSpec::linear());
    for _ in 0..2000 {
        let nu = induced_rate(quad.p, quad.q, &v, scale_a)?;
        let nv = induced_rate(quad.s, quad.r, &u, scale_a)?;
        if close(&nu, &u) && close(&nv, &v) {
            return Some((nu, nv));
        }
        u = nu;
        v = nv;
    }
    None
}

/// The two powers `(a, b)` of the third existence case, solving
/// `(1 + p) a + b q = 2`, `a r + (1 + s) b = 2`.
pub fn case_three_powers(quad: &ExponentQuad) -> (f64, f64) {
    (
        2.0 * (1.0 + quad.s - quad.q) / quad.det,
        2.0 * (1.0 + quad.p - quad.r) / quad.det,
    )
}

/// Log scale used for predicted log-corrected rates on a domain of diameter `diam`.
pub fn default_scale(diam: f64) -> f64 {
    diam
}

pub fn classify(quad: &ExponentQuad) -> RegimeReport {
    classify_with_scale(quad, 1.0)
}

pub fn classify_with_scale(quad: &ExponentQuad, scale_a: f64) -> RegimeReport {
    let n = nonexistence_cases(quad);
    let e = existence_cases(quad, quad.alpha_reg, quad.beta_reg);
    let (alt_a, alt_b) = quad.alt_alpha_beta();
    let e_alt = existence_cases(quad, alt_a, alt_b);
    let mut notes = Vec::new();
    let primary = e.first().copied();
    let subcase = primary.and_then(|c| match c {
        ExistenceCase::E1 => case_one_subcase(quad),
        ExistenceCase::E2 => case_one_subcase(&quad.swapped()),
        ExistenceCase::E3 => Some(Subcase::Case3),
    });
    let rates = primary.and_then(|_| bootstrap_rates(quad, scale_a));
    if primary.is_some() && rates.is_none() {
        notes.push("existence flagged but no rate prediction applies".into());
    }
    if e.contains(&ExistenceCase::E1) && eq(quad.alpha_reg, 1.0) {
        notes.push("alpha = 1: existence without C1 regularity for u".into());
    }
    if e.contains(&ExistenceCase::E2) && eq(quad.beta_reg, 1.0) {
        notes.push("beta = 1: existence without C1 regularity for v".into());
    }
    if e != e_alt {
        notes.push(format!("alpha variant (p+q)min(...) gives existence cases {e_alt:?}"));
    }
    if !n.is_empty() && !e.is_empty() {
        notes.push("non-existence and existence conditions both hold".into());
    }
    let det_ok = quad.det > EQ_TOL;
    let u_c1 = det_ok && lt(quad.alpha_reg, 1.0) && lt(quad.r, 2.0);
    let v_c1 = det_ok && lt(quad.beta_reg, 1.0) && lt(quad.q, 2.0);
    let both_c1 = det_ok && lt(quad.p + quad.q, 1.0) && lt(quad.r + quad.s, 1.0);
    let unique = det_ok && ((lt(quad.p + quad.q, 1.0) && lt(quad.r, 2.0)) || (lt(quad.r + quad.s, 1.0) && lt(quad.q, 2.0)));
    RegimeReport {
        quad: *quad,
        nonexistence: n.first().copied(),
        nonexistence_cases: n,
        existence: primary,
        existence_cases: e.clone(),
        subcase,
        u_c1,
        v_c1,
        both_c1,
        unique,
        rate_u: rates.map(|r| r.0),
        rate_v: rates.map(|r| r.1),
        alpha_variant_disagrees: e.is_empty() != e_alt.is_empty(),
        notes,
    }
}

/// Inclusive arithmetic range `lo, lo + step, ..., <= hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRange {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl SweepRange {
    pub fn values(&self) -> Result<Vec<f64>, ClassifierError> {
        if !(self.step > 0.0) || !(self.hi >= self.lo) || !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(ClassifierError::Range(format!("need step > 0 and lo <= hi, got {self:?}")));
        }
        let count = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize + 1;
        Ok((0..count).map(|k| self.lo + k as f64 * self.step).collect())
    }
}

/// Classifies every valid quad of the product grid, in `p, q, r, s` order
/// (`s` fastest). Quads with `q = 0` or `r = 0` are skipped.
pub fn sweep(p: &SweepRange, q: &SweepRange, r: &SweepRange, s: &SweepRange) -> Result<Vec<RegimeReport>, ClassifierError> {
    let (pv, qv, rv, sv) = (p.values()?, q.values()?, r.values()?, s.values()?);
    let mut out = Vec::with_capacity(pv.len() * qv.len() * rv.len() * sv.len());
    for &a in &pv {
        for &b in &qv {
            for &c in &rv {
                for &d in &sv {
                    if let Ok(quad) = ExponentQuad::new(a, b, c, d) {
                        out.push(classify(&quad));
                    }
                }
            }
        }
    }
    Ok(out)
}

pub const SWEEP_COLUMNS: [&str; 22] = [
    "p",
    "q",
    "r",
    "s",
    "det",
    "alpha",
    "beta",
    "nonexistence",
    "existence",
    "subcase",
    "u_c1",
    "v_c1",
    "both_c1",
    "unique",
    "alpha_variant_disagrees",
    "conflict",
    "rate_u_model",
    "rate_u_power",
    "rate_u_logpow",
    "rate_v_model",
    "rate_v_power",
    "rate_v_logpow",
];

fn tags<T: fmt::Debug>(v: &[T]) -> String {
    v.iter().map(|t| format!("{t:?}")).collect::<Vec<_>>().join("+")
}

/// One CSV row per report, header always written.
pub fn write_sweep_csv<W: Write>(reports: &[RegimeReport], w: W) -> Result<(), csv::Error> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(SWEEP_COLUMNS)?;
    let rate = |r: &Option<RateSpec>| match r {
        Some(r) => (r.model.name().to_string(), format!("{}", r.power), format!("{}", r.logpow)),
        None => (String::new(), String::new(), String::new()),
    };
    for rep in reports {
        let q = &rep.quad;
        let (um, up, ul) = rate(&rep.rate_u);
        let (vm, vp, vl) = rate(&rep.rate_v);
        wr.write_record([
            format!("{}", q.p),
            format!("{}", q.q),
            format!("{}", q.r),
            format!("{}", q.s),
            format!("{}", q.det),
            format!("{}", q.alpha_reg),
            format!("{}", q.beta_reg),
            tags(&rep.nonexistence_cases),
            tags(&rep.existence_cases),
            rep.subcase.map(|s| s.to_string()).unwrap_or_default(),
            rep.u_c1.to_string(),
            rep.v_c1.to_string(),
            rep.both_c1.to_string(),
            rep.unique.to_string(),
            rep.alpha_variant_disagrees.to_string(),
            rep.conflicting().to_string(),
            um,
            up,
            ul,
            vm,
            vp,
            vl,
        ])?;
    }
    wr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(p: f64, q: f64, r: f64, s: f64) -> ExponentQuad {
        ExponentQuad::new(p, q, r, s).unwrap()
    }

    #[test]
    fn conjunction_semantics_of_n3() {
        let rep = classify(&q(2.0, 0.5, 0.9, 0.0));
        assert!(!rep.nonexistence_cases.contains(&NonexistenceCase::N3));
    }

    #[test]
    fn symmetric_quarter_is_subcase_three() {
        let rep = classify(&q(0.25, 0.25, 0.25, 0.25));
        assert_eq!(rep.existence, Some(ExistenceCase::E1));
        assert_eq!(rep.subcase, Some(Subcase::III));
        assert!(rep.both_c1 && rep.unique);
        assert_eq!(rep.rate_u.unwrap().model, RateModel::Linear);
    }

    #[test]
    fn predicted_rates() {
        assert_eq!(predicted_rate(3.0, 0.5, 1.0).unwrap(), RateSpec::power(0.375));
        let r = predicted_rate(0.5, 0.5, 1.0).unwrap();
        assert_eq!(r.model, RateModel::LinearLogpow);
        assert!((r.logpow - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(predicted_rate(0.0, 0.0, 1.0).unwrap().model, RateModel::Linear);
        assert!(predicted_rate(0.0, 2.5, 1.0).is_err());
        assert!(predicted_rate(0.0, 2.0, 1.0).is_err());
        assert_eq!(predicted_rate_log(0.0, 2.0, 1.5, 100.0).unwrap(), RateSpec::power_of_log(-0.5, 100.0));
    }

    #[test]
    fn bootstrap_reaches_case_three_powers() {
        let quad = q(1.0, 1.0, 1.0, 1.0);
        let (u, v) = bootstrap_rates(&quad, 1.0).unwrap();
        let (a, b) = case_three_powers(&quad);
        assert!((u.power - a).abs() < 1e-12 && (v.power - b).abs() < 1e-12);
        let (u, v) = bootstrap_rates(&q(0.1, 0.3, 1.2, 0.2), 1.0).unwrap();
        assert_eq!(u.model, RateModel::Linear);
        assert!((v.power - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn quad_validation() {
        assert!(ExponentQuad::new(-0.1, 1.0, 1.0, 0.0).is_err());
        assert!(ExponentQuad::new(0.0, 0.0, 1.0, 0.0).is_err());
        let parsed: ExponentQuad = serde_json::from_str(r#"{"p":0.25,"q":0.25,"r":0.25,"s":0.25}"#).unwrap();
        assert!((parsed.det - 1.5).abs() < 1e-15);
        assert!(serde_json::from_str::<ExponentQuad>(r#"{"p":0,"q":1,"r":1,"s":0,"t":1}"#).is_err());
    }

    #[test]
    fn det_slice_separates_on_qr_one() {
        let rng = SweepRange { lo: 0.25, hi: 3.0, step: 0.25 };
        let zero = SweepRange { lo: 0.0, hi: 0.0, step: 1.0 };
        for rep in sweep(&zero, &rng, &rng, &zero).unwrap() {
            assert_eq!(rep.quad.det > 0.0, rep.quad.q * rep.quad.r < 1.0);
            if rep.existence.is_some() {
                assert!(rep.quad.det > 0.0);
            }
        }
    }
}
