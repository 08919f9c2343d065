//! Pucci extremal operators, the structured operator family and its
//! finite-difference discretization.
//!
//! The family is `F(M, p, r, x) = P(M) + b(x).p + c(x) r` where `P` is one of
//! the Pucci operators, `|b(x)| <= Gamma` and `0 <= c(x) <= gamma`. The zeroth
//! order term enters with a plus sign so that `F` is nondecreasing in `r`
//! (proper) under the `-Tr(AM)` sign convention of the Pucci operators.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{GeometryError, Grid, GridFunction, Layout};
use crate::linalg::SparseRows;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("matrix is not symmetric (off-diagonal entries {0:e} and {1:e})")]
    NotSymmetric(f64, f64),
    #[error("ellipticity constants must satisfy 0 < lambda <= Lambda, got lambda = {lambda}, Lambda = {big_lambda}")]
    Ellipticity { lambda: f64, big_lambda: f64 },
    #[error("{0}")]
    Bound(String),
    #[error("grid error: {0}")]
    Grid(#[from] GeometryError),
    #[error("zero spacing next to node {0}")]
    Spacing(usize),
}

/// Symmetric matrix of dimension 1 or 2, stored as `(xx, xy, yy)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymMat {
    pub dim: usize,
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl SymMat {
    pub fn scalar(v: f64) -> Self {
        SymMat { dim: 1, xx: v, xy: 0.0, yy: 0.0 }
    }

    pub fn new2(xx: f64, xy: f64, yy: f64) -> Self {
        SymMat { dim: 2, xx, xy, yy }
    }

    pub fn diag(a: f64, b: f64) -> Self {
        SymMat::new2(a, 0.0, b)
    }

    pub fn zero(dim: usize) -> Self {
        SymMat { dim, xx: 0.0, xy: 0.0, yy: 0.0 }
    }

    /// Builds a 2x2 matrix from rows, rejecting asymmetric input.
    pub fn from_rows(m: [[f64; 2]; 2]) -> Result<Self, OperatorError> {
        let (a, b) = (m[0][1], m[1][0]);
        let scale = m[0][0].abs().max(m[1][1].abs()).max(a.abs()).max(b.abs()).max(1.0);
        if (a - b).abs() > 1e-12 * scale {
            return Err(OperatorError::NotSymmetric(a, b));
        }
        Ok(SymMat::new2(m[0][0], 0.5 * (a + b), m[1][1]))
    }

    pub fn scale(&self, t: f64) -> Self {
        SymMat { dim: self.dim, xx: t * self.xx, xy: t * self.xy, yy: t * self.yy }
    }

    pub fn add(&self, o: &SymMat) -> Self {
        SymMat { dim: self.dim.max(o.dim), xx: self.xx + o.xx, xy: self.xy + o.xy, yy: self.yy + o.yy }
    }

    pub fn sub(&self, o: &SymMat) -> Self {
        self.add(&o.scale(-1.0))
    }

    pub fn trace(&self) -> f64 {
        if self.dim == 1 {
            self.xx
        } else {
            self.xx + self.yy
        }
    }

    /// `Tr(A M)`.
    pub fn trace_prod(&self, o: &SymMat) -> f64 {
        if self.dim == 1 && o.dim == 1 {
            self.xx * o.xx
        } else {
            self.xx * o.xx + 2.0 * self.xy * o.xy + self.yy * o.yy
        }
    }

    /// Eigenvalues in increasing order, closed form.
    pub fn eigenvalues(&self) -> Vec<f64> {
        if self.dim == 1 {
            return vec![self.xx];
        }
        let m = 0.5 * (self.xx + self.yy);
        let d = (0.5 * (self.xx - self.yy)).hypot(self.xy);
        vec![m - d, m + d]
    }

    /// Eigenpairs `(mu, v)` in increasing order of `mu`.
    fn eigen(&self) -> [(f64, [f64; 2]); 2] {
        let m = 0.5 * (self.xx + self.yy);
        let d = (0.5 * (self.xx - self.yy)).hypot(self.xy);
        let phi = 0.5 * (2.0 * self.xy).atan2(self.xx - self.yy);
        let (c, s) = (phi.cos(), phi.sin());
        [(m - d, [-s, c]), (m + d, [c, s])]
    }
}

fn pucci(m: &SymMat, on_pos: f64, on_neg: f64) -> f64 {
    m.eigenvalues().iter().map(|&e| if e > 0.0 { -on_pos * e } else { -on_neg * e }).sum()
}

/// `P+(M) = sup -Tr(AM)` over `lambda I <= A <= Lambda I`.
pub fn pucci_plus(m: &SymMat, lambda: f64, big_lambda: f64) -> f64 {
    pucci(m, lambda, big_lambda)
}

/// `P-(M) = inf -Tr(AM)` over `lambda I <= A <= Lambda I`.
pub fn pucci_minus(m: &SymMat, lambda: f64, big_lambda: f64) -> f64 {
    pucci(m, big_lambda, lambda)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PucciSign {
    Plus,
    Minus,
}

/// The coefficient matrix `A` attaining the Pucci extremum at `m`, so that
/// `P(m) = -Tr(A m)`. Freezing it turns the operator into a linear one.
pub fn active_coefficients(m: &SymMat, lambda: f64, big_lambda: f64, sign: PucciSign) -> SymMat {
    let pick = |e: f64| match sign {
        PucciSign::Plus => {
            if e > 0.0 {
                lambda
            } else {
                big_lambda
            }
        }
        PucciSign::Minus => {
            if e > 0.0 {
                big_lambda
            } else {
                lambda
            }
        }
    };
    if m.dim == 1 {
        return SymMat::scalar(pick(m.xx));
    }
    let mut a = SymMat::zero(2);
    for (e, v) in m.eigen() {
        let c = pick(e);
        a.xx += c * v[0] * v[0];
        a.xy += c * v[0] * v[1];
        a.yy += c * v[1] * v[1];
    }
    a
}

/// A coefficient field: either constant or an arbitrary function of position.
#[derive(Clone)]
pub enum Field<T> {
    Constant(T),
    Function(Arc<dyn Fn(&[f64]) -> T + Send + Sync>),
}

impl<T: Copy> Field<T> {
    pub fn at(&self, x: &[f64]) -> T {
        match self {
            Field::Constant(v) => *v,
            Field::Function(f) => f(x),
        }
    }
}

impl<T: fmt::Debug> fmt::Debug for Field<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Field::Constant(v) => write!(f, "Constant({v:?})"),
            Field::Function(_) => write!(f, "Function(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct OperatorSpec {
    pub lambda: f64,
    pub big_lambda: f64,
    pub sign: PucciSign,
    /// Bound `Gamma` on the drift magnitude.
    pub grad_bound: f64,
    /// Bound `gamma` on the zeroth-order coefficient.
    pub zeroth_bound: f64,
    pub drift: Field<[f64; 2]>,
    pub zeroth: Field<f64>,
}

impl OperatorSpec {
    pub fn pucci(lambda: f64, big_lambda: f64, sign: PucciSign) -> Result<Self, OperatorError> {
        if !(lambda > 0.0 && big_lambda >= lambda && big_lambda.is_finite()) {
            return Err(OperatorError::Ellipticity { lambda, big_lambda });
        }
        Ok(OperatorSpec {
            lambda,
            big_lambda,
            sign,
            grad_bound: 0.0,
            zeroth_bound: 0.0,
            drift: Field::Constant([0.0, 0.0]),
            zeroth: Field::Constant(0.0),
        })
    }

    /// `F = -Laplacian`.
    pub fn laplacian() -> Self {
        OperatorSpec::pucci(1.0, 1.0, PucciSign::Plus).unwrap()
    }

    pub fn with_drift(mut self, bound: f64, drift: Field<[f64; 2]>) -> Self {
        self.grad_bound = bound;
        self.drift = drift;
        self
    }

    pub fn with_zeroth(mut self, bound: f64, zeroth: Field<f64>) -> Self {
        self.zeroth_bound = bound;
        self.zeroth = zeroth;
        self
    }

    /// Convexity of `F` in `(M, p, r)`; recorded only, never used by a solver.
    pub fn is_convex(&self) -> bool {
        self.sign == PucciSign::Plus
    }

    pub fn pucci_value(&self, m: &SymMat) -> f64 {
        match self.sign {
            PucciSign::Plus => pucci_plus(m, self.lambda, self.big_lambda),
            PucciSign::Minus => pucci_minus(m, self.lambda, self.big_lambda),
        }
    }

    /// Checks the ellipticity constants and the coefficient bounds on every node.
    pub fn validate_on(&self, grid: &Grid) -> Result<(), OperatorError> {
        if !(self.lambda > 0.0 && self.big_lambda >= self.lambda) {
            return Err(OperatorError::Ellipticity { lambda: self.lambda, big_lambda: self.big_lambda });
        }
        let tol = 1e-12;
        for i in 0..grid.len() {
            let x = grid.point(i);
            let b = self.drift.at(x);
            let nb = if grid.dim() == 1 { b[0].abs() } else { b[0].hypot(b[1]) };
            if nb > self.grad_bound * (1.0 + tol) + tol {
                return Err(OperatorError::Bound(format!("|b| = {nb} exceeds Gamma = {} at node {i}", self.grad_bound)));
            }
            let c = self.zeroth.at(x);
            if c < 0.0 || c > self.zeroth_bound * (1.0 + tol) + tol {
                return Err(OperatorError::Bound(format!("c = {c} outside [0, gamma = {}] at node {i}", self.zeroth_bound)));
            }
        }
        Ok(())
    }
}

/// Pointwise arguments `(M, p, r, x)` of `F`.
#[derive(Debug, Clone, PartialEq)]
pub struct HessianData {
    pub matrix: SymMat,
    pub gradient: [f64; 2],
    pub value: f64,
    pub location: Vec<f64>,
}

pub fn evaluate_f(spec: &OperatorSpec, h: &HessianData) -> f64 {
    let b = spec.drift.at(&h.location);
    let c = spec.zeroth.at(&h.location);
    let bp = if h.matrix.dim == 1 { b[0] * h.gradient[0] } else { b[0] * h.gradient[0] + b[1] * h.gradient[1] };
    spec.pucci_value(&h.matrix) + bp + c * h.value
}

/// Contribution of one node value to the discrete Hessian and gradient.
#[derive(Debug, Clone, Copy)]
struct Entry {
    node: usize,
    h: [f64; 3],
    g: [f64; 2],
}

#[derive(Debug, Clone)]
struct NodeStencil {
    node: usize,
    entries: Vec<Entry>,
}

impl NodeStencil {
    fn push(&mut self, node: usize, h: [f64; 3], g: [f64; 2]) {
        if h == [0.0; 3] && g == [0.0; 2] {
            return;
        }
        match self.entries.iter_mut().find(|e| e.node == node) {
            Some(e) => {
                for k in 0..3 {
                    e.h[k] += h[k];
                }
                e.g[0] += g[0];
                e.g[1] += g[1];
            }
            None => self.entries.push(Entry { node, h, g }),
        }
    }
}

/// Three-point weights `(minus, centre, plus)` for the second derivative on a
/// nonuniform stencil; exact on quadratics.
pub fn second_difference_weights(hm: f64, hp: f64) -> [f64; 3] {
    [2.0 / (hm * (hm + hp)), -2.0 / (hm * hp), 2.0 / (hp * (hm + hp))]
}

/// Three-point central first-derivative weights, exact on quadratics.
pub fn first_difference_weights(hm: f64, hp: f64) -> [f64; 3] {
    [-hp / (hm * (hm + hp)), (hp - hm) / (hm * hp), hm / (hp * (hm + hp))]
}

/// Upwind first-difference weights `(minus, centre, plus)` for drift component `b`.
fn upwind_weights(b: f64, hm: f64, hp: f64) -> [f64; 3] {
    if b > 0.0 {
        [-1.0 / hm, 1.0 / hm, 0.0]
    } else if b < 0.0 {
        [0.0, -1.0 / hp, 1.0 / hp]
    } else {
        first_difference_weights(hm, hp)
    }
}

/// Frozen discrete operator on a grid: stencils for every interior node plus
/// the coefficient values there.
#[derive(Debug, Clone)]
pub struct Discretization {
    spec: OperatorSpec,
    grid: Arc<Grid>,
    rows: Vec<NodeStencil>,
    slot: Vec<usize>,
    drift: Vec<[f64; 2]>,
    zeroth: Vec<f64>,
}

pub const NO_SLOT: usize = usize::MAX;

impl Discretization {
    pub fn new(spec: &OperatorSpec, grid: &Arc<Grid>) -> Result<Self, OperatorError> {
        spec.validate_on(grid)?;
        let interior = grid.interior_nodes();
        let mut slot = vec![NO_SLOT; grid.len()];
        for (k, &i) in interior.iter().enumerate() {
            slot[i] = k;
        }
        let drift: Vec<[f64; 2]> = interior.iter().map(|&i| spec.drift.at(grid.point(i))).collect();
        let zeroth: Vec<f64> = interior.iter().map(|&i| spec.zeroth.at(grid.point(i))).collect();
        let mut rows = Vec::with_capacity(interior.len());
        for (k, &i) in interior.iter().enumerate() {
            rows.push(build_stencil(grid, i, drift[k])?);
        }
        Ok(Discretization { spec: spec.clone(), grid: Arc::clone(grid), rows, slot, drift, zeroth })
    }

    pub fn spec(&self) -> &OperatorSpec {
        &self.spec
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// Number of unknowns (interior nodes).
    pub fn unknowns(&self) -> usize {
        self.rows.len()
    }

    /// Node index of unknown `k`.
    pub fn node(&self, k: usize) -> usize {
        self.rows[k].node
    }

    /// Unknown index of node `i`, or [`NO_SLOT`] for boundary nodes.
    pub fn slot(&self, i: usize) -> usize {
        self.slot[i]
    }

    /// Discrete `(D^2 u, Du, u, x)` at unknown `k`; `u` holds values on all nodes.
    pub fn hessian_data(&self, k: usize, u: &[f64]) -> HessianData {
        let row = &self.rows[k];
        let dim = self.grid.dim();
        let mut h = [0.0; 3];
        let mut g = [0.0; 2];
        for e in &row.entries {
            let v = u[e.node];
            for c in 0..3 {
                h[c] += e.h[c] * v;
            }
            g[0] += e.g[0] * v;
            g[1] += e.g[1] * v;
        }
        let matrix = if dim == 1 { SymMat::scalar(h[0]) } else { SymMat::new2(h[0], h[1], h[2]) };
        HessianData { matrix, gradient: g, value: u[row.node], location: self.grid.point(row.node).to_vec() }
    }

    fn value_at(&self, k: usize, hd: &HessianData) -> f64 {
        let b = self.drift[k];
        let bp = b[0] * hd.gradient[0] + if hd.matrix.dim == 2 { b[1] * hd.gradient[1] } else { 0.0 };
        self.spec.pucci_value(&hd.matrix) + bp + self.zeroth[k] * hd.value
    }

    /// `F(D^2 u, Du, u, x)` at every unknown.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        (0..self.unknowns()).map(|k| self.value_at(k, &self.hessian_data(k, u))).collect()
    }

    /// Operator values together with the linearization at `u` (the Pucci
    /// coefficient frozen at its active selection). Columns index unknowns.
    pub fn linearize(&self, u: &[f64]) -> (Vec<f64>, SparseRows) {
        let n = self.unknowns();
        let mut vals = Vec::with_capacity(n);
        let mut jac = SparseRows::new(n);
        let dim = self.grid.dim();
        for k in 0..n {
            let hd = self.hessian_data(k, u);
            vals.push(self.value_at(k, &hd));
            let a = active_coefficients(&hd.matrix, self.spec.lambda, self.spec.big_lambda, self.spec.sign);
            let b = self.drift[k];
            for e in &self.rows[k].entries {
                let col = self.slot[e.node];
                if col == NO_SLOT {
                    continue;
                }
                let w = if dim == 1 { SymMat::scalar(e.h[0]) } else { SymMat::new2(e.h[0], e.h[1], e.h[2]) };
                let mut c = -a.trace_prod(&w) + b[0] * e.g[0];
                if dim == 2 {
                    c += b[1] * e.g[1];
                }
                jac.add(k, col, c);
            }
            jac.add(k, k, self.zeroth[k]);
        }
        (vals, jac)
    }

    /// Writes unknown values back into a full nodal vector with zero boundary data.
    pub fn expand(&self, x: &[f64]) -> Vec<f64> {
        let mut u = vec![0.0; self.grid.len()];
        for (k, r) in self.rows.iter().enumerate() {
            u[r.node] = x[k];
        }
        u
    }

    pub fn restrict(&self, u: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|r| u[r.node]).collect()
    }
}

fn build_stencil(grid: &Grid, i: usize, b: [f64; 2]) -> Result<NodeStencil, OperatorError> {
    let mut st = NodeStencil { node: i, entries: Vec::new() };
    let n = grid.n();
    let check = |h: f64| if h > 0.0 && h.is_finite() { Ok(h) } else { Err(OperatorError::Spacing(i)) };
    match grid.layout() {
        Layout::Line { x } => {
            let (hm, hp) = (check(x.gap(i - 1))?, check(x.gap(i))?);
            let w = second_difference_weights(hm, hp);
            let g = upwind_weights(b[0], hm, hp);
            for (d, node) in [i - 1, i, i + 1].into_iter().enumerate() {
                st.push(node, [w[d], 0.0, 0.0], [g[d], 0.0]);
            }
        }
        Layout::Lattice { x, y } => {
            let (a, c) = (i / n, i % n);
            let (hxm, hxp) = (check(x.gap(a - 1))?, check(x.gap(a))?);
            let (hym, hyp) = (check(y.gap(c - 1))?, check(y.gap(c))?);
            let wx = second_difference_weights(hxm, hxp);
            let wy = second_difference_weights(hym, hyp);
            let gx = upwind_weights(b[0], hxm, hxp);
            let gy = upwind_weights(b[1], hym, hyp);
            for d in 0..3 {
                st.push((a + d - 1) * n + c, [wx[d], 0.0, 0.0], [gx[d], 0.0]);
                st.push(a * n + c + d - 1, [0.0, 0.0, wy[d]], [0.0, gy[d]]);
            }
            let wxy = 1.0 / ((hxm + hxp) * (hym + hyp));
            for (da, dc, s) in [(1, 1, 1.0), (1, -1, -1.0), (-1, 1, -1.0), (-1, -1, 1.0)] {
                let node = ((a as isize + da) as usize) * n + (c as isize + dc) as usize;
                st.push(node, [0.0, s * wxy, 0.0], [0.0, 0.0]);
            }
        }
        Layout::Polar { rho, n_theta } => {
            let m = *n_theta;
            if i == 0 {
                let h = check(rho.gap(0))?;
                let at = |q: usize| grid.polar_index(1, q * m / 8);
                let (e, ne, nn, nw, w, sw, s, se) = (at(0), at(1), at(2), at(3), at(4), at(5), at(6), at(7));
                let h2 = 1.0 / (h * h);
                st.push(e, [h2, 0.0, 0.0], [0.0; 2]);
                st.push(w, [h2, 0.0, 0.0], [0.0; 2]);
                st.push(0, [-2.0 * h2, 0.0, -2.0 * h2], [0.0; 2]);
                st.push(nn, [0.0, 0.0, h2], [0.0; 2]);
                st.push(s, [0.0, 0.0, h2], [0.0; 2]);
                let hx = 0.5 * h2;
                st.push(ne, [0.0, hx, 0.0], [0.0; 2]);
                st.push(sw, [0.0, hx, 0.0], [0.0; 2]);
                st.push(nw, [0.0, -hx, 0.0], [0.0; 2]);
                st.push(se, [0.0, -hx, 0.0], [0.0; 2]);
                let gx = upwind_weights(b[0], h, h);
                let gy = upwind_weights(b[1], h, h);
                st.push(w, [0.0; 3], [gx[0], 0.0]);
                st.push(0, [0.0; 3], [gx[1], gy[1]]);
                st.push(e, [0.0; 3], [gx[2], 0.0]);
                st.push(s, [0.0; 3], [0.0, gy[0]]);
                st.push(nn, [0.0; 3], [0.0, gy[2]]);
                return Ok(st);
            }
            let (j, t) = ((i - 1) / m + 1, (i - 1) % m);
            let r = rho.pos[j];
            let (hm, hp) = (check(rho.gap(j - 1))?, check(rho.gap(j))?);
            let dt = 2.0 * std::f64::consts::PI / m as f64;
            let th = dt * t as f64;
            let (c, s) = (th.cos(), th.sin());
            let idx = |jj: usize, tt: isize| grid.polar_index(jj, (tt + m as isize) as usize % m);
            let ti = t as isize;
            // linear functionals for the polar derivatives, as (node, weight) lists
            let wrr = second_difference_weights(hm, hp);
            let wr = first_difference_weights(hm, hp);
            let urr = [(idx(j - 1, ti), wrr[0]), (i, wrr[1]), (idx(j + 1, ti), wrr[2])];
            let ur = [(idx(j - 1, ti), wr[0]), (i, wr[1]), (idx(j + 1, ti), wr[2])];
            let ut = [(idx(j, ti + 1), 0.5 / dt), (idx(j, ti - 1), -0.5 / dt)];
            let utt = [(idx(j, ti + 1), 1.0 / (dt * dt)), (i, -2.0 / (dt * dt)), (idx(j, ti - 1), 1.0 / (dt * dt))];
            let wx = 1.0 / ((hm + hp) * 2.0 * dt);
            let urt = [
                (idx(j + 1, ti + 1), wx),
                (idx(j + 1, ti - 1), -wx),
                (idx(j - 1, ti + 1), -wx),
                (idx(j - 1, ti - 1), wx),
            ];
            // H = urr e_r e_r^T + S e_t e_t^T + T (e_r e_t^T + e_t e_r^T)
            let (cc, ss, cs) = (c * c, s * s, c * s);
            for &(nd, w) in &urr {
                st.push(nd, [cc * w, cs * w, ss * w], [0.0; 2]);
            }
            let s_terms = ur.iter().map(|&(nd, w)| (nd, w / r)).chain(utt.iter().map(|&(nd, w)| (nd, w / (r * r))));
            for (nd, w) in s_terms {
                st.push(nd, [ss * w, -cs * w, cc * w], [0.0; 2]);
            }
            let t_terms = urt.iter().map(|&(nd, w)| (nd, w / r)).chain(ut.iter().map(|&(nd, w)| (nd, -w / (r * r))));
            for (nd, w) in t_terms {
                st.push(nd, [-2.0 * cs * w, (cc - ss) * w, 2.0 * cs * w], [0.0; 2]);
            }
            // upwind gradient: g = u_r e_r + (u_t / r) e_t
            let br = b[0] * c + b[1] * s;
            let bt = -b[0] * s + b[1] * c;
            let gr = upwind_weights(br, hm, hp);
            for (d, nd) in [idx(j - 1, ti), i, idx(j + 1, ti)].into_iter().enumerate() {
                st.push(nd, [0.0; 3], [c * gr[d], s * gr[d]]);
            }
            let gt = upwind_weights(bt, dt, dt);
            for (d, nd) in [idx(j, ti - 1), i, idx(j, ti + 1)].into_iter().enumerate() {
                let w = gt[d] / r;
                st.push(nd, [0.0; 3], [-s * w, c * w]);
            }
        }
    }
    Ok(st)
}

/// Residual field `F(D^2 u, Du, u, x)` on interior nodes (zero on the boundary).
pub fn discretize(spec: &OperatorSpec, grid: &Arc<Grid>, u: &GridFunction) -> Result<GridFunction, OperatorError> {
    if !u.grid().same_as(grid) {
        return Err(GeometryError::Mismatch.into());
    }
    let disc = Discretization::new(spec, grid)?;
    Ok(disc.residual_field(u.values()))
}

impl Discretization {
    pub fn residual_field(&self, u: &[f64]) -> GridFunction {
        let vals = self.apply(u);
        let mut out = vec![0.0; self.grid.len()];
        for (k, v) in vals.into_iter().enumerate() {
            out[self.rows[k].node] = v;
        }
        GridFunction::new(&self.grid, out).expect("length matches grid")
    }
}

#[derive(Debug, Clone)]
pub struct SumMargin {
    /// `F1(u) + F2(v) - F(u + v)` per node (zero on the boundary).
    pub margin: GridFunction,
    pub min_margin: f64,
    pub max_margin: f64,
}

/// Pointwise margin of `F(D^2(u+v), ..) <= F1(D^2 u, ..) + F2(D^2 v, ..)`.
/// The right-hand sides `f`, `g` are only used to report the implied bound
/// `F(u+v) <= f + g` when `u`, `v` are subsolutions of `F1 = f`, `F2 = g`.
pub fn check_subsolution_sum(
    u: &GridFunction,
    v: &GridFunction,
    f: &GridFunction,
    g: &GridFunction,
    specs: (&OperatorSpec, &OperatorSpec, &OperatorSpec),
) -> Result<(SumMargin, GridFunction), OperatorError> {
    u.check_same_grid(v)?;
    u.check_same_grid(f)?;
    u.check_same_grid(g)?;
    let grid = u.grid();
    let (sf, s1, s2) = specs;
    let w: Vec<f64> = u.values().iter().zip(v.values()).map(|(a, b)| a + b).collect();
    let fw = Discretization::new(sf, grid)?.residual_field(&w);
    let f1 = Discretization::new(s1, grid)?.residual_field(u.values());
    let f2 = Discretization::new(s2, grid)?.residual_field(v.values());
    let margin: Vec<f64> = (0..grid.len()).map(|i| f1.values()[i] + f2.values()[i] - fw.values()[i]).collect();
    let bound: Vec<f64> = (0..grid.len())
        .map(|i| if grid.is_interior(i) { f.values()[i] + g.values()[i] - fw.values()[i] } else { 0.0 })
        .collect();
    let interior = grid.interior_nodes();
    let min_margin = interior.iter().map(|&i| margin[i]).fold(f64::INFINITY, f64::min);
    let max_margin = interior.iter().map(|&i| margin[i]).fold(f64::NEG_INFINITY, f64::max);
    Ok((
        SumMargin { margin: GridFunction::new(grid, margin)?, min_margin, max_margin },
        GridFunction::new(grid, bound)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_grid, Domain, Grading};

    #[test]
    fn pucci_examples() {
        assert_eq!(pucci_plus(&SymMat::zero(2), 1.0, 2.0), 0.0);
        assert_eq!(pucci_plus(&SymMat::diag(1.0, -1.0), 1.0, 2.0), 1.0);
        assert_eq!(pucci_plus(&SymMat::scalar(-3.0), 1.0, 2.0), 6.0);
        assert_eq!(pucci_minus(&SymMat::diag(1.0, -1.0), 1.0, 2.0), -1.0);
    }

    #[test]
    fn asymmetric_rejected() {
        assert!(SymMat::from_rows([[1.0, 2.0], [2.5, 0.0]]).is_err());
        assert!(SymMat::from_rows([[1.0, 2.0], [2.0, 0.0]]).is_ok());
    }

    #[test]
    fn active_coefficients_reproduce_pucci() {
        let ms = [SymMat::new2(1.0, 2.0, -3.0), SymMat::new2(-0.5, 0.1, -0.2), SymMat::scalar(-2.0), SymMat::new2(0.0, 1.0, 0.0)];
        for m in ms {
            for sign in [PucciSign::Plus, PucciSign::Minus] {
                let a = active_coefficients(&m, 0.5, 3.0, sign);
                let p = match sign {
                    PucciSign::Plus => pucci_plus(&m, 0.5, 3.0),
                    PucciSign::Minus => pucci_minus(&m, 0.5, 3.0),
                };
                assert!((-a.trace_prod(&m) - p).abs() < 1e-12, "{m:?} {sign:?}");
            }
        }
    }

    #[test]
    fn laplacian_reduction() {
        let spec = OperatorSpec::laplacian();
        let h = HessianData { matrix: SymMat::scalar(-2.0), gradient: [0.0, 0.0], value: 5.0, location: vec![0.5] };
        assert_eq!(evaluate_f(&spec, &h), 2.0);
    }

    #[test]
    fn quadratic_is_exact_in_1d() {
        let g = Arc::new(build_grid(Domain::interval(0.0, 1.0).unwrap(), 33, Grading::BoundaryGraded { strength: 1.5 }).unwrap());
        let u = GridFunction::from_fn(&g, |x, _| x[0] * (1.0 - x[0]));
        let r = discretize(&OperatorSpec::laplacian(), &g, &u).unwrap();
        for i in g.interior_nodes() {
            assert!((r.values()[i] - 2.0).abs() < 1e-8, "{}", r.values()[i]);
        }
    }

    #[test]
    fn disk_paraboloid_residual_is_four() {
        for grading in [Grading::Uniform, Grading::BoundaryGraded { strength: 1.0 }] {
            let g = Arc::new(build_grid(Domain::disk(1.0).unwrap(), 9, grading).unwrap());
            let u = GridFunction::from_fn(&g, |x, _| 1.0 - x[0] * x[0] - x[1] * x[1]);
            let r = discretize(&OperatorSpec::laplacian(), &g, &u).unwrap();
            for i in g.interior_nodes() {
                assert!((r.values()[i] - 4.0).abs() < 1e-9, "node {i}: {}", r.values()[i]);
            }
        }
    }

    #[test]
    fn rectangle_mixed_quadratic_is_exact() {
        let g = Arc::new(build_grid(Domain::rectangle(1.0, 2.0).unwrap(), 9, Grading::BoundaryGraded { strength: 1.0 }).unwrap());
        // Hessian [[2, 1], [1, -4]] everywhere
        let u = GridFunction::from_fn(&g, |x, _| x[0] * x[0] + x[0] * x[1] - 2.0 * x[1] * x[1]);
        let spec = OperatorSpec::pucci(1.0, 2.0, PucciSign::Plus).unwrap();
        let r = discretize(&spec, &g, &u).unwrap();
        let expect = pucci_plus(&SymMat::new2(2.0, 1.0, -4.0), 1.0, 2.0);
        for i in g.interior_nodes() {
            assert!((r.values()[i] - expect).abs() < 1e-8);
        }
    }

    #[test]
    fn linearization_matches_operator_value() {
        let g = Arc::new(build_grid(Domain::disk(1.0).unwrap(), 9, Grading::Uniform).unwrap());
        let spec = OperatorSpec::pucci(1.0, 3.0, PucciSign::Minus)
            .unwrap()
            .with_drift(1.0, Field::Constant([0.6, -0.8]))
            .with_zeroth(2.0, Field::Constant(1.5));
        let d = Discretization::new(&spec, &g).unwrap();
        let u: Vec<f64> = (0..g.len()).map(|i| if g.is_interior(i) { (i as f64 * 0.37).sin() } else { 0.0 }).collect();
        let (vals, jac) = d.linearize(&u);
        let lin = jac.mul_vec(&d.restrict(&u));
        for (a, b) in vals.iter().zip(&lin) {
            assert!((a - b).abs() < 1e-9 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn drift_out_of_bounds_rejected() {
        let g = build_grid(Domain::interval(0.0, 1.0).unwrap(), 9, Grading::Uniform).unwrap();
        let spec = OperatorSpec::laplacian().with_drift(0.5, Field::Constant([1.0, 0.0]));
        assert!(spec.validate_on(&g).is_err());
    }
}
