//! Principal eigenpair `F(D^2 phi, D phi, phi, x) = mu phi`, `phi > 0`, by
//! inverse iteration.

use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::geometry::{GeometryError, Grid, GridFunction};
use crate::operators::{Discretization, OperatorError, OperatorSpec};
use crate::scalar_solver::{self, ScalarError};

#[derive(Debug, Error, Clone)]
pub enum EigenError {
    #[error("invalid eigen input: {0}")]
    Input(String),
    #[error("inverse iteration did not converge in {iterations} steps (mu = {mu}, residual {residual:e})")]
    NoConvergence { iterations: usize, mu: f64, residual: f64, last: Box<GridFunction> },
    #[error("iterate lost positivity at node {node}")]
    NotPositive { node: usize },
    #[error(transparent)]
    Solve(#[from] ScalarError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Grid(#[from] GeometryError),
}

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub mu: f64,
    /// Sup-normalized eigenfunction.
    pub phi: GridFunction,
    pub iterations: usize,
    /// Componentwise `|F(phi) - mu phi| / (|F| |phi| + mu phi)`, maximized over the interior.
    pub residual_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenBounds {
    pub c_low: f64,
    pub c_high: f64,
    pub hopf_c: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenSummary {
    pub mu: f64,
    pub iterations: usize,
    pub residual_norm: f64,
    #[serde(rename = "C_low")]
    pub c_low: f64,
    #[serde(rename = "C_high")]
    pub c_high: f64,
    pub hopf_c: f64,
}

impl EigenPair {
    pub fn summary(&self) -> EigenSummary {
        let b = verify_eigen_bounds(self);
        EigenSummary {
            mu: self.mu,
            iterations: self.iterations,
            residual_norm: self.residual_norm,
            c_low: b.c_low,
            c_high: b.c_high,
            hopf_c: b.hopf_c,
        }
    }
}

pub fn principal_eigenpair(spec: &OperatorSpec, grid: &Arc<Grid>, tol: f64, max_iter: usize) -> Result<EigenPair, EigenError> {
    let dmax = grid.max_delta();
    let start = GridFunction::from_fn(grid, |_, d| d / dmax);
    principal_eigenpair_from(spec, grid, &start, tol, max_iter)
}

/// Inverse iteration from `init`, which must be positive somewhere inside.
pub fn principal_eigenpair_from(
    spec: &OperatorSpec,
    grid: &Arc<Grid>,
    init: &GridFunction,
    tol: f64,
    max_iter: usize,
) -> Result<EigenPair, EigenError> {
    if !(tol > 0.0) {
        return Err(EigenError::Input(format!("tol must be positive, got {tol}")));
    }
    if !init.grid().same_as(grid) {
        return Err(GeometryError::Mismatch.into());
    }
    let disc = Discretization::new(spec, grid)?;
    let n = disc.unknowns();
    if n == 0 {
        return Err(EigenError::Input("grid has no interior nodes".into()));
    }
    let mut phi = disc.restrict(init.values());
    let top = phi.iter().cloned().fold(0.0, f64::max);
    if !(top > 0.0) {
        return Err(EigenError::Input("initial iterate must be positive somewhere in the interior".into()));
    }
    phi.iter_mut().for_each(|v| *v /= top);
    let inner_tol = (tol * 1e-3).max(1e-14);
    let mut w = phi.clone();
    let mut mu_prev = f64::NAN;
    let mut mu = f64::NAN;
    let mut residual = f64::INFINITY;
    for it in 1..=max_iter {
        scalar_solver::newton(&disc, &phi, 0.0, 0.0, &mut w, inner_tol, 100)?;
        if let Some(k) = (0..n).find(|&k| !(w[k] > 0.0)) {
            return Err(EigenError::NotPositive { node: disc.node(k) });
        }
        mu = (0..n).map(|k| phi[k] / w[k]).fold(0.0, f64::max);
        let wmax = w.iter().cloned().fold(0.0, f64::max);
        let next: Vec<f64> = w.iter().map(|v| v / wmax).collect();
        let (fv, jac) = disc.linearize(&disc.expand(&next));
        residual = (0..n)
            .map(|k| {
                let scale: f64 = jac.row(k).iter().map(|&(c, v)| v.abs() * next[c]).sum::<f64>() + mu * next[k];
                (fv[k] - mu * next[k]).abs() / scale
            })
            .fold(0.0, f64::max);
        phi = next;
        // warm start for the next solve: w scales like phi / mu
        w = phi.iter().map(|v| v / mu).collect();
        if (mu - mu_prev).abs() < tol * mu && residual < tol {
            return Ok(EigenPair { mu, phi: GridFunction::new(grid, disc.expand(&phi))?, iterations: it, residual_norm: residual });
        }
        mu_prev = mu;
    }
    Err(EigenError::NoConvergence {
        iterations: max_iter,
        mu,
        residual,
        last: Box::new(GridFunction::new(grid, disc.expand(&phi))?),
    })
}

/// Envelope constants `C_low delta <= phi <= C_high delta` and the smallest
/// difference quotient of `phi` over the boundary layer `delta <= 0.1 max delta`.
pub fn verify_eigen_bounds(pair: &EigenPair) -> EigenBounds {
    let grid = pair.phi.grid();
    let phi = pair.phi.values();
    let delta = grid.delta();
    let mut c_low = f64::INFINITY;
    let mut c_high: f64 = 0.0;
    for i in grid.interior_nodes() {
        let r = phi[i] / delta[i];
        c_low = c_low.min(r);
        c_high = c_high.max(r);
    }
    let layer = 0.1 * grid.max_delta();
    let mut hopf = f64::INFINITY;
    for i in grid.interior_nodes() {
        if delta[i] > layer {
            continue;
        }
        let p = grid.point(i);
        let best = grid
            .axis_neighbors(i)
            .into_iter()
            .map(|j| {
                let q = grid.point(j);
                let dist = p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                (phi[i] - phi[j]).abs() / dist
            })
            .fold(0.0, f64::max);
        hopf = hopf.min(best);
    }
    EigenBounds { c_low, c_high, hopf_c: hopf }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_grid, Domain, Grading};
    use crate::operators::PucciSign;

    #[test]
    fn laplacian_on_zero_pi() {
        let g = Arc::new(build_grid(Domain::interval(0.0, std::f64::consts::PI).unwrap(), 400, Grading::Uniform).unwrap());
        let pair = principal_eigenpair(&OperatorSpec::laplacian(), &g, 1e-10, 200).unwrap();
        assert!((pair.mu - 1.0).abs() < 1e-3, "{}", pair.mu);
        for (i, v) in pair.phi.values().iter().enumerate() {
            assert!((v - g.point(i)[0].sin()).abs() < 1e-3);
        }
        let b = verify_eigen_bounds(&pair);
        assert!((b.c_low - 2.0 / std::f64::consts::PI).abs() < 5e-3, "{b:?}");
        assert!(b.c_high <= 1.0 + 1e-9 && b.hopf_c > 0.0);
    }

    #[test]
    fn pucci_plus_scales_by_big_lambda() {
        let g = Arc::new(build_grid(Domain::interval(0.0, 1.0).unwrap(), 400, Grading::Uniform).unwrap());
        let spec = OperatorSpec::pucci(1.0, 2.0, PucciSign::Plus).unwrap();
        let pair = principal_eigenpair(&spec, &g, 1e-10, 200).unwrap();
        let ex = 2.0 * std::f64::consts::PI.powi(2);
        assert!((pair.mu - ex).abs() / ex < 1e-2);
    }
}
