//! Numerical lab for singular fully nonlinear elliptic systems with zero
//! Dirichlet data.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod barrier;
pub mod classifier;
pub mod eigensolver;
pub mod geometry;
pub mod linalg;
pub mod operators;
pub mod oracle;
pub mod quad;
pub mod rates;
pub mod scalar_solver;
pub mod system_solver;
