use std::sync::Arc;

use sel_core::classifier::ExponentQuad;
use sel_core::geometry::{build_grid, Domain, Grading, Grid};
use sel_core::operators::OperatorSpec;
use sel_core::scalar_solver::{comparison_check, solve_scalar_singular, SolverOptions, WeightSpec};
use sel_core::system_solver::{solve_system, system_residual, PicardOptions, SystemError};

fn line(n: usize, grading: Grading) -> Arc<Grid> {
    Arc::new(build_grid(Domain::interval(0.0, 1.0).unwrap(), n, grading).unwrap())
}

#[test]
fn swapping_the_quad_swaps_the_solution() {
    let g = line(200, Grading::BoundaryGraded { strength: 1.0 });
    let quad = ExponentQuad::new(0.1, 0.3, 1.2, 0.2).unwrap();
    let spec = OperatorSpec::laplacian();
    let a = solve_system(&spec, &g, &quad, &PicardOptions::default()).unwrap();
    let b = solve_system(&spec, &g, &quad.swapped(), &PicardOptions::default()).unwrap();
    let gap = |x: &[f64], y: &[f64]| x.iter().zip(y).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
    assert!(gap(a.u.values(), b.v.values()) < 1e-8);
    assert!(gap(a.v.values(), b.u.values()) < 1e-8);
    assert!(a.cone.mirrored != b.cone.mirrored || a.cone.subcase == b.cone.subcase);
}

#[test]
fn residual_sees_a_single_node_perturbation() {
    let g = line(100, Grading::Uniform);
    let quad = ExponentQuad::new(0.25, 0.25, 0.25, 0.25).unwrap();
    let spec = OperatorSpec::laplacian();
    let res = solve_system(&spec, &g, &quad, &PicardOptions::default()).unwrap();
    assert!(res.residual.residual_u < 1e-8);
    let mut bumped = res.u.clone();
    bumped.values_mut()[50] += 1e-3;
    let r = system_residual(&spec, &g, &bumped, &res.v, &quad).unwrap();
    let h = 0.01f64;
    // the centre row changes by 2e-3 / h^2 and the weight there is 0.5^0.25
    assert!(r.unweighted_u > 0.5 * 2e-3 / (h * h), "{}", r.unweighted_u);
    let swapped = system_residual(&spec, &g, &res.v, &res.u, &quad).unwrap();
    assert!(swapped.residual_u < 1e-8, "symmetric data: swapping is harmless");
}

#[test]
fn unsupported_regime_is_reported() {
    let g = line(50, Grading::Uniform);
    let quad = ExponentQuad::new(0.0, 2.0, 0.5, 0.0).unwrap();
    let err = solve_system(&OperatorSpec::laplacian(), &g, &quad, &PicardOptions::default()).unwrap_err();
    assert!(matches!(err, SystemError::UnsupportedRegime(_)), "{err}");
}

#[test]
fn scalar_solution_lies_between_scaled_copies() {
    let g = line(200, Grading::BoundaryGraded { strength: 2.0 });
    let spec = OperatorSpec::laplacian();
    let w = WeightSpec::power(0.3);
    let u = solve_scalar_singular(&spec, &g, 0.2, &w, &SolverOptions::default()).unwrap().u;
    // u^(1+p) scaling: 0.8 u is a subsolution and 1.25 u a supersolution
    let rep = comparison_check(&spec, &g, &u.map(|v| 0.8 * v), &u.map(|v| 1.25 * v), 0.2, &w).unwrap();
    assert!(rep.holds, "{rep:?}");
}
