use std::sync::Arc;

use proptest::prelude::*;
use sel_core::classifier::{classify, ExponentQuad};
use sel_core::geometry::{build_grid, Domain, Grading, GridFunction};
use sel_core::operators::{evaluate_f, pucci_minus, pucci_plus, Field, HessianData, OperatorSpec, PucciSign, SymMat};
use sel_core::rates::{fit_rate, RateSpec};

fn sym() -> impl Strategy<Value = SymMat> {
    (-50.0..50.0f64, -50.0..50.0f64, -50.0..50.0f64).prop_map(|(a, b, c)| SymMat::new2(a, b, c))
}

fn ellipticity() -> impl Strategy<Value = (f64, f64)> {
    (0.1..3.0f64, 1.0..4.0f64).prop_map(|(l, k)| (l, l * k))
}

proptest! {
    #[test]
    fn pucci_duality(m in sym(), (l, big) in ellipticity()) {
        let lhs = pucci_plus(&m.scale(-1.0), l, big);
        prop_assert!((lhs + pucci_minus(&m, l, big)).abs() <= 1e-10 * (1.0 + big * (m.xx.abs() + m.yy.abs() + 2.0 * m.xy.abs())));
    }

    #[test]
    fn pucci_extremal_order(m in sym(), n in sym(), (l, big) in ellipticity()) {
        let tol = 1e-9 * (1.0 + big * 400.0);
        prop_assert!(pucci_minus(&m, l, big) <= pucci_plus(&m, l, big) + tol);
        prop_assert!(pucci_plus(&m.add(&n), l, big) <= pucci_plus(&m, l, big) + pucci_plus(&n, l, big) + tol);
        prop_assert!(pucci_minus(&m.add(&n), l, big) >= pucci_minus(&m, l, big) + pucci_minus(&n, l, big) - tol);
    }

    #[test]
    fn model_family_is_homogeneous(m in sym(), g in (-5.0..5.0f64, -5.0..5.0f64), r in -5.0..5.0f64, t in 0.0..10.0f64, minus in any::<bool>()) {
        let sign = if minus { PucciSign::Minus } else { PucciSign::Plus };
        let spec = OperatorSpec::pucci(1.0, 2.5, sign).unwrap()
            .with_drift(1.0, Field::Constant([0.6, -0.3]))
            .with_zeroth(1.0, Field::Constant(0.4));
        let h = HessianData { matrix: m, gradient: [g.0, g.1], value: r, location: vec![0.5, 0.5] };
        let th = HessianData { matrix: m.scale(t), gradient: [t * g.0, t * g.1], value: t * r, location: vec![0.5, 0.5] };
        let f = evaluate_f(&spec, &h);
        prop_assert!((evaluate_f(&spec, &th) - t * f).abs() <= 1e-9 * (1.0 + t) * (1.0 + f.abs() + 300.0));
    }

    #[test]
    fn classification_commutes_with_swap(p in 0.0..3.0f64, q in 0.01..3.5f64, r in 0.01..3.5f64, s in 0.0..3.0f64) {
        let quad = ExponentQuad::new(p, q, r, s).unwrap();
        let direct = classify(&quad.swapped());
        prop_assert!(direct.same_flags(&classify(&quad).mirrored()), "{:?}", quad);
        prop_assert!((quad.swapped().alpha_reg - quad.beta_reg).abs() < 1e-14);
        prop_assert!(!direct.conflicting());
    }

    #[test]
    fn synthetic_power_profile_round_trips(gamma in 0.2..1.0f64, c in 0.1..10.0f64) {
        let g = Arc::new(build_grid(Domain::interval(0.0, 1.0).unwrap(), 400, Grading::BoundaryGraded { strength: 3.0 }).unwrap());
        let u = GridFunction::from_fn(&g, |_, d| c * d.powf(gamma));
        let fit = fit_rate(&u, &RateSpec::power(gamma), None).unwrap();
        prop_assert!((fit.fitted_power - gamma).abs() < 1e-9);
        prop_assert!((fit.intercept - c.ln()).abs() < 1e-8);
    }

    #[test]
    fn synthetic_log_profile_round_trips(theta in 0.1..1.5f64) {
        let g = Arc::new(build_grid(Domain::interval(0.0, 1.0).unwrap(), 400, Grading::BoundaryGraded { strength: 4.0 }).unwrap());
        let u = GridFunction::from_fn(&g, |_, d| d * (2.0 / d).ln().powf(theta));
        let fit = fit_rate(&u, &RateSpec::linear_logpow(theta, 2.0), None).unwrap();
        prop_assert!((fit.fitted_logpow - theta).abs() < 1e-9, "{}", fit.fitted_logpow);
    }
}
