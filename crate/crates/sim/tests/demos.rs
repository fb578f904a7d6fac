use carleman_sim::demos::transport_sides;
use carleman_sim::{first_order_demo, ode_demo, BumpSum, DemoError, OdeSystem, Transport};

#[test]
fn scalar_sine_bound_with_margin() {
    let r = ode_demo(&OdeSystem::scalar_sine(), &[1.0], 10.0, 2000);
    assert_eq!(r.lambda, 2.0);
    // exact solution e^{1−cos t}
    assert!(r.passed && r.worst_ratio < 1.0);
}

#[test]
fn random_systems_obey_the_bound_at_every_step() {
    for seed in 0..10 {
        let sys = OdeSystem::random(3, seed);
        let r = ode_demo(&sys, &[1.0, -0.5, 0.25], 5.0, 2000);
        assert!(r.passed, "seed {seed}: {r:?}");
    }
}

#[test]
fn transport_estimate_with_one_constant() {
    let tr = Transport::standard();
    let ls = tr.lambda_star().unwrap();
    let us: Vec<_> = (0..10).map(BumpSum::random).collect();
    let lambdas: Vec<f64> = (0..6).map(|k| ls * 2f64.powi(k)).collect();
    let r = first_order_demo(&tr, &us, &lambdas, 4000).unwrap();
    assert!(r.passed, "{} vs {}", r.fitted_c, r.theoretical_c);
    // the quotient eventually decays like 1/λ
    for q in &r.quotients {
        let peak = q.iter().cloned().fold(0.0, f64::max);
        assert!(q.iter().all(|v| *v <= r.fitted_c));
        assert!(*q.last().unwrap() < peak, "{q:?}");
    }
}

#[test]
fn zero_function_is_trivial() {
    let tr = Transport::standard();
    assert_eq!(transport_sides(&tr, &BumpSum::zero(), 5.0, 100), (0.0, 0.0));
}

#[test]
fn wrong_sign_field_is_rejected() {
    let tr = Transport { slope: 1.0, ..Transport::standard() };
    assert!(matches!(tr.c0(), Err(DemoError::Geometry { .. })));
    let inside = Transport { x0: 0.5, ..Transport::standard() };
    assert!(inside.c0().is_err());
    let us = vec![BumpSum::random(0)];
    assert!(first_order_demo(&tr, &us, &[1.0], 100).is_err());
    // sweep below λ* is a usage error
    assert!(first_order_demo(&Transport::standard(), &us, &[0.1], 100).is_err());
}
