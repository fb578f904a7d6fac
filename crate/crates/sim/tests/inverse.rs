use carleman_sim::inverse::log_objective;
use carleman_sim::{
    backward_uniqueness_probe, compute_tau, grid_argmin_mu, optimize_mu, optimizer_agreement, random_problem, stability_experiment, tau_variants,
    theta_monotone, CutoffSpec, GlWeight, Grid1D, RandomProblemSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn tau_worked_example() {
    let tau = compute_tau(0.5, 0.2, 3.0, 10.0).unwrap();
    let gap = 2.0 * (4.5f64.exp() - 1.8f64.exp());
    assert!((tau - gap / (10.0 + gap)).abs() < 1e-15);
    assert!((tau - 0.944).abs() < 5e-4, "{tau}");
}

#[test]
fn tau_limits_and_errors() {
    assert!(compute_tau(0.5, 0.2, 3.0, 1e-12).unwrap() > 1.0 - 1e-9);
    assert!(compute_tau(0.5, 0.5 - 1e-12, 3.0, 1e3).unwrap() < 1e-9);
    assert!(compute_tau(0.2, 0.5, 3.0, 1.0).is_err());
    assert!(compute_tau(0.5, 0.2, 2.0, 1.0).is_err());
    assert!(compute_tau(0.5, 0.2, 3.0, 0.0).is_err());
}

#[test]
fn tau_monotonicity_over_the_parameter_box() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..500 {
        let t1 = rng.random_range(0.0..0.5);
        let t0 = t1 + rng.random_range(0.01..0.5);
        let mu = rng.random_range(2.01..6.0);
        let c = rng.random_range(0.01..100.0);
        let tau = compute_tau(t0, t1, mu, c).unwrap();
        assert!(tau > 0.0 && tau < 1.0);
        assert!(compute_tau(t0 + 0.01, t1, mu, c).unwrap() > tau);
        assert!(compute_tau(t0, t1, mu, c * 1.1).unwrap() < tau);
    }
}

#[test]
fn both_tau_variants_are_reported() {
    let cut = CutoffSpec::new(0.1, 0.2, 0.3, 0.5).unwrap();
    let v = tau_variants(&cut, 3.0, 10.0).unwrap();
    // t2 > t1 shrinks the exponent gap
    assert!(v.with_t2 < v.with_t1);
    assert!(CutoffSpec::new(0.2, 0.1, 0.3, 0.5).is_err());
}

#[test]
fn cutoff_plateaus_and_derivative() {
    let cut = CutoffSpec::new(0.1, 0.2, 0.3, 0.5).unwrap();
    assert_eq!(cut.rho(0.05), 0.0);
    assert_eq!(cut.rho(0.25), 1.0);
    assert_eq!(cut.rho_dt(0.05), 0.0);
    assert_eq!(cut.rho_dt(0.25), 0.0);
    let h = 1e-6;
    for i in 1..20 {
        let t = 0.1 + 0.1 * i as f64 / 20.0;
        let fd = (cut.rho(t + h) - cut.rho(t - h)) / (2.0 * h);
        assert!((fd - cut.rho_dt(t)).abs() < 1e-5);
        assert!(cut.rho(t) > 0.0 && cut.rho(t) < 1.0);
    }
}

#[test]
fn golden_section_matches_the_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut interior = 0;
    for _ in 0..100 {
        let d2 = rng.random_range(1e-6..1.0);
        let d1 = d2 * rng.random_range(0.0f64..60.0).exp();
        let kappa = rng.random_range(1.0..50.0);
        let c = rng.random_range(0.1..2.0);
        let t = rng.random_range(0.1..1.0);
        let opt = optimize_mu(d1, d2, kappa, c, t, 10.0).unwrap();
        let (grid_mu, cell) = grid_argmin_mu(d1, d2, kappa, c, t, 10.0, 10_000);
        assert!((opt.mu - grid_mu).abs() <= cell, "{} vs {grid_mu}", opt.mu);
        if opt.mu > 1.01 && opt.mu < 9.99 {
            interior += 1;
        }
    }
    assert!(interior >= 20, "only {interior} interior minima");
    let r = optimizer_agreement(100, 2, 10.0, 10_000).unwrap();
    assert!(r.passed && r.worst_cells <= 1.0 && r.interior >= 20, "{r:?}");
}

#[test]
fn objective_shape() {
    // terminal term dominating from the start
    assert!(optimize_mu(1.0, 1e6, 1.0, 1.0, 1.0, 10.0).unwrap().mu < 1.0 + 1e-6);
    // no terminal data: decreasing everywhere
    let z = optimize_mu(1.0, 0.0, 1.0, 1.0, 1.0, 10.0).unwrap();
    assert!(z.at_upper_bound && z.mu == 10.0);
    // doubling D1 never moves the minimizer down
    let a = optimize_mu(1e10, 1.0, 5.0, 0.5, 0.5, 10.0).unwrap().mu;
    let b = optimize_mu(2e10, 1.0, 5.0, 0.5, 0.5, 10.0).unwrap().mu;
    assert!(b >= a && a > 1.0);
    // interior minimizer is a local minimum of log F
    let opt = optimize_mu(1e40, 1.0, 40.0, 0.5, 0.5, 10.0).unwrap();
    let f = |mu: f64| log_objective(mu, 1e40, 1.0, 40.0, 0.5, 0.5);
    assert!(opt.mu > 1.01, "{}", opt.mu);
    assert!(f(opt.mu) <= f(opt.mu - 1e-3) && f(opt.mu) <= f(opt.mu + 1e-3));
    assert!(optimize_mu(-1.0, 1.0, 1.0, 1.0, 1.0, 10.0).is_err());
}

fn experiment_grid() -> (Grid1D, CutoffSpec) {
    (Grid1D::new(40, 200, 0.5).unwrap(), CutoffSpec::new(0.1, 0.15, 0.25, 0.5).unwrap())
}

#[test]
fn hoelder_quotient_spread_is_bounded() {
    let (grid, cut) = experiment_grid();
    let problems: Vec<_> = (0..20).map(|s| random_problem(100 + s, &RandomProblemSpec::default())).collect();
    let r = stability_experiment(&problems, &grid, 20, 9, &cut, 3.0, 10.0, 10.0, 1e3).unwrap();
    assert!(r.tau.with_t1 > 0.0 && r.tau.with_t1 < 1.0);
    assert!(r.c_fit.is_finite() && r.spread <= 1e3, "spread {}", r.spread);
    assert!(r.falsification_candidates.is_empty());
    for (q, n) in r.quotients.iter().zip(&r.norms) {
        assert!(n.n1 <= r.c_fit * n.n2.powf(1.0 - r.tau.with_t1) * n.n3.powf(r.tau.with_t1) * (1.0 + 1e-12));
        assert!(*q > 0.0);
    }
    assert!(r.passed);
}

#[test]
fn quotient_is_invariant_under_scaling() {
    let (grid, cut) = experiment_grid();
    let p = random_problem(5, &RandomProblemSpec::default());
    let a = stability_experiment(&[p.clone()], &grid, 8, 1, &cut, 3.0, 10.0, 10.0, 1e3).unwrap();
    let b = stability_experiment(&[p.scaled(2.0)], &grid, 8, 1, &cut, 3.0, 10.0, 10.0, 1e3).unwrap();
    assert!((a.quotients[0] / b.quotients[0] - 1.0).abs() < 1e-12);
}

#[test]
fn backward_uniqueness_trend_and_negative_control() {
    let (grid, _) = experiment_grid();
    let p = random_problem(7, &RandomProblemSpec::default());
    let r = backward_uniqueness_probe(&p, &grid, 20, 3, 0.25, &[1e-1, 1e-2, 1e-3, 1e-4], 0.58).unwrap();
    assert!(r.slope >= 0.58 - 0.1);
    assert_eq!(r.zero_case, 0.0);
    assert!(r.negative_control_flagged, "tampered slope {}", r.tampered_slope);
    assert!(r.passed);
    // w(t0) → 0 with ε
    assert!(r.norms_t0.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn theta_is_increasing_in_time() {
    let gw = GlWeight::new(3.0).unwrap();
    let ts: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
    assert!(theta_monotone(&gw, &ts));
    assert!(gw.log_theta_ratio(0.2, 0.5) < 0.0);
}
