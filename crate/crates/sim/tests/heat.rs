use carleman_sim::heat::heat_terms;
use carleman_sim::{brownian, carleman_heat_check, manufacture_heat_pair, psi_1d, Grid1D, HeatWeight, Interval};

const LAMBDAS: [f64; 4] = [20.0, 40.0, 80.0, 160.0];

fn weight(g0: Interval) -> HeatWeight {
    HeatWeight::new(psi_1d(g0).unwrap(), 4.0, 20.0, 1, 1.0).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

#[test]
fn pair_vanishes_on_the_boundary() {
    let grid = Grid1D::new(40, 50, 1.0).unwrap();
    let pair = manufacture_heat_pair(&grid, 4, 3, true).unwrap();
    for &(t, b) in &[(0.1, 0.3), (0.5, -1.2), (0.9, 2.0)] {
        for x in [0.0, 1.0] {
            let v = pair.eval(x, t, b);
            assert!(v.y.abs() < 1e-12 && v.big_y.abs() < 1e-12 && v.f.abs() < 1e-12);
        }
    }
    assert!(manufacture_heat_pair(&grid, 11, 0, true).is_err());
}

#[test]
fn deterministic_reduction() {
    let grid = Grid1D::new(40, 50, 1.0).unwrap();
    let pair = manufacture_heat_pair(&grid, 3, 9, false).unwrap();
    let v = pair.eval(0.3, 0.4, 5.0);
    assert_eq!(v.big_y, 0.0);
    // f = y_t + y_xx, checked by a centered difference in t
    let h = 1e-5;
    let y = |t: f64| pair.eval(0.3, t, 0.0).y;
    let y_t = (y(0.4 + h) - y(0.4 - h)) / (2.0 * h);
    let x = 0.3;
    let y_xx = (pair.eval(x + h, 0.4, 0.0).y - 2.0 * v.y + pair.eval(x - h, 0.4, 0.0).y) / (h * h);
    assert!((v.f - (y_t + y_xx)).abs() < 1e-3 * (1.0 + v.f.abs()), "{} vs {}", v.f, y_t + y_xx);
}

#[test]
fn euler_residual_is_first_order() {
    let fine = Grid1D::new(40, 800, 1.0).unwrap();
    let coarse = Grid1D::new(40, 400, 1.0).unwrap();
    let paths = brownian(200, 800, fine.dt(), 4);
    let pair = manufacture_heat_pair(&fine, 4, 2, true).unwrap();
    let r_fine = pair.euler_residual(&fine, &paths).unwrap();
    let r_coarse = pair.euler_residual(&coarse, &paths.coarsen()).unwrap();
    let ratio = r_coarse / r_fine;
    assert!((ratio / 2.0 - 1.0).abs() < 0.2, "ratio {ratio}");
}

#[test]
fn heat_estimate_does_not_decay_in_lambda() {
    let grid = Grid1D::new(100, 200, 1.0).unwrap();
    let paths = brownian(50, 200, grid.dt(), 1);
    let pairs: Vec<_> = (0..10).map(|s| manufacture_heat_pair(&grid, 4, s, true).unwrap()).collect();
    let report = carleman_heat_check(&pairs, &grid, &paths, &weight(Interval::new(0.3, 0.7)), &LAMBDAS).unwrap();
    for p in &report.pairs {
        assert!(p.passed, "{p:?}");
        assert!(p.rows.iter().all(|r| r.lhs_se > 0.0 && r.lhs_se < r.lhs));
    }
    assert!(report.passed);
}

/// θ² concentrates at the maximum of ψ, which lies in the observation
/// region, so the observed share of the mass term grows with λ even for a
/// narrow region.
#[test]
fn observed_share_grows_with_lambda() {
    let grid = Grid1D::new(100, 200, 1.0).unwrap();
    let paths = brownian(50, 200, grid.dt(), 2);
    let pairs: Vec<_> = (20..23).map(|s| manufacture_heat_pair(&grid, 4, s, true).unwrap()).collect();
    let report = carleman_heat_check(&pairs, &grid, &paths, &weight(Interval::new(0.45, 0.55)), &LAMBDAS).unwrap();
    for p in &report.pairs {
        let share: Vec<f64> = p.rows.iter().map(|r| r.terms.rhs_observation / r.terms.lhs_mass).collect();
        assert!(share.windows(2).all(|w| w[1] >= w[0]) && share[0] < 1.0, "{share:?}");
    }
    assert!(report.passed);
}

#[test]
fn ratios_are_scale_invariant() {
    let grid = Grid1D::new(60, 100, 1.0).unwrap();
    let paths = brownian(10, 100, grid.dt(), 3);
    let w = weight(Interval::new(0.3, 0.7));
    let pair = manufacture_heat_pair(&grid, 3, 5, true).unwrap();
    let a = heat_terms(&pair, &grid, &paths, &w, &LAMBDAS).unwrap();
    let b = heat_terms(&pair.scaled(3.7), &grid, &paths, &w, &LAMBDAS).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!(rel(y.ratio, x.ratio) < 1e-12);
    }
    let d = heat_terms(&pair.with_f_scale(2.0), &grid, &paths, &w, &LAMBDAS).unwrap();
    for (x, y) in a.iter().zip(&d) {
        assert!(rel(y.terms.rhs_source, 4.0 * x.terms.rhs_source) < 1e-12);
        assert_eq!(y.terms.lhs_mass, x.terms.lhs_mass);
    }
}

#[test]
fn diffusion_term_vanishes_without_noise() {
    let grid = Grid1D::new(60, 100, 1.0).unwrap();
    let paths = brownian(5, 100, grid.dt(), 3);
    let pair = manufacture_heat_pair(&grid, 3, 5, false).unwrap();
    let rows = heat_terms(&pair, &grid, &paths, &weight(Interval::new(0.3, 0.7)), &LAMBDAS).unwrap();
    assert!(rows.iter().all(|r| r.terms.rhs_diffusion == 0.0 && r.lhs_se == 0.0));
}

#[test]
fn weighted_integrals_are_refinement_stable() {
    let fine = Grid1D::new(80, 400, 1.0).unwrap();
    let coarse = Grid1D::new(80, 200, 1.0).unwrap();
    let paths = brownian(20, 400, fine.dt(), 6);
    let pair = manufacture_heat_pair(&fine, 4, 8, true).unwrap();
    let w = weight(Interval::new(0.3, 0.7));
    let a = heat_terms(&pair, &fine, &paths, &w, &LAMBDAS).unwrap();
    let b = heat_terms(&pair, &coarse, &paths.coarsen(), &w, &LAMBDAS).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!(rel(y.lhs, x.lhs) < 0.05, "λ = {}: {} vs {}", x.lambda, y.lhs, x.lhs);
        assert!(rel(y.rhs, x.rhs) < 0.05);
    }
}

#[test]
fn reports_are_bitwise_reproducible() {
    let grid = Grid1D::new(40, 80, 1.0).unwrap();
    let w = weight(Interval::new(0.3, 0.7));
    let run = || {
        let paths = brownian(8, 80, grid.dt(), 77);
        let pairs: Vec<_> = (0..2).map(|s| manufacture_heat_pair(&grid, 2, s, true).unwrap()).collect();
        carleman_heat_check(&pairs, &grid, &paths, &w, &LAMBDAS).unwrap()
    };
    assert_eq!(run(), run());
}
