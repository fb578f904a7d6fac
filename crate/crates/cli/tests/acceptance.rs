//! Acceptance run: one line per criterion, `criterion k: PASS|FAIL ...`.
//!
//! Criterion 4 is a known failure: the B ratio converges, but to
//! `1 + ψ''/(μψ'²)` rather than 1. The target accepts that FAIL only when the
//! measured ratios match this limit; any other failure exits non-zero.

use std::io::Write;
use std::time::{Duration, Instant};

use carleman_core::{build_case, build_identity, oracle_check, OperatorSpec, Regime, CASE_IDS};
use carleman_sim::demos::transport_sides;
use carleman_sim::{
    backward_uniqueness_probe, brownian, carleman_gl_check, carleman_heat_check, compute_tau, dt_convergence, first_order_demo,
    heat_decay_check, leading_order_b_check, manufacture_heat_pair, ode_demo, optimizer_agreement, psi_1d, random_problem,
    stability_experiment, BumpSum, CutoffSpec, Grid1D, HeatWeight, Interval, OdeSystem, RandomProblemSpec, Transport,
};

mod tol {
    pub const IDENTITY_SECONDS: u64 = 60;
    pub const ORACLE_ASSIGNMENTS: usize = 20;
    pub const B_LAMBDA: f64 = 1e4;
    pub const B_SWEEP: [f64; 3] = [1e3, 1e4, 1e5];
    pub const B_MU: f64 = 4.0;
    pub const B_TOLERANCE: f64 = 0.15;
    pub const B_MIN_PSI_PRIME: f64 = 0.2;
    /// agreement with the analytic limit that explains the criterion-4 failure
    pub const B_LIMIT_AGREEMENT: f64 = 1e-3;
    pub const HEAT_PAIRS: usize = 10;
    pub const HEAT_PATHS: usize = 50;
    pub const HEAT_LAMBDAS: [f64; 4] = [20.0, 40.0, 80.0, 160.0];
    pub const HEAT_MU: f64 = 4.0;
    pub const HEAT_MIN_RELATIVE: f64 = 0.5;
    pub const HEAT_MIN_SLOPE: f64 = -0.05;
    pub const HEAT_SECONDS: u64 = 300;
    pub const GL_ENSEMBLES: usize = 10;
    pub const GL_MUS: [f64; 3] = [2.0, 3.0, 4.0];
    pub const OPTIMIZER_DRAWS: usize = 100;
    pub const MAX_SPREAD: f64 = 1e3;
    pub const STABILITY_ENSEMBLES: usize = 20;
    pub const UNIQUENESS_EPSILONS: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];
    pub const UNIQUENESS_SLACK: f64 = 0.1;
    pub const DECAY_RELATIVE: f64 = 0.02;
    pub const CONVERGENCE_RELATIVE: f64 = 0.3;
    pub const DEMO_SYSTEMS: usize = 10;
    pub const DEMO_FUNCTIONS: usize = 10;
}

struct Outcome {
    pass: bool,
    /// a failure that is documented and confirmed; does not fail the target
    explained: bool,
    summary: String,
}

fn pass(ok: bool, summary: String) -> Outcome {
    Outcome { pass: ok, explained: false, summary }
}

/// Criteria 1 to 3 share the builds: symbolic residuals (timed), then the
/// jet oracle with one mutation per identity.
fn identities() -> (Outcome, Outcome, Outcome) {
    let limit = Duration::from_secs(tol::IDENTITY_SECONDS);
    let mut c1 = (true, Duration::ZERO, 0usize, Vec::new());
    let mut oracle = (true, 0usize, Vec::new());
    for n in 1..=3 {
        for regime in [Regime::R1, Regime::R2, Regime::R3] {
            let start = Instant::now();
            let (ctx, id) = build_identity(&OperatorSpec::new(n, regime)).unwrap();
            let r = id.verify(&ctx).unwrap();
            let took = start.elapsed();
            c1.1 = c1.1.max(took);
            c1.2 += 1;
            if !r.zero || took > limit {
                c1.0 = false;
                c1.3.push(format!("{regime} n={n}"));
            }
            let o = oracle_check(&ctx, &id, 1000 + n as u64, tol::ORACLE_ASSIGNMENTS).unwrap();
            oracle.1 += 1;
            if !(o.all_zero && o.mutation_detected) {
                oracle.0 = false;
                oracle.2.push(format!("{regime} n={n}"));
            }
        }
    }
    let mut c2 = (true, 0usize, 0usize, Vec::new());
    for id in CASE_IDS {
        for n in 1..=3 {
            let case = build_case(id, n).unwrap();
            for identity in &case.identities {
                let r = identity.verify(&case.ctx).unwrap();
                if !identity.expect_zero {
                    c2.2 += 1;
                    continue;
                }
                c2.1 += 1;
                if !r.zero {
                    c2.0 = false;
                    c2.3.push(format!("{id} n={n}: {}", identity.label));
                }
                let o = oracle_check(&case.ctx, identity, 2000 + n as u64, tol::ORACLE_ASSIGNMENTS).unwrap();
                oracle.1 += 1;
                if !(o.all_zero && o.mutation_detected) {
                    oracle.0 = false;
                    oracle.2.push(format!("{id} n={n}: {}", identity.label));
                }
            }
        }
    }
    (
        pass(c1.0, format!("{} cases exact, slowest {:.1}s (limit {}s) {:?}", c1.2, c1.1.as_secs_f64(), tol::IDENTITY_SECONDS, c1.3)),
        pass(
            c2.0,
            format!("{} identities over {} cases x n=1..3 exact; {} printed deltas recorded {:?}", c2.1, CASE_IDS.len(), c2.2, c2.3),
        ),
        pass(
            oracle.0,
            format!("{} identities x {} assignments all (0, 0), every mutation detected {:?}", oracle.1, tol::ORACLE_ASSIGNMENTS, oracle.2),
        ),
    )
}

fn criterion_4() -> Outcome {
    let psi = psi_1d(Interval::new(0.3, 0.7)).unwrap();
    let w = HeatWeight::new(psi, tol::B_MU, 1.0, 1, 1.0).unwrap();
    let points = [(0.2, 0.5), (0.1, 0.3), (0.85, 0.6), (0.35, 0.5)];
    assert!(points.iter().all(|(x, _)| psi.d1(*x).abs() >= tol::B_MIN_PSI_PRIME));
    let r = leading_order_b_check(&w, &points, &tol::B_SWEEP, tol::B_LAMBDA, tol::B_TOLERANCE).unwrap();
    let at = |p: &carleman_sim::weights::BPointReport| p.ratios[tol::B_SWEEP.iter().position(|l| *l == tol::B_LAMBDA).unwrap()];
    let worst = r.points.iter().map(|p| (at(p) - 1.0).abs()).fold(0.0, f64::max);
    let explained = r.points.iter().all(|p| p.converging_to_limit && (p.ratios.last().unwrap() - p.predicted_limit).abs() < tol::B_LIMIT_AGREEMENT);
    let p0 = &r.points[0];
    Outcome {
        pass: r.passed,
        explained: !r.passed && explained,
        summary: format!(
            "max |ratio - 1| = {worst:.3} at lambda = 1e4 (tolerance {}); ratios converge to 1 + psi''/(mu psi'^2), e.g. {:.4} at x = {}, limit {:.4}{}",
            tol::B_TOLERANCE,
            p0.ratios.last().unwrap(),
            p0.x,
            p0.predicted_limit,
            if explained { "; analytic limit confirmed" } else { "; NOT explained by the analytic limit" }
        ),
    }
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let grid = Grid1D::new(100, 200, 1.0).unwrap();
    let paths = brownian(tol::HEAT_PATHS, grid.nt, grid.dt(), 1);
    let pairs: Vec<_> = (0..tol::HEAT_PAIRS as u64).map(|s| manufacture_heat_pair(&grid, 4, s, true).unwrap()).collect();
    let psi = psi_1d(Interval::new(0.3, 0.7)).unwrap();
    let w = HeatWeight::new(psi, tol::HEAT_MU, tol::HEAT_LAMBDAS[0], 1, 1.0).unwrap();
    let r = carleman_heat_check(&pairs, &grid, &paths, &w, &tol::HEAT_LAMBDAS).unwrap();
    // recompute from the rows with the pinned tolerances
    let mut min_rel = f64::INFINITY;
    let mut min_slope = f64::INFINITY;
    for p in &r.pairs {
        let r0 = p.rows[0].ratio;
        min_rel = p.rows.iter().map(|row| row.ratio / r0).fold(min_rel, f64::min);
        min_slope = min_slope.min(p.log_slope);
    }
    let took = start.elapsed();
    let ok = r.pairs.len() >= 10 && min_rel >= tol::HEAT_MIN_RELATIVE && min_slope >= tol::HEAT_MIN_SLOPE && took.as_secs() <= tol::HEAT_SECONDS;
    pass(ok, format!("{} pairs, min ratio/ratio(20) = {min_rel:.3}, min log slope = {min_slope:.4}, {:.1}s", r.pairs.len(), took.as_secs_f64()))
}

fn criterion_6() -> Outcome {
    let grid = Grid1D::new(40, 250, 0.25).unwrap();
    let spec = RandomProblemSpec { coefficient_amp: 0.0, source_amp: 0.5, ..Default::default() };
    let problems: Vec<_> = (0..tol::GL_ENSEMBLES as u64).map(|s| random_problem(s, &spec)).collect();
    let r = carleman_gl_check(&problems, &grid, 20, 5, &tol::GL_MUS, 0.05, 5, 2.0).unwrap();
    let covered = (0..tol::GL_MUS.len()).all(|k| r.ensembles.iter().all(|e| e[k].lhs <= r.fitted_c[k] * e[k].rhs));
    pass(
        covered && r.zero_solution && r.scaling_invariant && r.ensembles.len() >= 10,
        format!(
            "C(mu) = {:?} fitted on 5 of {} ensembles, max utilization {:?}; zero solution {}, scaling {}",
            r.fitted_c.iter().map(|c| format!("{c:.3e}")).collect::<Vec<_>>(),
            r.ensembles.len(),
            r.max_utilization.iter().map(|u| format!("{u:.2}")).collect::<Vec<_>>(),
            r.zero_solution,
            r.scaling_invariant
        ),
    )
}

fn criterion_7() -> Outcome {
    // τ ∈ (0, 1), increasing in t0, decreasing in C
    let mut tau_ok = true;
    for i in 0..50 {
        let (t1, t0, mu, c) = (0.01 * i as f64 % 0.4, 0.45 + 0.005 * i as f64, 2.5 + 0.05 * i as f64, 0.1 + i as f64);
        let tau = compute_tau(t0, t1, mu, c).unwrap();
        tau_ok &= tau > 0.0 && tau < 1.0;
        tau_ok &= compute_tau(t0 + 0.01, t1, mu, c).unwrap() > tau && compute_tau(t0, t1, mu, 1.1 * c).unwrap() < tau;
    }
    let opt = optimizer_agreement(tol::OPTIMIZER_DRAWS, 2, 10.0, 10_000).unwrap();

    let grid = Grid1D::new(40, 200, 0.5).unwrap();
    let cut = CutoffSpec::new(0.1, 0.15, 0.25, 0.5).unwrap();
    let problems: Vec<_> = (0..tol::STABILITY_ENSEMBLES as u64).map(|s| random_problem(100 + s, &RandomProblemSpec::default())).collect();
    let stab = stability_experiment(&problems, &grid, 20, 9, &cut, 3.0, 10.0, 10.0, tol::MAX_SPREAD).unwrap();
    let tau_fit = stab.tau.with_t1;
    let uniq = backward_uniqueness_probe(&problems[0], &grid, 20, 3, 0.25, &tol::UNIQUENESS_EPSILONS, tau_fit).unwrap();
    let ok = tau_ok
        && opt.worst_cells <= 1.0
        && stab.spread <= tol::MAX_SPREAD
        && stab.falsification_candidates.is_empty()
        && uniq.slope >= tau_fit - tol::UNIQUENESS_SLACK;
    pass(
        ok,
        format!(
            "tau(t1) = {:.3}, tau(t2) = {:.3}; optimizer within {:.2} cells on {} draws; spread {:.2} over {}; uniqueness slope {:.3} >= {:.3}, tampered control {:.3}",
            stab.tau.with_t1,
            stab.tau.with_t2,
            opt.worst_cells,
            opt.draws,
            stab.spread,
            problems.len(),
            uniq.slope,
            tau_fit - tol::UNIQUENESS_SLACK,
            uniq.tampered_slope
        ),
    )
}

fn criterion_8() -> Outcome {
    let d = heat_decay_check(&Grid1D::new(200, 2000, 0.1).unwrap());
    let c = dt_convergence(200, 25, 4, 0.1).unwrap();
    let ok = d.relative_error < tol::DECAY_RELATIVE && c.ratios.iter().all(|r| (r / 2.0 - 1.0).abs() <= tol::CONVERGENCE_RELATIVE);
    pass(ok, format!("decay error {:.4}; refinement ratios {:?}", d.relative_error, c.ratios.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>()))
}

fn criterion_9() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut ode_ok = true;
    for seed in 0..tol::DEMO_SYSTEMS as u64 {
        let r = ode_demo(&OdeSystem::random(3, seed), &[1.0, -0.5, 0.25], 5.0, 2000);
        worst = worst.max(r.worst_ratio);
        ode_ok &= r.passed;
    }
    let tr = Transport::standard();
    let ls = tr.lambda_star().unwrap();
    let lambdas: Vec<f64> = (0..6).map(|k| ls * 2f64.powi(k)).collect();
    let us: Vec<_> = (0..tol::DEMO_FUNCTIONS as u64).map(BumpSum::random).collect();
    let r = first_order_demo(&tr, &us, &lambdas, 4000).unwrap();
    // the one fitted C covers every (u, λ) pair
    let single = us.iter().all(|u| lambdas.iter().all(|&l| {
        let (a, b) = transport_sides(&tr, u, l, 4000);
        a <= r.fitted_c * b * (1.0 + 1e-12)
    }));
    pass(
        ode_ok && r.passed && single,
        format!("ODE worst |x|e^(-lambda t)/|x0| = {worst:.3}; first order fitted C = {:.4} <= explicit {:.1}", r.fitted_c, r.theoretical_c),
    )
}

fn main() {
    let mut stderr = std::io::stderr();
    let (c1, c2, c3) = identities();
    let results =
        vec![c1, c2, c3, criterion_4(), criterion_5(), criterion_6(), criterion_7(), criterion_8(), criterion_9()];
    let mut unexpected = 0;
    for (k, r) in results.iter().enumerate() {
        let verdict = if r.pass { "PASS" } else { "FAIL" };
        let note = if r.explained { " [documented]" } else { "" };
        writeln!(stderr, "criterion {}: {verdict}{note} {}", k + 1, r.summary).unwrap();
        if !r.pass && !r.explained {
            unexpected += 1;
        }
    }
    // criterion 4 passing would contradict the analysis it is documented with
    if results[3].pass {
        writeln!(stderr, "criterion 4 passed; the documented analysis predicts otherwise").unwrap();
        unexpected += 1;
    }
    if unexpected > 0 {
        writeln!(stderr, "{unexpected} unexpected acceptance failure(s)").unwrap();
        std::process::exit(1);
    }
}
