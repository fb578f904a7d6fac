//! Verb dispatch. Each verb resolves its effective config, runs the module
//! operations and returns the report plus optional CSV series.

use std::collections::BTreeMap;
use std::time::Instant;

use carleman_core::special::resolve_case_id;
use carleman_core::{build_case, build_identity, oracle_check, Context, Identity, OperatorSpec, Regime, CASE_IDS};
use carleman_sim::weights::trace;
use carleman_sim::{
    backward_uniqueness_probe, brownian, carleman_gl_check, carleman_heat_check, first_order_demo, leading_order_b_check,
    manufacture_heat_pair, ode_demo, optimizer_agreement, psi_1d, random_problem, stability_experiment, theta_monotone, BumpSum,
    CutoffSpec, GlWeight, Grid1D, HeatWeight, Interval, OdeSystem, RandomProblemSpec, Transport,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{
    check, Config, DemoConfig, EnsembleConfig, GridConfig, IdentityConfig, InverseConfig, OperatorConfig, SweepConfig, WeightConfig,
};
use crate::report::{
    num, Check, CommandEcho, RunReport, Series, GL_HEADER, HEAT_HEADER, IDENTITY_HEADER, INVERSE_HEADER, ODE_HEADER, TRACE_HEADER,
    TRANSPORT_HEADER,
};
use crate::{CliError, DemoKind, Verb};

pub struct Outcome {
    pub report: RunReport,
    pub series: Option<Series>,
    pub trace: Option<Series>,
}

/// Random problems draw from a seed range disjoint from the Brownian seeds.
pub fn member_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_add(1 << 32).wrapping_add(i as u64)
}

fn cfg_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

struct Timer(BTreeMap<String, u128>, Instant);

impl Timer {
    fn new() -> Self {
        Timer(BTreeMap::new(), Instant::now())
    }

    fn lap(&mut self, id: &str) {
        self.0.insert(id.to_string(), self.1.elapsed().as_millis());
        self.1 = Instant::now();
    }
}

pub fn run(verb: &Verb, cfg: &Config, seed_override: Option<u64>, timings: bool) -> Result<Outcome, CliError> {
    let seed = seed_override.or(cfg.seed).unwrap_or(0);
    let mut timer = Timer::new();
    let (effective, checks, series, trace) = match verb {
        Verb::IdentityVerify { regime, n, case, mutate } => {
            let (e, c, s) = identity_verify(cfg, regime.as_deref(), *n, case.as_deref(), *mutate, seed, &mut timer)?;
            (e, c, Some(s), None)
        }
        Verb::IdentitySteps { n, mutate } => {
            let (e, c, s) = identity_steps(cfg, *n, *mutate, seed, &mut timer)?;
            (e, c, Some(s), None)
        }
        Verb::CarlemanHeat { trace } => {
            let (e, c, s, t) = carleman_heat(cfg, seed, trace.is_some(), &mut timer)?;
            (e, c, Some(s), t)
        }
        Verb::CarlemanGl => {
            let (e, c, s) = carleman_gl(cfg, seed, &mut timer)?;
            (e, c, Some(s), None)
        }
        Verb::InverseGl => {
            let (e, c, s) = inverse_gl(cfg, seed, &mut timer)?;
            (e, c, Some(s), None)
        }
        Verb::Demo { kind } => {
            let (e, c, s) = demo(cfg, *kind, seed, &mut timer)?;
            (e, c, Some(s), None)
        }
    };
    let command = CommandEcho {
        verb: verb.name().to_string(),
        args: serde_json::to_value(verb).unwrap_or(Value::Null),
        config: serde_json::to_value(&effective).unwrap_or(Value::Null),
    };
    let mut report = RunReport::new(command, seed, checks);
    if timings {
        report.timings_ms = Some(serde_json::to_value(&timer.0).unwrap_or(Value::Null));
    }
    Ok(Outcome { report, series, trace })
}

type Ran<S> = Result<(Config, Vec<Check>, S), CliError>;

// ---------------------------------------------------------------- identities

fn identity_config(cfg: &Config) -> Result<IdentityConfig, CliError> {
    let c = cfg.identity.unwrap_or(IdentityConfig { assignments: 20 });
    check(c.assignments >= 1, || "identity.assignments must be at least 1".into())?;
    Ok(c)
}

fn dims(n: Option<usize>) -> Result<Vec<usize>, CliError> {
    match n {
        Some(n) if (1..=3).contains(&n) => Ok(vec![n]),
        Some(n) => Err(CliError::Usage(format!("--n must be 1, 2 or 3, got {n}"))),
        None => Ok(vec![1, 2, 3]),
    }
}

#[derive(Serialize)]
struct IdentityDetail {
    case: String,
    n: usize,
    residual: carleman_core::ResidualSummary,
    oracle: Option<carleman_core::OracleReport>,
    dropped: Option<String>,
}

/// Verifies one identity symbolically and, unless mutated, by the jet oracle.
fn identity_check(
    case: &str,
    n: usize,
    ctx: &Context,
    id: &Identity,
    mutate: bool,
    ic: &IdentityConfig,
    seed: u64,
    series: &mut Series,
) -> Result<Check, CliError> {
    let core = |e: carleman_core::ExprError| CliError::Usage(e.to_string());
    let (target, dropped) = if mutate {
        let (d, m) = id.mutated(ctx).map_err(core)?;
        (m, Some(d))
    } else {
        (id.clone(), None)
    };
    let residual = target.verify(ctx).map_err(core)?;
    let oracle = if mutate { None } else { Some(oracle_check(ctx, &target, seed, ic.assignments).map_err(core)?) };
    let oracle_ok = match &oracle {
        Some(o) if target.expect_zero => o.all_zero && o.mutation_detected,
        _ => true,
    };
    let summary = residual.summary();
    series.push(vec![
        case.to_string(),
        n.to_string(),
        summary.label.clone(),
        summary.expect_zero.to_string(),
        summary.zero.to_string(),
        summary.lhs_terms.to_string(),
        summary.rhs_terms.to_string(),
        summary.surviving_monomials.len().to_string(),
    ]);
    Ok(Check::new(
        format!("{case}/n={n}/{}", target.label),
        residual.passed() && oracle_ok,
        IdentityDetail { case: case.to_string(), n, residual: summary, oracle, dropped },
    ))
}

fn run_case(case: &str, n: usize, mutate: bool, ic: &IdentityConfig, seed: u64, series: &mut Series) -> Result<Vec<Check>, CliError> {
    let c = build_case(case, n).map_err(|e| CliError::Usage(e.to_string()))?;
    c.identities.iter().map(|id| identity_check(&c.id, n, &c.ctx, id, mutate, ic, seed, series)).collect()
}

fn identity_verify(
    cfg: &Config,
    regime: Option<&str>,
    n: Option<usize>,
    case: Option<&str>,
    mutate: bool,
    seed: u64,
    timer: &mut Timer,
) -> Ran<Series> {
    let ic = identity_config(cfg)?;
    let mut series = Series::new(&IDENTITY_HEADER);
    let mut checks = Vec::new();
    match (case, regime) {
        (Some(_), Some(_)) => return Err(CliError::Usage("--case and --regime are exclusive".into())),
        (Some(case), None) => {
            let id = resolve_case_id(case).map_err(|e| CliError::Usage(e.to_string()))?;
            for n in dims(n)? {
                checks.extend(run_case(id, n, mutate, &ic, seed, &mut series)?);
                timer.lap(&format!("{id}/n={n}"));
            }
        }
        (None, regime) => {
            let regimes = match regime {
                Some(r) => vec![r.parse::<Regime>().map_err(CliError::Usage)?],
                None => vec![Regime::R1, Regime::R2, Regime::R3],
            };
            for r in regimes {
                for n in dims(n)? {
                    let (ctx, id) = build_identity(&OperatorSpec::new(n, r)).map_err(|e| CliError::Usage(e.to_string()))?;
                    checks.push(identity_check(&format!("theorem_{r}"), n, &ctx, &id, mutate, &ic, seed, &mut series)?);
                    timer.lap(&format!("theorem_{r}/n={n}"));
                }
            }
        }
    }
    Ok((Config { seed: Some(seed), identity: Some(ic), ..Default::default() }, checks, series))
}

fn identity_steps(cfg: &Config, n: Option<usize>, mutate: bool, seed: u64, timer: &mut Timer) -> Ran<Series> {
    let ic = identity_config(cfg)?;
    let mut series = Series::new(&IDENTITY_HEADER);
    let mut checks = Vec::new();
    for case in CASE_IDS.iter().filter(|c| c.starts_with("step") || **c == "proof_replay") {
        for n in dims(n)? {
            checks.extend(run_case(case, n, mutate, &ic, seed, &mut series)?);
            timer.lap(&format!("{case}/n={n}"));
        }
    }
    Ok((Config { seed: Some(seed), identity: Some(ic), ..Default::default() }, checks, series))
}

// ---------------------------------------------------------------- heat

fn heat_defaults(cfg: &Config) -> Result<(GridConfig, EnsembleConfig, WeightConfig, OperatorConfig, SweepConfig), CliError> {
    let grid = cfg.grid.unwrap_or(GridConfig { nx: 100, nt: 200, t_final: 1.0 });
    let ens = cfg.ensemble.unwrap_or(EnsembleConfig { paths: 50, members: 10, calibration: None, safety: None });
    let weight = cfg.weight.clone().unwrap_or(WeightConfig {
        mu: 4.0,
        g0: [0.3, 0.7],
        k: 1,
        leading_order_check: false,
        trace_xs: Vec::new(),
        trace_ts: Vec::new(),
    });
    let op = cfg.operator.unwrap_or(OperatorConfig {
        b_max: 1.0,
        coefficient_amp: 0.0,
        source_amp: 0.0,
        w0_modes: 1,
        modes: 4,
        stochastic: true,
    });
    let mut sweep = cfg.sweep.clone().unwrap_or(SweepConfig { lambdas: Vec::new(), mus: Vec::new(), delta: 0.0 });
    if sweep.lambdas.is_empty() {
        sweep.lambdas = vec![20.0, 40.0, 80.0, 160.0];
    }
    grid.validate()?;
    ens.validate()?;
    check(sweep.lambdas.iter().all(|l| *l > 0.0) && sweep.lambdas.windows(2).all(|w| w[1] > w[0]), || {
        "sweep.lambdas must be positive and increasing".into()
    })?;
    Ok((grid, ens, weight, op, sweep))
}

/// Points with `|ψ'| ≥ 0.2` in the middle of the time interval.
const B_POINTS: [(f64, f64); 4] = [(0.2, 0.5), (0.1, 0.3), (0.85, 0.6), (0.35, 0.5)];

fn carleman_heat(cfg: &Config, seed: u64, want_trace: bool, timer: &mut Timer) -> Result<(Config, Vec<Check>, Series, Option<Series>), CliError> {
    let (gc, ens, wc, op, sweep) = heat_defaults(cfg)?;
    let grid = Grid1D::new(gc.nx, gc.nt, gc.t_final).map_err(cfg_err)?;
    let psi = psi_1d(Interval::new(wc.g0[0], wc.g0[1])).map_err(cfg_err)?;
    let weight = HeatWeight::new(psi, wc.mu, sweep.lambdas[0], wc.k, gc.t_final).map_err(cfg_err)?;
    let pairs = (0..ens.members)
        .map(|i| manufacture_heat_pair(&grid, op.modes, member_seed(seed, i), op.stochastic))
        .collect::<Result<Vec<_>, _>>()
        .map_err(cfg_err)?;
    let paths = brownian(ens.paths, grid.nt, grid.dt(), seed);
    let report = carleman_heat_check(&pairs, &grid, &paths, &weight, &sweep.lambdas).map_err(cfg_err)?;
    timer.lap("heat_estimate");

    let mut series = Series::new(&HEAT_HEADER);
    for p in &report.pairs {
        for r in &p.rows {
            series.push(vec![p.pair.to_string(), num(r.lambda), num(r.lhs), num(r.rhs), num(r.ratio), num(r.lhs_se), num(r.rhs_se)]);
        }
    }
    let mut checks = vec![Check::new("heat_estimate", report.passed, &report)];
    if wc.leading_order_check {
        let w = HeatWeight::new(psi, wc.mu, 1.0, wc.k, gc.t_final).map_err(cfg_err)?;
        let b = leading_order_b_check(&w, &B_POINTS, &[1e3, 1e4, 1e5], 1e4, 0.15).map_err(cfg_err)?;
        checks.push(Check::new("leading_order_b", b.passed, &b));
        timer.lap("leading_order_b");
    }
    let trace_series = if want_trace {
        let xs = if wc.trace_xs.is_empty() { (1..20).map(|i| i as f64 / 20.0).collect() } else { wc.trace_xs.clone() };
        let ts = if wc.trace_ts.is_empty() { (1..10).map(|i| i as f64 * gc.t_final / 10.0).collect() } else { wc.trace_ts.clone() };
        let rows = trace(&weight, &xs, &ts).map_err(cfg_err)?;
        let mut s = Series::new(&TRACE_HEADER);
        for r in rows {
            s.push(vec![num(r.x), num(r.t), num(r.gamma), num(r.phi), num(r.alpha), num(r.theta), num(r.a), num(r.b)]);
        }
        Some(s)
    } else {
        None
    };
    let effective = Config {
        seed: Some(seed),
        grid: Some(gc),
        ensemble: Some(ens),
        weight: Some(wc),
        operator: Some(op),
        sweep: Some(sweep),
        ..Default::default()
    };
    Ok((effective, checks, series, trace_series))
}

// ---------------------------------------------------------------- GL

fn problem_spec(op: &OperatorConfig) -> RandomProblemSpec {
    RandomProblemSpec { b_max: op.b_max, coefficient_amp: op.coefficient_amp, source_amp: op.source_amp, w0_modes: op.w0_modes }
}

fn carleman_gl(cfg: &Config, seed: u64, timer: &mut Timer) -> Ran<Series> {
    let gc = cfg.grid.unwrap_or(GridConfig { nx: 40, nt: 250, t_final: 0.25 });
    let ens = cfg.ensemble.unwrap_or(EnsembleConfig { paths: 20, members: 10, calibration: None, safety: None });
    let op = cfg.operator.unwrap_or(OperatorConfig {
        b_max: 1.0,
        coefficient_amp: 0.0,
        source_amp: 0.5,
        w0_modes: 3,
        modes: 4,
        stochastic: true,
    });
    let mut sweep = cfg.sweep.clone().unwrap_or(SweepConfig { lambdas: Vec::new(), mus: Vec::new(), delta: 0.05 });
    if sweep.mus.is_empty() {
        sweep.mus = vec![2.0, 3.0, 4.0];
    }
    gc.validate()?;
    ens.validate()?;
    let ens = ens.with_fit_defaults()?;
    let (calibration, safety) = (ens.calibration.unwrap_or(1), ens.safety.unwrap_or(2.0));
    let grid = Grid1D::new(gc.nx, gc.nt, gc.t_final).map_err(cfg_err)?;
    let problems: Vec<_> = (0..ens.members).map(|i| random_problem(member_seed(seed, i), &problem_spec(&op))).collect();
    let report =
        carleman_gl_check(&problems, &grid, ens.paths, seed, &sweep.mus, sweep.delta, calibration, safety).map_err(cfg_err)?;
    timer.lap("gl_estimate");

    let mut series = Series::new(&GL_HEADER);
    for (e, row) in report.ensembles.iter().enumerate() {
        for t in row {
            series.push(vec![e.to_string(), num(t.mu), num(t.lhs), num(t.rhs), num(t.ratio()), num(t.lhs_se), num(t.rhs_se)]);
        }
    }
    let holds = report.max_utilization.iter().all(|u| u.is_finite() && *u <= 1.0);
    let ts: Vec<f64> = (0..=100).map(|i| i as f64 * gc.t_final / 100.0).collect();
    let monotone = sweep.mus.iter().all(|&mu| GlWeight::new(mu).map(|w| theta_monotone(&w, &ts)).unwrap_or(false));
    let checks = vec![
        Check::new("gl_estimate", holds, &report),
        Check::new("zero_solution", report.zero_solution, json!({ "lhs": 0.0, "rhs": 0.0 })),
        Check::new("scaling_invariance", report.scaling_invariant, json!({ "factor": 2.0 })),
        Check::new("theta_increasing", monotone, json!({ "mus": sweep.mus })),
    ];
    let effective = Config {
        seed: Some(seed),
        grid: Some(gc),
        ensemble: Some(ens),
        operator: Some(op),
        sweep: Some(sweep),
        ..Default::default()
    };
    Ok((effective, checks, series))
}

// ---------------------------------------------------------------- inverse

fn inverse_gl(cfg: &Config, seed: u64, timer: &mut Timer) -> Ran<Series> {
    let gc = cfg.grid.unwrap_or(GridConfig { nx: 40, nt: 200, t_final: 0.5 });
    let ens = cfg.ensemble.unwrap_or(EnsembleConfig { paths: 20, members: 20, calibration: None, safety: None });
    let op = cfg.operator.unwrap_or(OperatorConfig {
        b_max: 1.0,
        coefficient_amp: 0.5,
        source_amp: 0.0,
        w0_modes: 3,
        modes: 4,
        stochastic: true,
    });
    let inv = cfg.inverse.clone().unwrap_or(InverseConfig {
        t1: 0.1,
        t2: 0.15,
        t0: 0.25,
        mu1: 3.0,
        c_tau: 10.0,
        mu_max: 10.0,
        max_spread: 1e3,
        epsilons: vec![1e-1, 1e-2, 1e-3, 1e-4],
        tau_fit: None,
        probe_member: 0,
        optimizer_draws: 100,
    });
    gc.validate()?;
    ens.validate()?;
    check(inv.probe_member < ens.members, || format!("inverse.probe_member must be below {}", ens.members))?;
    check(op.source_amp == 0.0, || "inverse-gl needs source_amp = 0: the estimate is for the homogeneous equation".into())?;
    let grid = Grid1D::new(gc.nx, gc.nt, gc.t_final).map_err(cfg_err)?;
    let cut = CutoffSpec::new(inv.t1, inv.t2, inv.t0, gc.t_final).map_err(cfg_err)?;
    let problems: Vec<_> = (0..ens.members).map(|i| random_problem(member_seed(seed, i), &problem_spec(&op))).collect();

    let stab = stability_experiment(&problems, &grid, ens.paths, seed, &cut, inv.mu1, inv.c_tau, inv.mu_max, inv.max_spread)
        .map_err(cfg_err)?;
    timer.lap("holder_stability");
    let tau_ok = [stab.tau.with_t1, stab.tau.with_t2].iter().all(|t| *t > 0.0 && *t < 1.0);
    let opt = optimizer_agreement(inv.optimizer_draws, seed, inv.mu_max, 10_000).map_err(cfg_err)?;
    timer.lap("mu_optimizer");
    let tau_fit = inv.tau_fit.unwrap_or(stab.tau.with_t1);
    let uniq = backward_uniqueness_probe(&problems[inv.probe_member], &grid, ens.paths, seed, inv.t0, &inv.epsilons, tau_fit)
        .map_err(cfg_err)?;
    timer.lap("backward_uniqueness");

    let mut series = Series::new(&INVERSE_HEADER);
    for (i, (n, q)) in stab.norms.iter().zip(&stab.quotients).enumerate() {
        series.push(vec![i.to_string(), num(n.n1), num(n.n2), num(n.n3), num(*q), num(stab.mu_star[i])]);
    }
    let checks = vec![
        Check::new("tau", tau_ok, stab.tau),
        Check::new("mu_optimizer", opt.passed, &opt),
        Check::new("holder_stability", stab.passed, &stab),
        Check::new("backward_uniqueness", uniq.passed, &uniq),
    ];
    let effective = Config {
        seed: Some(seed),
        grid: Some(gc),
        ensemble: Some(ens),
        operator: Some(op),
        inverse: Some(inv),
        ..Default::default()
    };
    Ok((effective, checks, series))
}

// ---------------------------------------------------------------- demos

fn demo(cfg: &Config, kind: DemoKind, seed: u64, timer: &mut Timer) -> Ran<Series> {
    let d = cfg.demo.clone().unwrap_or(DemoConfig {
        systems: 10,
        dim: 3,
        t_final: 5.0,
        steps: 2000,
        functions: 10,
        lambda_multipliers: vec![1.0, 2.0, 4.0, 8.0, 16.0, 32.0],
        cells: 4000,
        x0: -0.5,
        slope: -1.0,
        gamma0: 0.0,
        constant: None,
    });
    check(d.dim >= 1 && d.steps >= 1 && d.t_final > 0.0 && d.cells >= 2, || "demo needs dim, steps >= 1, cells >= 2, t_final > 0".into())?;
    let mut checks = Vec::new();
    let series = match kind {
        DemoKind::Ode => {
            let mut s = Series::new(&ODE_HEADER);
            let sine = ode_demo(&OdeSystem::scalar_sine(), &[1.0], d.t_final, d.steps);
            s.push(vec!["scalar_sine".into(), num(sine.lambda), num(sine.worst_ratio), sine.passed.to_string()]);
            checks.push(Check::new("ode/scalar_sine", sine.passed, &sine));
            let x0: Vec<f64> = (0..d.dim).map(|i| (-0.5f64).powi(i as i32)).collect();
            for i in 0..d.systems {
                let sys = OdeSystem::random(d.dim, member_seed(seed, i));
                let r = ode_demo(&sys, &x0, d.t_final, d.steps);
                s.push(vec![i.to_string(), num(r.lambda), num(r.worst_ratio), r.passed.to_string()]);
                checks.push(Check::new(format!("ode/{i}"), r.passed, &r));
            }
            timer.lap("ode");
            s
        }
        DemoKind::FirstOrder => {
            let tr = Transport { x0: d.x0, slope: d.slope, gamma0: d.gamma0 };
            let ls = tr.lambda_star().map_err(cfg_err)?;
            let lambdas: Vec<f64> = d.lambda_multipliers.iter().map(|m| ls * m).collect();
            let us: Vec<_> = (0..d.functions).map(|i| BumpSum::random(member_seed(seed, i))).collect();
            let r = first_order_demo(&tr, &us, &lambdas, d.cells).map_err(cfg_err)?;
            let claimed = d.constant.unwrap_or(r.theoretical_c);
            let mut s = Series::new(&TRANSPORT_HEADER);
            for (i, q) in r.quotients.iter().enumerate() {
                for (l, v) in r.lambdas.iter().zip(q) {
                    s.push(vec![i.to_string(), num(*l), num(*v)]);
                }
            }
            let passed = r.fitted_c.is_finite() && r.fitted_c <= claimed;
            checks.push(Check::new("first_order", passed, json!({ "report": r, "tested_constant": claimed })));
            let zero = first_order_demo(&tr, &[BumpSum::zero()], &lambdas, d.cells).map_err(cfg_err)?;
            checks.push(Check::new("first_order/zero", zero.fitted_c == 0.0, json!({ "fitted_c": zero.fitted_c })));
            timer.lap("first_order");
            s
        }
    };
    Ok((Config { seed: Some(seed), demo: Some(d), ..Default::default() }, checks, series))
}
