//! Specializations of the weighted identity, the intermediate identities of
//! its proof, and a catalog that addresses them by stable string ids.
//!
//! Printed forms are transcribed literally. Where a printed form disagrees
//! with the specialized theorem, the literal transcription is kept as a
//! recorded delta and a corrected transcription is required to vanish.

use serde::Serialize;

use crate::context::Context;
use crate::error::ExprError;
use crate::expr::Expr;
use crate::theorem::{identity_coefficients, standard_context, sum2, sum_over, Layout, Symbols, Unknown};
use crate::verify::{Identity, IdentityResidual, OperatorSpec, Regime, ResidualSummary, SpecError};

/// One catalog entry: a context and the identities checked in it.
#[derive(Clone, Debug)]
pub struct Case {
    pub id: String,
    pub n: usize,
    pub ctx: Context,
    pub identities: Vec<Identity>,
}

#[derive(Clone, Debug)]
pub struct CaseReport {
    pub id: String,
    pub n: usize,
    pub parts: Vec<IdentityResidual>,
}

impl CaseReport {
    pub fn passed(&self) -> bool {
        self.parts.iter().all(IdentityResidual::passed)
    }

    pub fn summary(&self) -> CaseSummary {
        CaseSummary {
            id: self.id.clone(),
            n: self.n,
            passed: self.passed(),
            parts: self.parts.iter().map(IdentityResidual::summary).collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct CaseSummary {
    pub id: String,
    pub n: usize,
    pub passed: bool,
    pub parts: Vec<ResidualSummary>,
}

impl Case {
    pub fn verify(&self) -> Result<CaseReport, ExprError> {
        let parts = self.identities.iter().map(|id| id.verify(&self.ctx)).collect::<Result<_, _>>()?;
        Ok(CaseReport { id: self.id.clone(), n: self.n, parts })
    }
}

/// The seven displayed intermediate identities of the proof, in order;
/// `proof_step:k` addresses the k-th.
pub const PROOF_STEPS: [&str; 7] = [
    "step3_lambda_dz",
    "step3_gradient",
    "step3_phi_lambda",
    "step3_im_gradient",
    "step3_im_lambda",
    "step4_phi_split",
    "step4_time_weight",
];

pub const CASE_IDS: &[&str] = &[
    "elliptic",
    "transport",
    "ginzburg_landau",
    "schrodinger",
    "heat_identity",
    "first_order",
    "ode",
    "im_swap",
    "step1_decomposition",
    "step1_split",
    "step2_expansion",
    "step3_lambda_dz",
    "step3_gradient",
    "step3_auxiliary",
    "step3_phi_lambda",
    "step3_im_gradient",
    "step3_im_lambda",
    "step4_phi_split",
    "step4_time_weight",
    "proof_replay",
];

/// Resolves `proof_step:k` to its descriptive id.
pub fn resolve_case_id(id: &str) -> Result<&'static str, SpecError> {
    if let Some(k) = id.strip_prefix("proof_step:") {
        return k
            .parse::<usize>()
            .ok()
            .and_then(|k| k.checked_sub(1))
            .and_then(|k| PROOF_STEPS.get(k).copied())
            .ok_or_else(|| SpecError::UnknownCase(id.to_string()));
    }
    CASE_IDS.iter().copied().find(|c| *c == id).ok_or_else(|| SpecError::UnknownCase(id.to_string()))
}

pub fn build_case(id: &str, n: usize) -> Result<Case, SpecError> {
    let id = resolve_case_id(id)?;
    if !(1..=3).contains(&n) {
        return Err(SpecError::Dimension(n));
    }
    let (ctx, identities) = match id {
        "elliptic" => elliptic(n)?,
        "transport" => transport(n)?,
        "ginzburg_landau" => ginzburg_landau(n)?,
        "schrodinger" => schrodinger(n)?,
        "heat_identity" => heat_identity(n)?,
        "first_order" => first_order(n)?,
        "ode" => ode(n)?,
        "im_swap" => im_swap(n)?,
        step => proof_step(step, n)?,
    };
    Ok(Case { id: id.to_string(), n, ctx, identities })
}

pub fn verify_special(id: &str, n: usize) -> Result<CaseReport, SpecError> {
    Ok(build_case(id, n)?.verify()?)
}

fn two() -> Expr {
    Expr::int(2)
}

fn half() -> Expr {
    Expr::ratio(1, 2)
}

fn dt() -> Expr {
    Expr::dt()
}

fn theorem_identity(s: &Symbols) -> Identity {
    Identity::named(
        "theorem specialization",
        s.lhs(),
        s.rhs_terms().into_iter().map(|(n, e)| (n.to_string(), e)).collect(),
    )
}

/// `forms[0] = forms[1] = ...`, one identity per consecutive pair.
fn chain(label: &str, forms: Vec<Expr>) -> Vec<Identity> {
    forms
        .windows(2)
        .enumerate()
        .map(|(i, w)| Identity::new(format!("{label} [{}]", i + 1), w[0].clone(), w[1].clone()))
        .collect()
}

fn fix(ctx: &mut Context, name: &str, v: Expr) -> Result<(), ExprError> {
    ctx.define(name, v)
}

fn fix_b0(ctx: &mut Context, v: i64) -> Result<(), ExprError> {
    for j in 1..=ctx.dim() {
        ctx.define(&format!("b0{j}"), Expr::int(v))?;
    }
    Ok(())
}

type Built = (Context, Vec<Identity>);

fn elliptic(n: usize) -> Result<Built, ExprError> {
    let mut ctx = standard_context(Layout {
        n,
        unknown: Unknown::Deterministic { real: true, depends_t: false },
        real_phi: true,
        time_dependent: false,
    });
    fix(&mut ctx, "a0", Expr::int(0))?;
    fix(&mut ctx, "a", Expr::int(-1))?;
    fix(&mut ctx, "b", Expr::int(0))?;
    fix_b0(&mut ctx, 0)?;
    let s = Symbols::of(&ctx);
    let (z, l, phi) = (&s.z, &s.l, &s.phi);
    let aj = |j, k| s.ajk(j, k);

    let big_a = s.big_a();
    let i1 = s.lambda() + phi * z;
    let y = s.w();
    let lhs = two() * s.theta.clone() * i1.clone() * sum2(n, |j, k| (aj(j, k) * y.dx(j)).dx(k)) * dt();

    let v = |k: usize, printed: bool| {
        let gradient_part = if printed {
            sum_over(n, |j| aj(j, k))
        } else {
            sum_over(n, |j| aj(j, k) * z.dx(j))
        };
        -(two() * big_a.clone() * sum_over(n, |j| aj(j, k) * l.dx(j)) * z.pow(2))
            - two() * phi.clone() * z.clone() * gradient_part
            + two()
                * Expr::sum((1..=n).flat_map(|j| (1..=n).flat_map(move |jp| (1..=n).map(move |kp| (j, jp, kp)))).map(
                    |(j, jp, kp)| {
                        aj(j, k) * aj(jp, kp) * l.dx(j) * z.dx(jp) * z.dx(kp)
                            - aj(j, kp) * aj(jp, k) * l.dx(j) * (z.dx(jp) * z.dx(kp) + z.dx(jp) * z.dx(kp))
                    },
                ))
    };
    let big_b = two() * sum2(n, |j, k| (big_a.clone() * aj(j, k) * l.dx(j)).dx(k))
        - two() * big_a.clone() * phi.clone()
        - two() * phi.pow(2);
    let big_d = |j, k| {
        two() * phi.clone() * aj(j, k)
            + two() * sum2(n, |jp, kp| two() * aj(j, kp) * (aj(jp, k) * l.dx(jp)).dx(kp) - (aj(j, k) * aj(jp, kp) * l.dx(jp)).dx(kp))
    };
    let rhs = |printed: bool| -> Vec<(String, Expr)> {
        vec![
            ("energy_I1".into(), two() * i1.pow(2) * dt()),
            ("divergence_V".into(), sum_over(n, |k| v(k, printed).dx(k)) * dt()),
            ("B".into(), big_b.clone() * z.pow(2) * dt()),
            ("D".into(), sum2(n, |j, k| big_d(j, k) * z.dx(j) * z.dx(k)) * dt()),
            (
                "E".into(),
                -(two() * sum2(n, |j, k| aj(j, k) * (two() * l.dx(k) * phi.clone() - phi.dx(k)) * z.clone() * z.dx(j)))
                    * dt(),
            ),
        ]
    };
    let ids = vec![
        theorem_identity(&s),
        Identity::new("I1 as printed", s.i1(), i1.clone()),
        Identity::named("printed identity with z_{x_j} restored in V", lhs.clone(), rhs(false)),
        Identity::named("elliptic identity as printed", lhs, rhs(true)).recorded_delta(),
    ];
    Ok((ctx, ids))
}

fn transport(n: usize) -> Result<Built, ExprError> {
    let mut ctx = standard_context(Layout {
        n,
        unknown: Unknown::Semimartingale { real: true },
        real_phi: true,
        time_dependent: true,
    });
    fix(&mut ctx, "a", Expr::int(0))?;
    fix(&mut ctx, "b", Expr::int(0))?;
    fix(&mut ctx, "Phi", Expr::int(0))?;
    fix(&mut ctx, "a0", Expr::int(1))?;
    let s = Symbols::of(&ctx);
    let (z, l) = (&s.z, &s.l);
    let tw = l.dtau() + s.b0_grad_l();
    let i1 = -(tw.clone() * z.clone());
    let y = s.w();
    let lhs = two() * s.theta.clone() * i1.clone() * (y.d() + s.b0_grad(&y) * dt());
    let big_b = l.dtau().dtau() + s.b0_grad_l().dtau() + s.b0_grad(&tw);
    let energy = tw.clone() * z.pow(2);
    let rhs = vec![
        ("energy_I1".to_string(), two() * i1.pow(2) * dt()),
        ("d_energy".into(), -energy.d()),
        ("B".into(), big_b * z.pow(2) * dt()),
        // printed without dt
        ("transport_divergence".into(), -(s.b0_grad(&energy) * dt())),
        ("quadratic_variation".into(), tw * z.d() * z.d()),
    ];
    let ids = vec![
        theorem_identity(&s),
        Identity::new("I1 as printed", s.i1(), i1),
        Identity::named("printed identity with dt restored", lhs, rhs),
    ];
    Ok((ctx, ids))
}

fn ginzburg_landau(n: usize) -> Result<Built, ExprError> {
    let mut ctx = standard_context(Layout::stochastic(n));
    let mu = ctx.real_scalar("mu");
    let t = ctx.coordinate_t();
    let varphi = ctx.exponential("varphi", Expr::int(3) * mu.clone() * t)?;
    fix(&mut ctx, "l", mu.clone() * varphi.clone())?;
    fix(&mut ctx, "Phi", -mu.clone())?;
    fix(&mut ctx, "a0", Expr::int(1))?;
    fix(&mut ctx, "a", Expr::int(1))?;
    fix_b0(&mut ctx, 0)?;
    identity_coefficients(&mut ctx)?;
    let s = Symbols::of(&ctx);
    let (z, b) = (&s.z, &s.b);
    let zb = z.conj();
    let lap = |u: &Expr| sum_over(n, |j| u.dx(j).dx(j));
    let grad2 = sum_over(n, |j| z.dx(j) * z.dx(j).conj());
    let mu_term = mu.clone() + Expr::int(3) * mu.pow(2) * varphi.clone();

    let i1 = -lap(z) - mu_term.clone() * z.clone();
    let w = s.w();
    let one_ib = Expr::one() + Expr::i() * b.clone();
    let lhs = two() * (s.theta.clone() * i1.conj() * (w.d() - one_ib * lap(&w) * dt())).re();
    let v = |k: usize| {
        -(two() * (z.dx(k) * zb.d() + mu.clone() * zb.dx(k) * z.clone() * dt()).re())
            - two() * b.clone() * mu_term.clone() * (z.dx(k) * zb.clone()).im() * dt()
    };
    let rhs = vec![
        ("energy_I1".to_string(), two() * s.abs2(&i1) * dt()),
        ("dM".into(), (grad2.clone() - Expr::int(3) * mu.pow(2) * varphi.clone() * s.abs2(z)).d()),
        ("divergence_V".into(), sum_over(n, |k| v(k).dx(k))),
        ("weighted_L2".into(), mu.pow(2) * (Expr::int(3) * mu.clone() * varphi.clone() - two()) * s.abs2(z) * dt()),
        ("gradient_energy".into(), two() * mu.clone() * grad2 * dt()),
        ("gradient_quadratic_variation".into(), -sum_over(n, |j| z.dx(j).d() * z.dx(j).d().conj())),
        ("martingale".into(), -(two() * mu.clone() * (zb.clone() * z.d()).re())),
        ("quadratic_variation".into(), Expr::int(3) * mu.pow(2) * varphi * z.d() * zb.d()),
    ];
    let ids = vec![
        theorem_identity(&s),
        Identity::new("I1 as printed", s.i1(), i1),
        Identity::named("printed lemma", lhs, rhs),
    ];
    Ok((ctx, ids))
}

fn schrodinger(n: usize) -> Result<Built, ExprError> {
    let mut ctx = standard_context(Layout { n, unknown: Unknown::Defined, real_phi: false, time_dependent: true });
    let u = ctx.semimartingale("u", "P", "Q", false);
    let psi = ctx.complex_field("Psi");
    fix(&mut ctx, "z", Expr::i() * u.clone())?;
    fix(&mut ctx, "Phi", -(Expr::i() * psi.clone()))?;
    fix(&mut ctx, "a0", Expr::int(1))?;
    fix(&mut ctx, "b", Expr::int(1))?;
    fix(&mut ctx, "a", Expr::int(0))?;
    fix_b0(&mut ctx, 0)?;
    identity_coefficients(&mut ctx)?;
    let s = Symbols::of(&ctx);
    let (z, l) = (&s.z, &s.l);
    let grad_dot = |f: &Expr, g: &Expr| sum_over(n, |j| f.dx(j) * g.dx(j));
    let lap = |f: &Expr| sum_over(n, |j| f.dx(j).dx(j));

    let i1_tilde = -(Expr::i() * l.dtau() * u.clone()) - two() * grad_dot(l, &u) + psi * u.clone();
    let i1_printed = two() * Expr::i() * grad_dot(l, z) + (s.phi.clone() - l.dtau()) * z.clone();
    let v = s.theta.pow(-1) * u;
    let pv = Expr::i() * v.d() + lap(&v) * dt();
    let ids = vec![
        theorem_identity(&s),
        Identity::new("I1 as printed", s.i1(), i1_printed),
        Identity::new("I1 equals the transformed multiplier", s.i1(), i1_tilde),
        Identity::new("L w = P v", s.operator(&s.w()), pv),
    ];
    Ok((ctx, ids))
}

fn heat_identity(n: usize) -> Result<Built, ExprError> {
    let mut ctx = standard_context(Layout {
        n,
        unknown: Unknown::Semimartingale { real: true },
        real_phi: true,
        time_dependent: true,
    });
    fix(&mut ctx, "a0", Expr::int(1))?;
    fix(&mut ctx, "a", Expr::int(-1))?;
    fix(&mut ctx, "b", Expr::int(0))?;
    fix_b0(&mut ctx, 0)?;
    identity_coefficients(&mut ctx)?;
    let l = ctx.get("l");
    fix(&mut ctx, "Phi", two() * sum_over(n, |j| l.dx(j).dx(j)))?;
    let s = Symbols::of(&ctx);
    let (z, phi) = (&s.z, &s.phi);
    let lap = |f: &Expr| sum_over(n, |j| f.dx(j).dx(j));
    let grad_dot = |f: &Expr, g: &Expr| sum_over(n, |j| f.dx(j) * g.dx(j));
    let delta = |j, k| Expr::int((j == k) as i64);

    let big_a = grad_dot(&l, &l) - lap(&l);
    let lambda = lap(z) + big_a.clone() * z.clone();
    let i1 = lambda + (phi.clone() - l.dtau()) * z.clone();
    let y = s.w();
    let lhs = two() * s.theta.clone() * i1.clone() * (y.d() + lap(&y) * dt());

    let big_m = big_a.clone() * z.pow(2) - grad_dot(z, z) - l.dtau() * z.pow(2);
    let v = |k: usize| {
        two() * z.dx(k) * z.d() - two() * big_a.clone() * l.dx(k) * z.pow(2) * dt()
            - two() * z.dx(k) * phi.clone() * z.clone() * dt()
            + two() * grad_dot(z, z) * l.dx(k) * dt()
            - Expr::int(4) * grad_dot(&l, z) * z.dx(k) * dt()
    };
    let big_b = two() * sum_over(n, |j| (big_a.clone() * l.dx(j)).dx(j)) - big_a.dtau() - two() * big_a.clone() * phi.clone()
        - two() * (phi.pow(2) - l.dtau() * phi.clone())
        + l.dtau().dtau();
    let big_d = |j, k| two() * phi.clone() * delta(j, k) + Expr::int(4) * l.dx(j).dx(k) - two() * lap(&l) * delta(j, k);
    let big_e = |j: usize| two() * l.dx(j) * (phi.clone() - l.dtau()) - phi.dx(j);
    let rhs = |e_sign: i64| -> Vec<(String, Expr)> {
        vec![
            ("energy_I1".into(), two() * i1.pow(2) * dt()),
            ("dM".into(), big_m.d()),
            ("divergence_V".into(), sum_over(n, |k| v(k).dx(k))),
            ("B".into(), big_b.clone() * z.pow(2) * dt()),
            ("D".into(), sum2(n, |j, k| big_d(j, k) * z.dx(j) * z.dx(k)) * dt()),
            ("E".into(), Expr::int(2 * e_sign) * sum_over(n, |j| big_e(j) * z.clone() * z.dx(j)) * dt()),
            ("gradient_quadratic_variation".into(), sum_over(n, |j| z.dx(j).d() * z.dx(j).d())),
            ("quadratic_variation".into(), (l.dtau() - big_a.clone()) * z.d() * z.d()),
            ("martingale".into(), two() * phi.clone() * z.clone() * z.d()),
        ]
    };
    let lap_l = lap(&l);
    let b_simplified = two() * grad_dot(&big_a, &l) - two() * big_a.clone() * lap_l.clone() - big_a.dtau()
        + l.dtau().dtau()
        - Expr::int(8) * lap_l.pow(2)
        + Expr::int(4) * lap_l * l.dtau();
    let ids = vec![
        theorem_identity(&s),
        Identity::new("I1 with the chosen auxiliary function", s.i1(), lap(z) + (grad_dot(&l, &l) + lap(&l) - l.dtau()) * z.clone()),
        Identity::new("B as printed", s.big_b(), big_b.clone()),
        Identity::new("B simplified", s.big_b(), b_simplified),
        Identity::named("printed identity with the E sign corrected", lhs.clone(), rhs(-1)),
        Identity::named("printed identity as printed", lhs, rhs(1)).recorded_delta(),
    ];
    Ok((ctx, ids))
}

fn first_order(n: usize) -> Result<Built, ExprError> {
    let mut ctx = Context::new(n);
    let x: Vec<Expr> = (1..=n).map(|j| ctx.coordinate_x(j)).collect();
    let u = ctx.real_field("u");
    ctx.set_dependence("u", true, false);
    let mut gamma = Vec::new();
    let mut x0 = Vec::new();
    for j in 1..=n {
        gamma.push(ctx.real_field(&format!("g{j}")));
        ctx.set_dependence(&format!("g{j}"), true, false);
        x0.push(ctx.real_scalar(&format!("c{j}")));
    }
    let lambda = ctx.real_scalar("lambda");
    let phi = sum_over(n, |j| (x[j - 1].clone() - x0[j - 1].clone()).pow(2));
    let theta = ctx.exponential("theta", lambda.clone() * phi)?;
    let th2 = theta.pow(2);
    let div_gamma = sum_over(n, |j| gamma[j - 1].dx(j));
    let forms = vec![
        th2.clone() * u.clone() * sum_over(n, |j| gamma[j - 1].clone() * u.dx(j)),
        th2.clone() * sum_over(n, |j| gamma[j - 1].clone() * (half() * u.pow(2)).dx(j)),
        sum_over(n, |j| (half() * th2.clone() * u.pow(2) * gamma[j - 1].clone()).dx(j))
            - th2
                * (half() * div_gamma
                    + two() * lambda * sum_over(n, |j| gamma[j - 1].clone() * (x[j - 1].clone() - x0[j - 1].clone())))
                * u.pow(2),
    ];
    Ok((ctx, chain("weighted first-order identity", forms)))
}

/// Time-only fields `x1..xm` with `m = n`.
fn ode(m: usize) -> Result<Built, ExprError> {
    let mut ctx = Context::new(0);
    let t = ctx.coordinate_t();
    let lambda = ctx.real_scalar("lambda");
    let e = ctx.exponential("E", -(lambda.clone() * t))?;
    let xs: Vec<Expr> = (1..=m).map(|i| ctx.real_field(&format!("x{i}"))).collect();
    let norm2 = Expr::sum(xs.iter().map(|x| x.pow(2)));
    let lhs = two() * e.clone() * Expr::sum(xs.iter().map(|x| x * &x.dtau()));
    let rhs = (e.clone() * norm2.clone()).dtau() + lambda * e * norm2;
    Ok((ctx, vec![Identity::new("weighted energy identity", lhs, rhs)]))
}

fn general_context(n: usize) -> Result<Context, SpecError> {
    OperatorSpec::new(n, Regime::Unconstrained).context()
}

fn im_swap(n: usize) -> Result<Built, SpecError> {
    let ctx = general_context(n)?;
    let s = Symbols::of(&ctx);
    let z = &s.z;
    let zb = z.conj();
    let mut ids = Vec::new();
    for k in 1..=n {
        let forms = vec![
            (zb.dx(k) * z.d()).im(),
            ((zb.dx(k) * z.clone()).d() - (z.clone() * zb.d()).dx(k) - zb.dx(k).d() * z.d() + z.dx(k) * zb.d()).im(),
            -(z.dx(k) * zb.d()).im(),
        ];
        ids.extend(chain(&format!("k={k}"), forms));
    }
    Ok((ctx, ids))
}

/// The summands of the expansion of `2Re(conj(I₁) I₂)`, in printed order.
struct Expansion {
    terms: Vec<(&'static str, Expr)>,
}

fn expansion(s: &Symbols) -> Expansion {
    let (n, z, l, phi, a0, a, b) = (s.n, &s.z, &s.l, &s.phi, &s.a0, &s.a, &s.b);
    let zb = z.conj();
    let lam = s.lambda();
    let phib_t = phi.conj() - a0.clone() * l.dtau();
    let phib_tw = phi.conj() - s.time_weight();
    let terms = vec![
        ("lambda_dz", -(two() * a.clone() * a0.clone() * (lam.conj() * z.d()).re())),
        (
            "gradient",
            -(Expr::int(4) * s.ab2() * sum2(n, |j, k| s.ajk(j, k) * l.dx(j) * z.dx(k) * lam.conj()).re() * dt()),
        ),
        ("phi_lambda", two() * a.clone() * (phi.clone() * lam.conj() * z.clone()).re() * dt()),
        (
            "im_gradient",
            Expr::int(4) * a0.clone() * b.clone() * sum2(n, |j, k| s.ajk(j, k) * l.dx(j) * (zb.dx(k) * z.d()).im()),
        ),
        (
            "im_phi_gradient",
            Expr::int(4) * b.clone() * sum2(n, |j, k| s.ajk(j, k) * l.dx(j) * (phi.conj() * zb.clone() * z.dx(k)).im()) * dt(),
        ),
        ("im_lambda", two() * b.clone() * (phib_t.clone() * zb.clone() * lam).im() * dt()),
        (
            "re_gradient",
            Expr::int(4) * a.clone() * sum2(n, |j, k| s.ajk(j, k) * l.dx(j) * (phib_t.clone() * zb.clone() * z.dx(k)).re()) * dt(),
        ),
        ("phi_split", two() * (phib_tw.clone() * zb.clone() * (a0 * &z.d() + s.b0_grad(z) * dt())).re()),
        ("phi_square", -(two() * (phi.clone() * phib_tw).re() * s.abs2(z) * dt())),
    ];
    Expansion { terms }
}

impl Expansion {
    fn get(&self, name: &str) -> Expr {
        self.terms.iter().find(|(n, _)| *n == name).unwrap().1.clone()
    }
}

/// Every displayed form of each proof step, first form first.
struct ProofForms {
    lambda_dz: Vec<Expr>,
    gradient: Vec<Expr>,
    auxiliary: Vec<Expr>,
    phi_lambda: Vec<Expr>,
    im_gradient: Vec<Expr>,
    im_lambda: Vec<Expr>,
    phi_split: Vec<Expr>,
    /// The `Φ` part of the last form of `phi_split`.
    phi_part: Expr,
    time_weight: Vec<Expr>,
}

fn proof_forms(s: &Symbols) -> ProofForms {
    let (n, z, l, phi, a0, a, b) = (s.n, &s.z, &s.l, &s.phi, &s.a0, &s.a, &s.b);
    let aj = |j, k| s.ajk(j, k);
    let zb = z.conj();
    let dz = z.d();
    let dzb = zb.d();
    let big_a = s.big_a();
    let lam = s.lambda();
    let ex = expansion(s);
    let aa0 = a * a0;
    let ab2 = s.ab2();
    let sum4 = |f: &dyn Fn(usize, usize, usize, usize) -> Expr| {
        Expr::sum((1..=n).flat_map(|j| {
            (1..=n).flat_map(move |k| (1..=n).flat_map(move |jp| (1..=n).map(move |kp| (j, k, jp, kp))))
        }).map(|(j, k, jp, kp)| f(j, k, jp, kp)))
    };

    let lambda_dz = vec![
        ex.get("lambda_dz"),
        -(aa0.clone() * (lam.conj() * dz.clone() + lam.clone() * dzb.clone())),
        -(aa0.clone()
            * sum2(n, |j, k| (aj(j, k) * z.dx(j)).dx(k) * dzb.clone() + (aj(j, k) * zb.dx(j)).dx(k) * dz.clone()))
            - aa0.clone() * big_a.clone() * (z.clone() * dzb.clone() + zb.clone() * dz.clone()),
        -(aa0.clone() * sum2(n, |j, k| (aj(j, k) * z.dx(j) * dzb.clone() + aj(j, k) * zb.dx(j) * dz.clone()).dx(k)))
            + sum2(n, |j, k| (aa0.clone() * aj(j, k) * z.dx(j) * zb.dx(k)).d())
            - aa0.clone() * sum2(n, |j, k| aj(j, k).dtau() * z.dx(j) * zb.dx(k)) * dt()
            - aa0.clone() * sum2(n, |j, k| aj(j, k) * z.dx(j).d() * zb.dx(k).d())
            - (aa0.clone() * big_a.clone() * s.abs2(z)).d()
            + aa0.clone() * big_a.dtau() * s.abs2(z) * dt()
            + aa0.clone() * big_a.clone() * dz.clone() * dzb.clone(),
    ];

    let gradient = vec![
        ex.get("gradient"),
        -(two() * ab2.clone() * sum2(n, |j, k| aj(j, k) * l.dx(j) * (zb.dx(k) * lam.clone() + z.dx(k) * lam.conj())) * dt()),
        -(two()
            * ab2.clone()
            * sum2(n, |j, k| aj(j, k) * l.dx(j) * (zb.dx(k) * big_a.clone() * z.clone() + z.dx(k) * big_a.clone() * zb.clone()))
            * dt())
            - two()
                * ab2.clone()
                * sum2(n, |j, k| {
                    aj(j, k)
                        * l.dx(j)
                        * (zb.dx(k) * sum2(n, |jp, kp| (aj(jp, kp) * z.dx(jp)).dx(kp))
                            + z.dx(k) * sum2(n, |jp, kp| (aj(jp, kp) * zb.dx(jp)).dx(kp)))
                })
                * dt(),
        -(two() * ab2.clone() * sum2(n, |j, k| (big_a.clone() * aj(j, k) * l.dx(j) * s.abs2(z)).dx(k)) * dt())
            + two() * ab2.clone() * sum2(n, |j, k| (big_a.clone() * aj(j, k) * l.dx(j)).dx(k)) * s.abs2(z) * dt()
            - two()
                * ab2.clone()
                * sum4(&|j, k, jp, kp| {
                    (aj(j, k) * l.dx(j) * aj(jp, kp) * (z.dx(jp) * zb.dx(k) + zb.dx(jp) * z.dx(k))).dx(kp)
                })
                * dt()
            + two()
                * ab2.clone()
                * sum4(&|j, k, jp, kp| {
                    aj(jp, kp) * (aj(j, k) * l.dx(j)).dx(kp) * (z.dx(jp) * zb.dx(k) + zb.dx(jp) * z.dx(k))
                })
                * dt()
            + two()
                * ab2.clone()
                * sum4(&|j, k, jp, kp| {
                    (aj(j, k) * l.dx(j) * aj(jp, kp) * z.dx(jp) * zb.dx(kp)).dx(k)
                        - (aj(j, k) * aj(jp, kp) * l.dx(j)).dx(k) * z.dx(jp) * zb.dx(kp)
                })
                * dt(),
    ];

    let auxiliary = vec![
        two()
            * sum4(&|j, k, jp, kp| {
                aj(j, k) * aj(jp, kp) * l.dx(j) * (z.dx(jp) * zb.dx(k).dx(kp) + zb.dx(jp) * z.dx(k).dx(kp))
            })
            * dt(),
        sum4(&|j, k, jp, kp| {
            let sym = z.dx(jp) * zb.dx(kp) + zb.dx(jp) * z.dx(kp);
            (aj(j, k) * aj(jp, kp) * l.dx(j) * sym.clone()).dx(k) - (aj(j, k) * aj(jp, kp) * l.dx(j)).dx(k) * sym
        }) * dt(),
        two()
            * sum4(&|j, k, jp, kp| {
                (aj(j, k) * aj(jp, kp) * l.dx(j) * z.dx(jp) * zb.dx(kp)).dx(k)
                    - (aj(j, k) * aj(jp, kp) * l.dx(j)).dx(k) * z.dx(jp) * zb.dx(kp)
            })
            * dt(),
    ];

    let phi_lambda = vec![
        ex.get("phi_lambda"),
        two() * a.clone() * sum2(n, |j, k| ((aj(j, k) * zb.dx(j)).dx(k) * phi.clone() * z.clone()).re()) * dt()
            + two() * a.clone() * big_a.clone() * phi.re() * s.abs2(z) * dt(),
        two() * a.clone() * sum2(n, |j, k| (aj(j, k) * zb.dx(j) * phi.clone() * z.clone()).re().dx(k)) * dt()
            - two() * a.clone() * phi.re() * sum2(n, |j, k| aj(j, k) * z.dx(j) * zb.dx(k)) * dt()
            - two() * a.clone() * sum2(n, |j, k| (aj(j, k) * phi.dx(k) * z.clone() * zb.dx(j)).re()) * dt()
            + two() * a.clone() * big_a.clone() * phi.re() * s.abs2(z) * dt(),
    ];

    let im_gradient = vec![
        ex.get("im_gradient"),
        two()
            * a0.clone()
            * b.clone()
            * sum2(n, |j, k| {
                aj(j, k) * l.dx(j) * ((zb.dx(k) * z.clone()).d() - (z.clone() * dzb.clone()).dx(k) - zb.dx(k).d() * dz.clone()).im()
            }),
        two()
            * a0.clone()
            * b.clone()
            * sum2(n, |j, k| {
                (aj(j, k) * l.dx(j) * (zb.dx(k) * z.clone()).im()).d()
                    - (aj(j, k) * l.dx(j) * (z.clone() * dzb.clone()).im()).dx(k)
            })
            - two()
                * a0.clone()
                * b.clone()
                * sum2(n, |j, k| {
                    (aj(j, k) * l.dx(j)).dtau() * (zb.dx(k) * z.clone()).im() * dt()
                        - (aj(j, k) * l.dx(j)).dx(k) * (z.clone() * dzb.clone()).im()
                        + aj(j, k) * l.dx(j) * (dz.clone() * zb.dx(k).d()).im()
                }),
    ];

    let phib_t = phi.conj() - a0.clone() * l.dtau();
    let im_lambda = vec![
        ex.get("im_lambda"),
        two() * b.clone() * sum2(n, |j, k| ((aj(j, k) * z.dx(j)).dx(k) * phib_t.clone() * zb.clone()).im()) * dt()
            - two() * b.clone() * big_a.clone() * phi.im() * s.abs2(z) * dt(),
        two() * b.clone() * sum2(n, |j, k| (aj(j, k) * z.dx(j) * phib_t.clone() * zb.clone()).im().dx(k)) * dt()
            + two() * b.clone() * phi.im() * sum2(n, |j, k| aj(j, k) * z.dx(j) * zb.dx(k)) * dt()
            - two() * b.clone() * sum2(n, |j, k| aj(j, k) * (phib_t.dx(k) * z.dx(j) * zb.clone()).im()) * dt()
            - two() * b.clone() * big_a.clone() * phi.im() * s.abs2(z) * dt(),
    ];

    let tw = s.time_weight();
    let bracket = a0.clone() * s.abs2(z).d() - a0.clone() * dz.clone() * dzb.clone() + s.b0_grad(&s.abs2(z)) * dt();
    let phi_part = two() * (phi.conj() * zb.clone() * (a0.clone() * dz.clone() + s.b0_grad(z) * dt())).re();
    let phi_split = vec![ex.get("phi_split"), phi_part.clone() - tw.clone() * bracket.clone()];
    let time_weight = vec![
        -(tw.clone() * bracket),
        -((a0.clone() * tw.clone() * s.abs2(z)).d())
            + a0.clone() * (a0.clone() * l.dtau().dtau() + s.b0_grad_l().dtau()) * s.abs2(z) * dt()
            + a0.clone() * tw.clone() * dz.clone() * dzb.clone()
            - s.b0_grad(&(tw.clone() * s.abs2(z))) * dt()
            + s.b0_grad(&tw) * s.abs2(z) * dt(),
    ];

    ProofForms { lambda_dz, gradient, auxiliary, phi_lambda, im_gradient, im_lambda, phi_split, phi_part, time_weight }
}

fn last(v: &[Expr]) -> Expr {
    v.last().unwrap().clone()
}

fn proof_step(id: &str, n: usize) -> Result<Built, SpecError> {
    let ctx = general_context(n)?;
    let s = Symbols::of(&ctx);
    let i1 = s.i1();
    let i2 = s.i2();
    let lw = s.operator(&s.w());
    let ids = match id {
        "step1_decomposition" => {
            vec![Identity::new("theta L w = I1 dt + I2", s.theta.clone() * lw, i1 * dt() + i2)]
        }
        "step1_split" => chain(
            "multiplier split",
            vec![
                two() * (s.theta.clone() * i1.conj() * lw.clone()).re(),
                s.theta.clone() * (i1.conj() * lw.clone() + i1.clone() * lw.conj()),
                two() * s.abs2(&i1) * dt() + two() * (i1.conj() * i2).re(),
            ],
        ),
        "step2_expansion" => vec![Identity::named(
            "expansion of 2Re(conj(I1) I2)",
            two() * (i1.conj() * i2).re(),
            expansion(&s).terms.into_iter().map(|(n, e)| (n.to_string(), e)).collect(),
        )],
        "proof_replay" => {
            let ex = expansion(&s);
            let f = proof_forms(&s);
            let rhs = vec![
                ("energy_I1".to_string(), two() * s.abs2(&i1) * dt()),
                ("lambda_dz".into(), last(&f.lambda_dz)),
                ("gradient".into(), last(&f.gradient)),
                ("phi_lambda".into(), last(&f.phi_lambda)),
                ("im_gradient".into(), last(&f.im_gradient)),
                ("im_phi_gradient".into(), ex.get("im_phi_gradient")),
                ("im_lambda".into(), last(&f.im_lambda)),
                ("re_gradient".into(), ex.get("re_gradient")),
                ("phi_split".into(), f.phi_part.clone()),
                ("time_weight".into(), last(&f.time_weight)),
                ("phi_square".into(), ex.get("phi_square")),
            ];
            vec![
                Identity::named("replayed proof against the left side", s.lhs(), rhs.clone()),
                Identity::named("replayed proof against the right side", s.rhs(), rhs),
            ]
        }
        step => {
            let f = proof_forms(&s);
            let (label, forms) = match step {
                "step3_lambda_dz" => ("-2aa0 Re(conj(Lambda) dz)", f.lambda_dz),
                "step3_gradient" => ("gradient term", f.gradient),
                "step3_auxiliary" => ("auxiliary second-order identity", f.auxiliary),
                "step3_phi_lambda" => ("2a Re(Phi conj(Lambda) z)", f.phi_lambda),
                "step3_im_gradient" => ("4a0b Im gradient term", f.im_gradient),
                "step3_im_lambda" => ("2b Im term", f.im_lambda),
                "step4_phi_split" => ("Phi split", f.phi_split),
                "step4_time_weight" => ("time weight term", f.time_weight),
                other => return Err(SpecError::UnknownCase(other.to_string())),
            };
            chain(label, forms)
        }
    };
    Ok((ctx, ids))
}
