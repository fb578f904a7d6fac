//! Algebraic invariants of the kernel on random expressions.

use carleman_core::{canonicalize, eval_jet, parse, parse_lines, Assignment, CanonicalForm, Context, Expr};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn ctx() -> Context {
    let mut ctx = Context::new(2);
    ctx.semimartingale("z", "P", "Q", false);
    ctx.real_field("l");
    ctx.complex_field("Phi");
    ctx.symmetric_family("a");
    ctx.real_scalar("b");
    let l = ctx.get("l");
    ctx.exponential("theta", l).unwrap();
    ctx
}

fn canon(ctx: &Context, e: &Expr) -> CanonicalForm {
    canonicalize(ctx, e).unwrap()
}

/// Differential-free expressions over deterministic fields.
fn deterministic() -> impl Strategy<Value = Expr> {
    let c = ctx();
    let leaf = prop_oneof![
        (-3i64..=3, 1i64..=3).prop_map(|(p, q)| Expr::ratio(p, q)),
        Just(Expr::i()),
        prop::sample::select(vec!["l", "Phi", "a11", "a12", "a22", "b", "theta"]).prop_map(move |s| c.get(s)),
    ];
    leaf.prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 2..4).prop_map(Expr::sum),
            prop::collection::vec(inner.clone(), 2..3).prop_map(Expr::product),
            (inner.clone(), 0i32..3).prop_map(|(e, k)| e.pow(k)),
            (inner.clone(), 1usize..=2).prop_map(|(e, j)| e.dx(j)),
            inner.clone().prop_map(|e| e.dtau()),
            inner.clone().prop_map(|e| e.conj()),
            inner.clone().prop_map(|e| e.re()),
            inner.prop_map(|e| e.im()),
        ]
    })
}

/// Expressions that may involve the semimartingale `z` (no time derivatives).
fn stochastic() -> impl Strategy<Value = Expr> {
    let c = ctx();
    let leaf = prop_oneof![
        (-3i64..=3, 1i64..=3).prop_map(|(p, q)| Expr::ratio(p, q)),
        prop::sample::select(vec!["z", "l", "Phi", "a12", "theta"]).prop_map(move |s| c.get(s)),
    ];
    leaf.prop_recursive(3, 16, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 2..4).prop_map(Expr::sum),
            prop::collection::vec(inner.clone(), 2..3).prop_map(Expr::product),
            (inner.clone(), 1usize..=2).prop_map(|(e, j)| e.dx(j)),
            inner.prop_map(|e| e.conj()),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn canonicalization_is_idempotent(e in deterministic()) {
        let c = ctx();
        let f = canon(&c, &e);
        prop_assert_eq!(canon(&c, &f.to_expr()), f);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn text_form_round_trips(e in deterministic()) {
        let c = ctx();
        let f = canon(&c, &e);
        let back = parse_lines(&c, &f.to_text()).unwrap();
        prop_assert_eq!(canon(&c, &back), f.clone());
        let printed = parse(&c, &f.to_expr().to_string()).unwrap();
        prop_assert_eq!(canon(&c, &printed), f);
    }

    #[test]
    fn partial_derivatives_commute(e in deterministic()) {
        let c = ctx();
        prop_assert_eq!(canon(&c, &e.dx(1).dtau()), canon(&c, &e.dtau().dx(1)));
        prop_assert_eq!(canon(&c, &e.dx(1).dx(2)), canon(&c, &e.dx(2).dx(1)));
    }

    #[test]
    fn conjugation_distributes(x in deterministic(), y in deterministic(), w in deterministic()) {
        let c = ctx();
        let lhs = (x.clone() * y.clone() + w.clone()).conj();
        let rhs = x.conj() * y.conj() + w.conj();
        prop_assert_eq!(canon(&c, &lhs), canon(&c, &rhs));
        prop_assert_eq!(canon(&c, &x.conj().conj()), canon(&c, &x));
    }

    #[test]
    fn ito_product_rule(x in stochastic(), y in stochastic()) {
        let c = ctx();
        let lhs = (x.clone() * y.clone()).d();
        let rhs = x.clone() * y.d() + y.clone() * x.d() + x.d() * y.d();
        prop_assert_eq!(canon(&c, &lhs), canon(&c, &rhs));
    }

    #[test]
    fn jet_oracle_agrees_with_canonical_form(e in stochastic(), seed in 0u64..1000) {
        let c = ctx();
        let e = e.d();
        let asg = Assignment::random(&c, &mut ChaCha8Rng::seed_from_u64(seed));
        let direct = eval_jet(&c, &e, &asg).unwrap();
        let via_canon = eval_jet(&c, &canon(&c, &e).to_expr(), &asg).unwrap();
        prop_assert_eq!(direct, via_canon);
    }
}
