use carleman_core::{canonicalize, eval_jet, parse, Assignment, Coeff, Context, Expr, ExprError, Poly};
use num_bigint::BigInt;
use num_rational::BigRational;

fn q(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn stochastic_ctx(n: usize) -> Context {
    let mut ctx = Context::new(n);
    ctx.semimartingale("z", "P", "Q", false);
    ctx.real_field("l");
    ctx.complex_field("Phi");
    ctx.symmetric_family("a");
    ctx.scalar_vector("b0");
    ctx
}

fn canon(ctx: &Context, s: &str) -> carleman_core::CanonicalForm {
    canonicalize(ctx, &parse(ctx, s).unwrap()).unwrap()
}

fn assert_same(ctx: &Context, a: &str, b: &str) {
    assert_eq!(canon(ctx, a), canon(ctx, b), "{a}  vs  {b}");
}

#[test]
fn re_of_i_is_zero() {
    let ctx = stochastic_ctx(1);
    assert!(canon(&ctx, "Re(i)").is_zero());
    assert_eq!(canon(&ctx, "Im(i)"), canon(&ctx, "1"));
}

#[test]
fn conj_is_an_involution() {
    let ctx = stochastic_ctx(1);
    assert_same(&ctx, "conj(conj(z))", "z");
    assert_same(&ctx, "conj(l)", "l");
}

#[test]
fn coefficient_times_derivative_is_one_monomial() {
    let ctx = stochastic_ctx(1);
    let f = canon(&ctx, "a11*dx1(z)");
    assert_eq!(f.len(), 1);
    assert_eq!(f.to_text(), "1 * a11*dx1(z)\n");
}

#[test]
fn chain_rule_on_square() {
    let ctx = stochastic_ctx(1);
    assert_same(&ctx, "dx1(l^2)", "2*l*dx1(l)");
}

#[test]
fn exponential_weight_derivative() {
    let mut ctx = stochastic_ctx(1);
    let l = ctx.get("l");
    ctx.exponential("theta", l).unwrap();
    assert_same(&ctx, "dx1(theta)", "dx1(l)*theta");
    assert_same(&ctx, "dtau(theta)", "dtau(l)*theta");
    assert_same(&ctx, "theta*theta^(-1)", "1");
    assert_same(&ctx, "d(theta)", "dtau(l)*theta*dt");
}

#[test]
fn weight_a_at_a_point() {
    // l = x^2 t, a11 = 1: A = l_x^2 - l_xx = 4x^2t^2 - 2t, at (1, 2) -> 12
    let mut ctx = Context::new(1);
    let x = ctx.coordinate_x(1);
    let t = ctx.coordinate_t();
    ctx.real_field("l");
    ctx.define("l", x.pow(2) * t).unwrap();
    let a = parse(&ctx, "dx1(l)^2 - dx1(dx1(l))").unwrap();
    let f = canonicalize(&ctx, &a).unwrap();
    let v = f.eval_f64(|atom| match &*atom.name {
        "x1" => (1.0, 0.0),
        "t" => (2.0, 0.0),
        other => panic!("unexpected atom {other}"),
    });
    assert_eq!(v, (12.0, 0.0));

    let asg = Assignment { point: [q(1), q(0), q(0), q(2)], ..Default::default() };
    let j = eval_jet(&ctx, &a, &asg).unwrap();
    assert_eq!(j.value, Coeff::from_int(12));
}

#[test]
fn ito_product_of_z_and_conjugate() {
    let ctx = stochastic_ctx(1);
    assert_same(
        &ctx,
        "d(z*conj(z))",
        "(P*conj(z) + conj(P)*z + Q*conj(Q))*dt + (Q*conj(z) + conj(Q)*z)*dB",
    );
}

#[test]
fn ito_of_quadratic_form_in_gradients() {
    let ctx = stochastic_ctx(1);
    assert_same(
        &ctx,
        "d(a11*dx1(z)*conj(dx1(z)))",
        "dtau(a11)*dx1(z)*conj(dx1(z))*dt \
         + a11*(dx1(P)*conj(dx1(z)) + dx1(z)*conj(dx1(P)) + dx1(Q)*conj(dx1(Q)))*dt \
         + a11*(dx1(Q)*conj(dx1(z)) + dx1(z)*conj(dx1(Q)))*dB",
    );
}

#[test]
fn ito_of_deterministic_field() {
    let ctx = stochastic_ctx(1);
    assert_same(&ctx, "d(l)", "dtau(l)*dt");
}

#[test]
fn ito_table() {
    let ctx = stochastic_ctx(1);
    assert!(canon(&ctx, "dt*dB").is_zero());
    assert!(canon(&ctx, "dt*dt").is_zero());
    assert_same(&ctx, "dB*dB", "dt");
}

#[test]
fn im_swap_identity() {
    let ctx = stochastic_ctx(1);
    assert!(canon(&ctx, "Im(conj(dx1(z))*d(z)) + Im(dx1(z)*d(conj(z)))").is_zero());
}

#[test]
fn re_expands_by_definition() {
    let ctx = stochastic_ctx(1);
    assert!(canon(&ctx, "2*Re(conj(Phi)*conj(z)*d(z)) - (conj(Phi)*conj(z)*d(z) + Phi*z*d(conj(z)))").is_zero());
}

#[test]
fn z_times_conj_at_a_point() {
    let mut ctx = Context::new(1);
    ctx.complex_field("z");
    let asg = Assignment {
        values: [(
            "z".to_string(),
            Poly::default().term([1, 0, 0, 0], Coeff::one()).term([0, 0, 0, 1], Coeff::i()),
        )]
        .into_iter()
        .collect(),
        point: [q(1), q(0), q(0), q(1)],
    };
    let e = parse(&ctx, "z*conj(z)").unwrap();
    let v = eval_jet(&ctx, &e, &asg).unwrap();
    assert_eq!(v.value, Coeff::from_int(2));
    assert!(v.dt.is_zero() && v.db.is_zero());
}

#[test]
fn parse_errors() {
    let ctx = stochastic_ctx(2);
    assert!(matches!(parse(&ctx, "z + * z"), Err(ExprError::Syntax { pos: 4, .. })));
    assert!(matches!(parse(&ctx, "w"), Err(ExprError::UnknownSymbol(_))));
    assert!(matches!(parse(&ctx, "dx3(z)"), Err(ExprError::IndexOutOfRange { index: 3, n: 2, .. })));
    assert!(matches!(parse(&ctx, "a13"), Err(ExprError::IndexOutOfRange { index: 3, .. })));
    assert!(matches!(parse(&ctx, "z/z"), Err(ExprError::Syntax { .. })));
}

#[test]
fn symmetric_alias() {
    let ctx = stochastic_ctx(2);
    assert_same(&ctx, "a21", "a12");
}

#[test]
fn decimal_literals_are_exact() {
    let ctx = stochastic_ctx(1);
    assert_same(&ctx, "0.25*z", "z/4");
}

#[test]
fn semimartingale_has_no_time_derivative() {
    let ctx = stochastic_ctx(1);
    let e = parse(&ctx, "dtau(z)").unwrap();
    assert!(matches!(canonicalize(&ctx, &e), Err(ExprError::NotTimeDifferentiable(_))));
}

#[test]
fn nested_differential_rejected() {
    let ctx = stochastic_ctx(1);
    let e = parse(&ctx, "d(z*dt)").unwrap();
    assert_eq!(canonicalize(&ctx, &e), Err(ExprError::NestedDifferential));
}

#[test]
fn text_round_trip() {
    let ctx = stochastic_ctx(2);
    let f = canon(&ctx, "(3/4 - 2*i)*conj(dx1(z))^2*a12*d(z) - l^3*z/7 + i*Phi*dB*dB");
    let back = carleman_core::parse_lines(&ctx, &f.to_text()).unwrap();
    assert_eq!(canonicalize(&ctx, &back).unwrap(), f);
    let printed = parse(&ctx, &f.to_expr().to_string()).unwrap();
    assert_eq!(canonicalize(&ctx, &printed).unwrap(), f);
}

#[test]
fn vanishing_products_are_dropped() {
    let mut ctx = Context::new(1);
    ctx.real_scalar("a");
    ctx.scalar_vector("b0");
    ctx.real_field("l");
    ctx.vanishing_product("a", "b01");
    assert_same(&ctx, "a*b01*l + l", "l");
    ctx.set_apply_vanishing(false);
    assert_eq!(canon(&ctx, "a*b01*l + l").len(), 2);
    let _ = Expr::zero();
}
