use carleman_core::{
    build_identity, canonicalize, numeric_residual, numeric_residual_of, verify_identity, Auxiliary, OperatorSpec, Param,
    Regime, SpecError,
};

const REGIMES: [Regime; 3] = [Regime::R1, Regime::R2, Regime::R3];

#[test]
fn every_regime_and_dimension_is_exact() {
    for n in 1..=3 {
        for regime in REGIMES {
            let r = verify_identity(&OperatorSpec::new(n, regime)).unwrap();
            assert!(r.zero, "n={n} {regime}: {:?}", r.surviving_monomials);
            assert!(r.surviving_monomials.is_empty());
            assert!(r.lhs.len() > 0);
        }
    }
}

#[test]
fn parabolic_with_unit_a() {
    let mut spec = OperatorSpec::new(1, Regime::R1);
    spec.a = Param::int(1);
    assert!(verify_identity(&spec).unwrap().zero);
}

#[test]
fn schrodinger_regime_with_unit_parameters() {
    let mut spec = OperatorSpec::new(1, Regime::R2);
    spec.a0 = Param::int(1);
    spec.b = Param::int(1);
    assert!(verify_identity(&spec).unwrap().zero);
}

#[test]
fn transport_regime_without_auxiliary_function() {
    let mut spec = OperatorSpec::new(1, Regime::R3);
    spec.phi = Auxiliary::Zero;
    assert!(verify_identity(&spec).unwrap().zero);
    let (ctx, id) = build_identity(&spec).unwrap();
    // the second-order summands drop out
    for name in ["D", "E_F", "divergence_V", "gradient_quadratic_variation", "mixed_quadratic_variation"] {
        let (_, e) = id.rhs_terms.iter().find(|(n, _)| n == name).unwrap();
        assert!(canonicalize(&ctx, e).unwrap().is_zero(), "{name}");
    }
}

#[test]
fn regime_violations_are_rejected() {
    let mut spec = OperatorSpec::new(2, Regime::R1);
    spec.b0 = Param::Symbolic;
    assert!(matches!(verify_identity(&spec), Err(SpecError::Regime { regime: Regime::R1, .. })));

    let mut spec = OperatorSpec::new(2, Regime::R2);
    spec.a = Param::Symbolic;
    assert!(matches!(verify_identity(&spec), Err(SpecError::Regime { .. })));

    let mut spec = OperatorSpec::new(1, Regime::R3);
    spec.b0 = Param::int(0);
    assert!(matches!(build_identity(&spec), Err(SpecError::Regime { .. })));

    assert_eq!(OperatorSpec::new(4, Regime::R1).validate(), Err(SpecError::Dimension(4)));
}

#[test]
fn constraint_products_are_all_that_survive_without_rewriting() {
    for n in 1..=2 {
        let mut spec = OperatorSpec::new(n, Regime::Unconstrained);
        assert!(verify_identity(&spec).unwrap().zero);
        spec.constraint_rewriting = false;
        let r = verify_identity(&spec).unwrap();
        assert!(!r.zero);
        for (m, _) in r.residual.iter() {
            let has = |name: &str| m.contains_name(name);
            let b0 = (1..=n).any(|j| has(&format!("b0{j}")));
            assert!(b0 && (has("a") || has("b")), "{m}");
        }
    }
}

#[test]
fn oracle_sees_zero_residual() {
    for (regime, seed) in [(Regime::R1, 7), (Regime::R3, 11), (Regime::R2, 3)] {
        let values = numeric_residual(&OperatorSpec::new(1, regime), seed).unwrap();
        assert_eq!(values.len(), 5);
        assert!(values.iter().all(|v| v.is_zero()), "{regime}");
    }
}

#[test]
fn dropping_the_b_term_is_detected() {
    let spec = OperatorSpec::new(1, Regime::R1);
    let (ctx, mut id) = build_identity(&spec).unwrap();
    id.rhs_terms.retain(|(n, _)| n != "B");
    assert!(!id.verify(&ctx).unwrap().zero);
    let values = numeric_residual_of(&ctx, &id.residual_expr(), 7, 5).unwrap();
    assert!(values.iter().any(|v| !v.is_zero()));
}

#[test]
fn unconstrained_oracle_respects_the_constraints() {
    let spec = OperatorSpec::new(1, Regime::Unconstrained);
    let (ctx, id) = build_identity(&spec).unwrap();
    let values = numeric_residual_of(&ctx, &id.residual_expr(), 5, 6).unwrap();
    assert!(values.iter().all(|v| v.is_zero()));
}

#[test]
fn residual_summary_serializes_surviving_monomials() {
    let mut spec = OperatorSpec::new(1, Regime::Unconstrained);
    spec.constraint_rewriting = false;
    let r = verify_identity(&spec).unwrap();
    let json = serde_json::to_value(r.summary()).unwrap();
    assert_eq!(json["zero"], false);
    assert_eq!(json["surviving_monomials"].as_array().unwrap().len(), r.residual.len());
}
