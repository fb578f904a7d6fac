use std::path::PathBuf;

use carleman_core::special::resolve_case_id;
use carleman_core::{build_case, canonicalize, parse, oracle_check, verify_special, SpecError, CASE_IDS, PROOF_STEPS};

fn golden(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

/// Compares against a golden file; `UPDATE_GOLDEN=1` rewrites it.
fn check_golden(name: &str, actual: &str) {
    let path = golden(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, actual).unwrap();
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(actual, expected, "golden mismatch for {name}");
}

#[test]
fn every_case_verifies_in_low_dimension() {
    for n in 1..=2 {
        for id in CASE_IDS {
            let r = verify_special(id, n).unwrap();
            assert!(r.passed(), "{id} n={n}: {:#?}", r.summary());
            assert!(!r.parts.is_empty());
        }
    }
}

#[test]
fn proof_steps_are_addressable_by_index() {
    for (k, id) in PROOF_STEPS.iter().enumerate() {
        assert_eq!(resolve_case_id(&format!("proof_step:{}", k + 1)).unwrap(), *id);
    }
    assert!(matches!(resolve_case_id("proof_step:8"), Err(SpecError::UnknownCase(_))));
    assert!(matches!(resolve_case_id("proof_step:0"), Err(SpecError::UnknownCase(_))));
    assert!(matches!(verify_special("wave", 1), Err(SpecError::UnknownCase(_))));
    assert!(matches!(verify_special("ode", 0), Err(SpecError::Dimension(0))));
}

#[test]
fn elliptic_printed_delta_matches_golden() {
    let r = verify_special("elliptic", 2).unwrap();
    let printed = r.parts.iter().find(|p| !p.expect_zero).unwrap();
    assert!(!printed.zero);
    check_golden("elliptic_printed_delta.txt", &printed.residual.to_text());
}

#[test]
fn heat_printed_delta_matches_golden() {
    let r = verify_special("heat_identity", 2).unwrap();
    let printed = r.parts.iter().find(|p| !p.expect_zero).unwrap();
    assert!(!printed.zero);
    check_golden("heat_printed_delta.txt", &printed.residual.to_text());
}

fn delta_in_one_dimension(id: &str, expected: &str) {
    let case = build_case(id, 1).unwrap();
    let printed = case.identities.iter().find(|i| !i.expect_zero).unwrap();
    let delta = printed.verify(&case.ctx).unwrap().residual;
    let expected = canonicalize(&case.ctx, &parse(&case.ctx, expected).unwrap()).unwrap();
    assert_eq!(delta, expected, "{id}");
}

#[test]
fn printed_deltas_in_closed_form() {
    // V with z_x restored minus V as printed, differentiated
    delta_in_one_dimension("elliptic", "dx1(2*Phi*z*a11 - 2*Phi*z*a11*dx1(z))*dt");
    // -4 E z z_x with E = 2 l_x (Phi - l_t) - Phi_x and Phi = 2 l_xx
    delta_in_one_dimension(
        "heat_identity",
        "-4*(2*dx1(l)*(2*dx1(dx1(l)) - dtau(l)) - 2*dx1(dx1(dx1(l))))*z*dx1(z)*dt",
    );
}

#[test]
fn schrodinger_reduction_parts() {
    let r = verify_special("schrodinger", 2).unwrap();
    let labels: Vec<_> = r.parts.iter().map(|p| p.label.as_str()).collect();
    assert!(labels.contains(&"L w = P v"));
    assert!(labels.contains(&"I1 equals the transformed multiplier"));
    assert!(r.parts.iter().all(|p| p.zero));
}

#[test]
fn case_reports_serialize() {
    let r = verify_special("transport", 1).unwrap();
    let json = serde_json::to_value(r.summary()).unwrap();
    assert_eq!(json["id"], "transport");
    assert_eq!(json["passed"], true);
    assert!(json["parts"].as_array().unwrap().iter().all(|p| p["surviving_monomials"].as_array().unwrap().is_empty()));
}

#[test]
fn oracle_agrees_on_every_case() {
    for id in CASE_IDS {
        let case = build_case(id, 1).unwrap();
        for identity in case.identities.iter().filter(|i| i.expect_zero) {
            let r = oracle_check(&case.ctx, identity, 19, 4).unwrap();
            assert!(r.all_zero, "{id}: {}", identity.label);
            assert!(r.mutation_detected, "{id}: {} without {}", identity.label, r.mutation);
        }
    }
}

#[test]
fn oracle_sees_the_printed_deltas() {
    for id in ["elliptic", "heat_identity"] {
        let case = build_case(id, 1).unwrap();
        let printed = case.identities.iter().find(|i| !i.expect_zero).unwrap();
        let r = oracle_check(&case.ctx, printed, 2, 3).unwrap();
        assert!(!r.all_zero, "{id}");
    }
}
