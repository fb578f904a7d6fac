//! Exact symbolic Itô calculus over complex fields, and a verifier for
//! pointwise weighted identities of stochastic PDE operators.

pub mod canon;
pub mod coeff;
pub mod context;
pub mod error;
pub mod expr;
pub mod jet;
pub mod parse;
pub mod special;
pub mod theorem;
pub mod verify;

pub use canon::{canonicalize, Atom, CanonicalForm, Differential, Monomial};
pub use coeff::Coeff;
pub use context::{Context, FieldSymbol, SymbolKind, Var};
pub use error::ExprError;
pub use expr::Expr;
pub use jet::{eval_jet, Assignment, JetValue, Poly};
pub use parse::{parse, parse_lines};
pub use special::{build_case, verify_special, Case, CaseReport, CaseSummary, CASE_IDS, PROOF_STEPS};
pub use verify::{
    build_identity, numeric_residual, numeric_residual_of, oracle_check, verify_identity, Auxiliary, Coefficients, Identity,
    IdentityResidual, OperatorSpec, OracleReport, Param, Regime, ResidualSummary, SpecError,
};
