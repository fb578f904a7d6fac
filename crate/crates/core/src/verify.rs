//! Residual checks: symbolic (canonical residual is the zero form) and
//! numeric (exact jet evaluation at random polynomial assignments).

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::canon::{canonicalize, CanonicalForm};
use crate::coeff::Coeff;
use crate::context::{Context, SymbolKind};
use crate::error::ExprError;
use crate::expr::Expr;
use crate::jet::{eval_jet, Assignment, JetValue, Poly};
use crate::theorem::{identity_coefficients, standard_context, Layout, Symbols};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Regime {
    /// `a ≠ 0`; `b0 = 0`.
    R1,
    /// `a = 0`, `a0, b ≠ 0`; `b0 = 0` (Schrödinger type).
    R2,
    /// `a = b = 0`, `a0 ≠ 0`, `b0 ≠ 0` (transport type).
    R3,
    /// Everything symbolic; only the products `a·b0^j`, `b·b0^j` are
    /// rewritten to zero.
    Unconstrained,
}

impl std::str::FromStr for Regime {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "R1" | "r1" => Ok(Regime::R1),
            "R2" | "r2" => Ok(Regime::R2),
            "R3" | "r3" => Ok(Regime::R3),
            "unconstrained" => Ok(Regime::Unconstrained),
            _ => Err(format!("unknown regime `{s}` (expected R1, R2, R3 or unconstrained)")),
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Regime::R1 => "R1",
            Regime::R2 => "R2",
            Regime::R3 => "R3",
            Regime::Unconstrained => "unconstrained",
        };
        f.write_str(s)
    }
}

/// A scalar parameter: left symbolic or fixed to an exact value.
#[derive(Clone, Debug, PartialEq)]
pub enum Param {
    Symbolic,
    Value(BigRational),
}

impl Param {
    pub fn int(n: i64) -> Self {
        Param::Value(BigRational::from_integer(BigInt::from(n)))
    }

    fn is_zero(&self) -> bool {
        matches!(self, Param::Value(v) if v == &BigRational::from_integer(0.into()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Coefficients {
    Symbolic,
    Identity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Auxiliary {
    Symbolic,
    Zero,
}

#[derive(Clone, Debug)]
pub struct OperatorSpec {
    pub n: usize,
    pub regime: Regime,
    pub a0: Param,
    pub a: Param,
    pub b: Param,
    /// Applied to every component `b0^j`.
    pub b0: Param,
    pub ajk: Coefficients,
    pub phi: Auxiliary,
    pub constraint_rewriting: bool,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecError {
    #[error("dimension must be 1, 2 or 3 (got {0})")]
    Dimension(usize),
    #[error("regime {regime} requires {requirement}")]
    Regime { regime: Regime, requirement: &'static str },
    #[error("unknown case `{0}`")]
    UnknownCase(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

impl OperatorSpec {
    /// Fully symbolic parameters except those the regime pins to zero.
    pub fn new(n: usize, regime: Regime) -> Self {
        let (a, b, b0) = match regime {
            Regime::R1 => (Param::Symbolic, Param::Symbolic, Param::int(0)),
            Regime::R2 => (Param::int(0), Param::Symbolic, Param::int(0)),
            Regime::R3 => (Param::int(0), Param::int(0), Param::Symbolic),
            Regime::Unconstrained => (Param::Symbolic, Param::Symbolic, Param::Symbolic),
        };
        OperatorSpec {
            n,
            regime,
            a0: Param::Symbolic,
            a,
            b,
            b0,
            ajk: Coefficients::Symbolic,
            phi: Auxiliary::Symbolic,
            constraint_rewriting: true,
        }
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        if !(1..=3).contains(&self.n) {
            return Err(SpecError::Dimension(self.n));
        }
        let fail = |requirement| Err(SpecError::Regime { regime: self.regime, requirement });
        match self.regime {
            Regime::R1 => {
                if !self.b0.is_zero() {
                    return fail("b0 = 0");
                }
                if self.a.is_zero() {
                    return fail("a != 0");
                }
            }
            Regime::R2 => {
                if !self.a.is_zero() || !self.b0.is_zero() {
                    return fail("a = 0 and b0 = 0");
                }
                if self.a0.is_zero() || self.b.is_zero() {
                    return fail("a0 != 0 and b != 0");
                }
            }
            Regime::R3 => {
                if !self.a.is_zero() || !self.b.is_zero() {
                    return fail("a = b = 0");
                }
                if self.a0.is_zero() || self.b0.is_zero() {
                    return fail("a0 != 0 and b0 != 0");
                }
            }
            Regime::Unconstrained => {}
        }
        Ok(())
    }

    pub fn context(&self) -> Result<Context, SpecError> {
        self.validate()?;
        let mut ctx = standard_context(Layout::stochastic(self.n));
        let fix = |ctx: &mut Context, name: &str, p: &Param| -> Result<(), ExprError> {
            if let Param::Value(v) = p {
                ctx.define(name, Expr::Const(Coeff::real(v.clone())))?;
            }
            Ok(())
        };
        fix(&mut ctx, "a0", &self.a0)?;
        fix(&mut ctx, "a", &self.a)?;
        fix(&mut ctx, "b", &self.b)?;
        for j in 1..=self.n {
            fix(&mut ctx, &format!("b0{j}"), &self.b0)?;
        }
        if self.ajk == Coefficients::Identity {
            identity_coefficients(&mut ctx)?;
        }
        if self.phi == Auxiliary::Zero {
            ctx.define("Phi", Expr::zero())?;
        }
        ctx.set_apply_vanishing(self.constraint_rewriting);
        Ok(ctx)
    }
}

/// One identity `lhs = Σ rhs_terms` in a context.
#[derive(Clone, Debug)]
pub struct Identity {
    pub label: String,
    pub lhs: Expr,
    pub rhs_terms: Vec<(String, Expr)>,
    /// False for documented deltas against a printed form: the residual is
    /// recorded, not required to vanish.
    pub expect_zero: bool,
}

impl Identity {
    pub fn new(label: impl Into<String>, lhs: Expr, rhs: Expr) -> Self {
        let rhs_terms = match &rhs {
            Expr::Add(v) => v.iter().enumerate().map(|(i, e)| (format!("term{}", i + 1), e.clone())).collect(),
            e => vec![("term1".to_string(), e.clone())],
        };
        Identity { label: label.into(), lhs, rhs_terms, expect_zero: true }
    }

    pub fn named(label: impl Into<String>, lhs: Expr, rhs_terms: Vec<(String, Expr)>) -> Self {
        Identity { label: label.into(), lhs, rhs_terms, expect_zero: true }
    }

    pub fn recorded_delta(mut self) -> Self {
        self.expect_zero = false;
        self
    }

    pub fn rhs(&self) -> Expr {
        Expr::sum(self.rhs_terms.iter().map(|(_, e)| e.clone()))
    }

    pub fn residual_expr(&self) -> Expr {
        self.lhs.clone() - self.rhs()
    }

    /// The identity with the right-side summand of largest canonical size removed.
    pub fn mutated(&self, ctx: &Context) -> Result<(String, Identity), ExprError> {
        let mut best: Option<(usize, usize)> = None;
        for (i, (_, e)) in self.rhs_terms.iter().enumerate() {
            let size = canonicalize(ctx, e)?.len();
            if size > 0 && best.map(|(_, s)| size > s).unwrap_or(true) {
                best = Some((i, size));
            }
        }
        let mut m = self.clone();
        let dropped = match best {
            Some((i, _)) => m.rhs_terms.remove(i).0,
            // all summands vanish: perturb instead
            None => {
                m.rhs_terms.push(("perturbation".into(), m.lhs.clone() + Expr::one()));
                "perturbation".into()
            }
        };
        m.label = format!("{} without {dropped}", self.label);
        Ok((dropped, m))
    }

    pub fn verify(&self, ctx: &Context) -> Result<IdentityResidual, ExprError> {
        let lhs = canonicalize(ctx, &self.lhs)?;
        let rhs = canonicalize(ctx, &self.rhs())?;
        Ok(IdentityResidual::new(self.label.clone(), self.expect_zero, lhs, rhs))
    }
}

#[derive(Clone, Debug)]
pub struct IdentityResidual {
    pub label: String,
    pub expect_zero: bool,
    pub lhs: CanonicalForm,
    pub rhs: CanonicalForm,
    pub residual: CanonicalForm,
    pub zero: bool,
    pub surviving_monomials: Vec<String>,
}

impl IdentityResidual {
    pub fn new(label: String, expect_zero: bool, lhs: CanonicalForm, rhs: CanonicalForm) -> Self {
        let residual = lhs.sub(&rhs);
        let surviving_monomials = residual.monomial_strings();
        IdentityResidual { label, expect_zero, zero: residual.is_zero(), lhs, rhs, residual, surviving_monomials }
    }

    /// Passing means: zero when zero is expected; recorded deltas always pass.
    pub fn passed(&self) -> bool {
        self.zero || !self.expect_zero
    }

    pub fn summary(&self) -> ResidualSummary {
        ResidualSummary {
            label: self.label.clone(),
            expect_zero: self.expect_zero,
            zero: self.zero,
            lhs_terms: self.lhs.len(),
            rhs_terms: self.rhs.len(),
            surviving_monomials: self.surviving_monomials.clone(),
        }
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ResidualSummary {
    pub label: String,
    pub expect_zero: bool,
    pub zero: bool,
    pub lhs_terms: usize,
    pub rhs_terms: usize,
    pub surviving_monomials: Vec<String>,
}

/// Both sides of the general identity for `spec`.
pub fn build_identity(spec: &OperatorSpec) -> Result<(Context, Identity), SpecError> {
    let ctx = spec.context()?;
    let s = Symbols::of(&ctx);
    let id = Identity::named(
        format!("weighted_identity n={} {}", spec.n, spec.regime),
        s.lhs(),
        s.rhs_terms().into_iter().map(|(n, e)| (n.to_string(), e)).collect(),
    );
    Ok((ctx, id))
}

pub fn verify_identity(spec: &OperatorSpec) -> Result<IdentityResidual, SpecError> {
    let (ctx, id) = build_identity(spec)?;
    Ok(id.verify(&ctx)?)
}

/// A random assignment that also satisfies the active vanishing products
/// (one factor of each pair is set to zero).
pub fn constrained_assignment<R: Rng>(ctx: &Context, rng: &mut R) -> Assignment {
    let mut asg = Assignment::random(ctx, rng);
    let pairs = ctx.vanishing_products();
    let active = pairs.iter().any(|(l, r)| !ctx.is_defined(l) && !ctx.is_defined(r));
    if active && !pairs.is_empty() {
        // zero either every left factor or every right factor
        let left = rng.random_bool(0.5);
        for (l, r) in &pairs {
            let name = if left { l } else { r };
            if let Some(sym) = ctx.symbol(name) {
                if sym.kind == SymbolKind::RealScalar && !ctx.is_defined(name) {
                    asg.values.insert(name.clone(), Poly::default());
                }
            }
        }
    }
    asg
}

/// Exact residual values at `count` random assignments drawn from `seed`.
pub fn numeric_residual_of(ctx: &Context, residual: &Expr, seed: u64, count: usize) -> Result<Vec<JetValue>, ExprError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let asg = constrained_assignment(ctx, &mut rng);
            eval_jet(ctx, residual, &asg)
        })
        .collect()
}

/// Residual of the general identity at 5 random rational points.
pub fn numeric_residual(spec: &OperatorSpec, seed: u64) -> Result<Vec<JetValue>, SpecError> {
    let (ctx, id) = build_identity(spec)?;
    Ok(numeric_residual_of(&ctx, &id.residual_expr(), seed, 5)?)
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct OracleReport {
    pub label: String,
    pub assignments: usize,
    pub all_zero: bool,
    pub mutation: String,
    pub mutation_detected: bool,
}

/// Oracle check of one identity plus its mutation.
pub fn oracle_check(ctx: &Context, id: &Identity, seed: u64, count: usize) -> Result<OracleReport, ExprError> {
    let values = numeric_residual_of(ctx, &id.residual_expr(), seed, count)?;
    let (dropped, mutant) = id.mutated(ctx)?;
    let mutant_values = numeric_residual_of(ctx, &mutant.residual_expr(), seed, count)?;
    Ok(OracleReport {
        label: id.label.clone(),
        assignments: count,
        all_zero: values.iter().all(JetValue::is_zero),
        mutation: dropped,
        mutation_detected: mutant_values.iter().any(|v| !v.is_zero()),
    })
}
