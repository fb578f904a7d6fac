//! Exact evaluation oracle.
//!
//! Works directly on expression trees, never on canonical forms, so it gives
//! an independent check of the rewrite engine. Every field is replaced by a
//! polynomial in `(x1, x2, x3, t)`; values are carried as truncated Taylor
//! jets at the evaluation point so that derivatives are exact. Each value
//! also carries its own Itô differential (drift, diffusion), propagated by
//! the product rule `d(uv) = u dv + v du + du dv`.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::Rng;

use crate::coeff::Coeff;
use crate::context::{Context, SymbolKind, Var};
use crate::error::ExprError;
use crate::expr::Expr;

type Key = [u8; 4];

fn var_index(v: Var) -> usize {
    match v {
        Var::X(j) => j as usize - 1,
        Var::T => 3,
    }
}

/// Polynomial in `(x1, x2, x3, t)` with complex-rational coefficients.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Poly {
    pub terms: BTreeMap<Key, Coeff>,
}

impl Poly {
    pub fn constant(c: Coeff) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert([0; 4], c);
        }
        Poly { terms }
    }

    pub fn term(mut self, exps: Key, c: Coeff) -> Self {
        if !c.is_zero() {
            self.terms.insert(exps, c);
        }
        self
    }

    pub fn is_real(&self) -> bool {
        self.terms.values().all(Coeff::is_real)
    }
}

/// Values for every free symbol plus the evaluation point `(x1, x2, x3, t)`.
#[derive(Clone, Debug, Default)]
pub struct Assignment {
    pub values: BTreeMap<String, Poly>,
    pub point: [BigRational; 4],
}

fn small_rational<R: Rng>(rng: &mut R, nonzero: bool) -> BigRational {
    loop {
        let num: i64 = rng.random_range(-5..=5);
        let den: i64 = rng.random_range(1..=4);
        if !nonzero || num != 0 {
            return BigRational::new(BigInt::from(num), BigInt::from(den));
        }
    }
}

fn small_coeff<R: Rng>(rng: &mut R, real: bool) -> Coeff {
    let re: i64 = rng.random_range(-4..=4);
    let im: i64 = if real { 0 } else { rng.random_range(-4..=4) };
    Coeff::new(BigRational::from_integer(re.into()), BigRational::from_integer(im.into()))
}

fn random_poly<R: Rng>(rng: &mut R, vars: &[usize], degree: u8, real: bool) -> Poly {
    let mut p = Poly::default();
    let mut keys = vec![[0u8; 4]];
    for &v in vars {
        let mut next = Vec::new();
        for k in &keys {
            let used: u8 = k.iter().sum();
            for e in 0..=(degree - used) {
                let mut k2 = *k;
                k2[v] = e;
                next.push(k2);
            }
        }
        keys = next;
    }
    for k in keys {
        // sparse: roughly 60% of the admissible monomials
        if rng.random_range(0..10) < 6 {
            p = p.term(k, small_coeff(rng, real));
        }
    }
    if p.terms.is_empty() {
        p = Poly::constant(Coeff::one());
    }
    p
}

impl Assignment {
    /// Random polynomials of total degree `<= 3` for every free symbol of
    /// `ctx`, honouring reality and variable dependence, and a random point.
    pub fn random<R: Rng>(ctx: &Context, rng: &mut R) -> Self {
        let n = ctx.dim();
        let mut values = BTreeMap::new();
        for sym in ctx.symbols() {
            if ctx.is_defined(&sym.name) {
                continue;
            }
            let poly = match sym.kind {
                SymbolKind::Coordinate(_) => continue,
                SymbolKind::RealScalar => Poly::constant(Coeff::real(small_rational(rng, true))),
                SymbolKind::Exponential => Poly::constant(Coeff::real(small_rational(rng, true))),
                _ => {
                    let mut vars = Vec::new();
                    if sym.depends_x {
                        vars.extend(0..n);
                    }
                    if sym.depends_t {
                        vars.push(3);
                    }
                    random_poly(rng, &vars, 3, sym.real)
                }
            };
            values.insert(sym.name.clone(), poly);
        }
        let point = [
            small_rational(rng, false),
            small_rational(rng, false),
            small_rational(rng, false),
            small_rational(rng, false),
        ];
        Assignment { values, point }
    }
}

/// The value of an expression at a point, split by differential.
#[derive(Clone, Debug, PartialEq)]
pub struct JetValue {
    pub value: Coeff,
    pub dt: Coeff,
    pub db: Coeff,
}

impl JetValue {
    pub fn is_zero(&self) -> bool {
        self.value.is_zero() && self.dt.is_zero() && self.db.is_zero()
    }
}

/// Truncated Taylor series in the offsets `h = (x - x*, t - t*)`.
#[derive(Clone, Debug, Default, PartialEq)]
struct Jet {
    c: BTreeMap<Key, Coeff>,
}

fn deg(k: &Key) -> usize {
    k.iter().map(|&e| e as usize).sum()
}

impl Jet {
    fn constant(v: Coeff) -> Jet {
        let mut c = BTreeMap::new();
        if !v.is_zero() {
            c.insert([0; 4], v);
        }
        Jet { c }
    }

    fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    fn value(&self) -> Coeff {
        self.c.get(&[0; 4]).cloned().unwrap_or_else(Coeff::zero)
    }

    fn add_term(&mut self, k: Key, v: Coeff) {
        if v.is_zero() {
            return;
        }
        let e = self.c.entry(k).or_insert_with(Coeff::zero);
        *e += &v;
        if e.is_zero() {
            self.c.remove(&k);
        }
    }

    fn add(&self, o: &Jet) -> Jet {
        let mut r = self.clone();
        for (k, v) in &o.c {
            r.add_term(*k, v.clone());
        }
        r
    }

    fn scale(&self, s: &Coeff) -> Jet {
        if s.is_zero() {
            return Jet::default();
        }
        Jet { c: self.c.iter().map(|(k, v)| (*k, v * s)).collect() }
    }

    fn mul(&self, o: &Jet, need: usize) -> Jet {
        let mut r = Jet::default();
        for (k1, v1) in &self.c {
            let d1 = deg(k1);
            for (k2, v2) in &o.c {
                if d1 + deg(k2) > need {
                    continue;
                }
                let k = [k1[0] + k2[0], k1[1] + k2[1], k1[2] + k2[2], k1[3] + k2[3]];
                r.add_term(k, v1 * v2);
            }
        }
        r
    }

    fn conj(&self) -> Jet {
        Jet { c: self.c.iter().map(|(k, v)| (*k, v.conj())).collect() }
    }

    fn deriv(&self, v: usize) -> Jet {
        let mut r = Jet::default();
        for (k, c) in &self.c {
            if k[v] > 0 {
                let mut k2 = *k;
                k2[v] -= 1;
                r.add_term(k2, c.scale(&BigRational::from_integer(k[v].into())));
            }
        }
        r
    }

    fn truncate(&self, need: usize) -> Jet {
        Jet { c: self.c.iter().filter(|(k, _)| deg(k) <= need).map(|(k, v)| (*k, v.clone())).collect() }
    }

    /// exp(u) for u with zero constant term.
    fn exp_nilpotent(&self, need: usize) -> Jet {
        let mut sum = Jet::constant(Coeff::one());
        let mut term = Jet::constant(Coeff::one());
        for k in 1..=need {
            term = term.mul(self, need).scale(&Coeff::from_ratio(1, k as i64));
            sum = sum.add(&term);
        }
        sum
    }
}

#[derive(Clone, Debug, Default)]
struct Val {
    base: Jet,
    dt: Jet,
    db: Jet,
    /// Itô differential `(drift, diffusion)`; `None` when undefined.
    ito: Option<(Jet, Jet)>,
    stochastic: bool,
}

impl Val {
    fn deterministic(base: Jet) -> Val {
        let drift = base.deriv(3);
        Val { base, ito: Some((drift, Jet::default())), ..Default::default() }
    }

    fn has_diff(&self) -> bool {
        !self.dt.is_zero() || !self.db.is_zero()
    }

    fn add(&self, o: &Val) -> Val {
        Val {
            base: self.base.add(&o.base),
            dt: self.dt.add(&o.dt),
            db: self.db.add(&o.db),
            ito: match (&self.ito, &o.ito) {
                (Some((a, b)), Some((c, d))) => Some((a.add(c), b.add(d))),
                _ => None,
            },
            stochastic: self.stochastic || o.stochastic,
        }
    }

    fn mul(&self, o: &Val, need: usize) -> Val {
        let base = self.base.mul(&o.base, need);
        let dt = self
            .base
            .mul(&o.dt, need)
            .add(&self.dt.mul(&o.base, need))
            .add(&self.db.mul(&o.db, need));
        let db = self.base.mul(&o.db, need).add(&self.db.mul(&o.base, need));
        let ito = match (&self.ito, &o.ito) {
            (Some((a1, s1)), Some((a2, s2))) => Some((
                self.base.mul(a2, need).add(&o.base.mul(a1, need)).add(&s1.mul(s2, need)),
                self.base.mul(s2, need).add(&o.base.mul(s1, need)),
            )),
            _ => None,
        };
        Val { base, dt, db, ito, stochastic: self.stochastic || o.stochastic }
    }

    fn map(&self, f: impl Fn(&Jet) -> Jet) -> Val {
        Val {
            base: f(&self.base),
            dt: f(&self.dt),
            db: f(&self.db),
            ito: self.ito.as_ref().map(|(a, s)| (f(a), f(s))),
            stochastic: self.stochastic,
        }
    }
}

struct Evaluator<'a> {
    ctx: &'a Context,
    asg: &'a Assignment,
    memo: HashMap<(Arc<str>, usize), Val>,
}

impl<'a> Evaluator<'a> {
    fn taylor(&self, name: &str, need: usize) -> Result<Jet, ExprError> {
        let p = self.asg.values.get(name).ok_or_else(|| ExprError::Unassigned(name.to_string()))?;
        // shifted coordinates x* + h
        let coord: Vec<Jet> = (0..4)
            .map(|v| {
                let mut j = Jet::constant(Coeff::real(self.asg.point[v].clone()));
                let mut k = [0u8; 4];
                k[v] = 1;
                j.add_term(k, Coeff::one());
                j
            })
            .collect();
        let mut out = Jet::default();
        for (exps, c) in &p.terms {
            let mut t = Jet::constant(c.clone());
            for v in 0..4 {
                for _ in 0..exps[v] {
                    t = t.mul(&coord[v], need);
                }
            }
            out = out.add(&t);
        }
        Ok(out)
    }

    fn symbol(&mut self, name: &Arc<str>, need: usize) -> Result<Val, ExprError> {
        let key = self.ctx.lookup(name)?;
        if let Some(v) = self.memo.get(&(key.clone(), need)) {
            return Ok(v.clone());
        }
        let val = if let Some(def) = self.ctx.definition_expr(&key) {
            let def = def.clone();
            self.eval(&def, need)?
        } else {
            let sym = self.ctx.symbol(&key).unwrap().clone();
            match sym.kind {
                SymbolKind::Coordinate(v) => {
                    let i = var_index(v);
                    let mut j = Jet::constant(Coeff::real(self.asg.point[i].clone()));
                    let mut k = [0u8; 4];
                    k[i] = 1;
                    j.add_term(k, Coeff::one());
                    Val::deterministic(j)
                }
                SymbolKind::Exponential => {
                    let log = self.ctx.log_expr(&key).unwrap().clone();
                    let l = self.eval(&log, need)?;
                    if l.stochastic || l.has_diff() {
                        return Err(ExprError::Definition(format!("logarithm of `{key}` is not deterministic")));
                    }
                    let mut shifted = l.base.clone();
                    shifted.c.remove(&[0; 4]);
                    let e0 = self.taylor(&key, 0)?.value();
                    Val::deterministic(shifted.exp_nilpotent(need).scale(&e0))
                }
                SymbolKind::DriftJet | SymbolKind::DiffusionJet => {
                    Val { base: self.taylor(&key, need)?, stochastic: true, ..Default::default() }
                }
                _ if sym.semimartingale => {
                    let (p, q) = self.ctx.jets_of(&key).unwrap();
                    let (p, q) = (p.clone(), q.clone());
                    Val {
                        base: self.taylor(&key, need)?,
                        ito: Some((self.taylor(&p, need)?, self.taylor(&q, need)?)),
                        stochastic: true,
                        ..Default::default()
                    }
                }
                _ => Val::deterministic(self.taylor(&key, need)?),
            }
        };
        self.memo.insert((key, need), val.clone());
        Ok(val)
    }

    fn eval(&mut self, e: &Expr, need: usize) -> Result<Val, ExprError> {
        Ok(match e {
            Expr::Const(c) => Val::deterministic(Jet::constant(c.clone())),
            Expr::Dt => Val { dt: Jet::constant(Coeff::one()), ..Default::default() },
            Expr::DB => Val { db: Jet::constant(Coeff::one()), ..Default::default() },
            Expr::Sym(name) => self.symbol(name, need)?,
            Expr::Add(v) => {
                let mut acc = Val::deterministic(Jet::default());
                for t in v.iter() {
                    acc = acc.add(&self.eval(t, need)?);
                }
                acc
            }
            Expr::Mul(v) => {
                let mut acc = Val::deterministic(Jet::constant(Coeff::one()));
                for t in v.iter() {
                    acc = acc.mul(&self.eval(t, need)?, need);
                }
                acc
            }
            Expr::Pow(b, k) if *k >= 0 => {
                let v = self.eval(b, need)?;
                let mut acc = Val::deterministic(Jet::constant(Coeff::one()));
                for _ in 0..*k {
                    acc = acc.mul(&v, need);
                }
                acc
            }
            Expr::Pow(b, k) => {
                // negative powers: exponentials and constants only
                let v = self.eval(b, need)?;
                if v.stochastic || v.has_diff() {
                    return Err(ExprError::NegativePower);
                }
                let b0 = v.base.value();
                let inv0 = b0.inv().ok_or(ExprError::DivisionByZero)?;
                // 1/b = (1/b0) Σ (−u)^m with u = b/b0 − 1
                let mut u = v.base.scale(&inv0);
                u.c.remove(&[0; 4]);
                let neg_u = u.scale(&Coeff::from_int(-1));
                let mut inv = Jet::constant(Coeff::one());
                let mut term = Jet::constant(Coeff::one());
                for _ in 0..need {
                    term = term.mul(&neg_u, need);
                    inv = inv.add(&term);
                }
                let inv = inv.scale(&inv0);
                let mut acc = Jet::constant(Coeff::one());
                for _ in 0..k.unsigned_abs() {
                    acc = acc.mul(&inv, need);
                }
                Val::deterministic(acc)
            }
            Expr::Dx(j, inner) => {
                if *j == 0 || *j as usize > self.ctx.dim() {
                    return Err(ExprError::IndexOutOfRange { name: format!("dx{j}"), index: *j as usize, n: self.ctx.dim() });
                }
                let v = self.eval(inner, need + 1)?;
                let i = *j as usize - 1;
                v.map(|jet| jet.deriv(i).truncate(need))
            }
            Expr::Dtau(inner) => {
                let v = self.eval(inner, need + 1)?;
                if v.stochastic {
                    return Err(ExprError::NotTimeDifferentiable(inner.to_string()));
                }
                let mut r = v.map(|jet| jet.deriv(3).truncate(need));
                if r.ito.is_some() {
                    r.ito = Some((r.base.deriv(3), Jet::default()));
                }
                r
            }
            Expr::Ito(inner) => {
                let v = self.eval(inner, need + 1)?;
                if v.has_diff() {
                    return Err(ExprError::NestedDifferential);
                }
                let (drift, diffusion) = v.ito.ok_or_else(|| ExprError::NoDifferential(inner.to_string()))?;
                Val { dt: drift.truncate(need), db: diffusion.truncate(need), ..Default::default() }
            }
            Expr::Conj(inner) => self.eval(inner, need)?.map(Jet::conj),
            Expr::Re(inner) => {
                let v = self.eval(inner, need)?;
                let half = Coeff::from_ratio(1, 2);
                v.add(&v.map(Jet::conj)).map(|j| j.scale(&half))
            }
            Expr::Im(inner) => {
                let v = self.eval(inner, need)?;
                let k = Coeff::imag_ratio(-1, 2);
                v.add(&v.map(Jet::conj).map(|j| j.scale(&Coeff::from_int(-1)))).map(|j| j.scale(&k))
            }
        })
    }
}

/// Evaluates `e` exactly at `asg.point`, returning the coefficients of
/// `1`, `dt` and `dB`.
pub fn eval_jet(ctx: &Context, e: &Expr, asg: &Assignment) -> Result<JetValue, ExprError> {
    let mut ev = Evaluator { ctx, asg, memo: HashMap::new() };
    let v = ev.eval(e, 0)?;
    Ok(JetValue { value: v.base.value(), dt: v.dt.value(), db: v.db.value() })
}
