//! Canonical forms: sums of monomials with exact complex-rational coefficients.
//!
//! A monomial is a sorted product of atom powers times at most one formal
//! differential. Products of differentials are reduced with the Itô table
//! (`dB·dB = dt`, `dt·dt = dt·dB = 0`) as soon as they are formed, so every
//! form is always fully reduced and two equal expressions give identical maps.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::coeff::Coeff;
use crate::context::{Context, SymbolKind, Var};
use crate::error::ExprError;
use crate::expr::Expr;

/// A field symbol with derivative orders and a conjugation flag.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub name: Arc<str>,
    pub dx: [u8; 3],
    pub dt: u8,
    pub conj: bool,
}

impl Atom {
    pub fn plain(name: Arc<str>) -> Self {
        Atom { name, dx: [0; 3], dt: 0, conj: false }
    }

    fn with_name(&self, name: &Arc<str>) -> Atom {
        Atom { name: name.clone(), ..self.clone() }
    }

    pub fn to_expr(&self) -> Expr {
        let mut e = Expr::Sym(self.name.clone());
        for (j, &k) in self.dx.iter().enumerate() {
            for _ in 0..k {
                e = e.dx(j + 1);
            }
        }
        for _ in 0..self.dt {
            e = e.dtau();
        }
        if self.conj {
            e = e.conj();
        }
        e
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_expr())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Differential {
    None,
    Dt,
    DB,
}

impl Differential {
    fn times(self, other: Differential) -> Option<Differential> {
        use Differential::*;
        match (self, other) {
            (None, d) | (d, None) => Some(d),
            (DB, DB) => Some(Dt),
            _ => Option::None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial {
    pub diff: Differential,
    pub factors: Vec<(Atom, i32)>,
}

impl Monomial {
    pub fn one() -> Self {
        Monomial { diff: Differential::None, factors: Vec::new() }
    }

    pub fn atom(a: Atom, e: i32) -> Self {
        Monomial { diff: Differential::None, factors: vec![(a, e)] }
    }

    /// Product, or `None` when the Itô table kills it.
    pub fn mul(&self, other: &Monomial) -> Option<Monomial> {
        let diff = self.diff.times(other.diff)?;
        let (a, b) = (&self.factors, &other.factors);
        let mut factors = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => {
                    factors.push(a[i].clone());
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    factors.push(b[j].clone());
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    let e = a[i].1 + b[j].1;
                    if e != 0 {
                        factors.push((a[i].0.clone(), e));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        factors.extend_from_slice(&a[i..]);
        factors.extend_from_slice(&b[j..]);
        Some(Monomial { diff, factors })
    }

    pub fn degree(&self) -> i32 {
        self.factors.iter().map(|(_, e)| e).sum()
    }

    pub fn contains_name(&self, name: &str) -> bool {
        self.factors.iter().any(|(a, _)| &*a.name == name)
    }

    pub fn to_expr(&self) -> Expr {
        let mut v: Vec<Expr> = self
            .factors
            .iter()
            .map(|(a, e)| if *e == 1 { a.to_expr() } else { a.to_expr().pow(*e) })
            .collect();
        match self.diff {
            Differential::None => {}
            Differential::Dt => v.push(Expr::Dt),
            Differential::DB => v.push(Expr::DB),
        }
        Expr::product(v)
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_expr())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default, Hash)]
pub struct CanonicalForm {
    terms: BTreeMap<Monomial, Coeff>,
}

impl CanonicalForm {
    pub fn zero() -> Self {
        CanonicalForm::default()
    }

    pub fn constant(c: Coeff) -> Self {
        Self::monomial(Monomial::one(), c)
    }

    pub fn monomial(m: Monomial, c: Coeff) -> Self {
        let mut f = CanonicalForm::zero();
        f.add_term(m, c);
        f
    }

    pub fn atom(a: Atom) -> Self {
        Self::monomial(Monomial::atom(a, 1), Coeff::one())
    }

    pub fn differential(d: Differential) -> Self {
        Self::monomial(Monomial { diff: d, factors: Vec::new() }, Coeff::one())
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Monomial, &Coeff)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &Monomial) -> Option<&Coeff> {
        self.terms.get(m)
    }

    pub fn add_term(&mut self, m: Monomial, c: Coeff) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += &c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn add(&self, other: &CanonicalForm) -> CanonicalForm {
        let mut out = self.clone();
        out.add_assign(other);
        out
    }

    pub fn add_assign(&mut self, other: &CanonicalForm) {
        for (m, c) in &other.terms {
            self.add_term(m.clone(), c.clone());
        }
    }

    pub fn sub(&self, other: &CanonicalForm) -> CanonicalForm {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c);
        }
        out
    }

    pub fn neg(&self) -> CanonicalForm {
        self.scale(&Coeff::from_int(-1))
    }

    pub fn scale(&self, k: &Coeff) -> CanonicalForm {
        if k.is_zero() {
            return CanonicalForm::zero();
        }
        CanonicalForm { terms: self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect() }
    }

    pub fn mul(&self, other: &CanonicalForm) -> CanonicalForm {
        let mut out = CanonicalForm::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                if let Some(m) = m1.mul(m2) {
                    out.add_term(m, c1 * c2);
                }
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> CanonicalForm {
        let mut acc = CanonicalForm::constant(Coeff::one());
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn has_differentials(&self) -> bool {
        self.terms.keys().any(|m| m.diff != Differential::None)
    }

    /// True if any monomial contains an atom of `name`.
    pub fn mentions(&self, name: &str) -> bool {
        self.terms.keys().any(|m| m.contains_name(name))
    }

    /// Part multiplying the given differential, with the differential removed.
    pub fn part(&self, d: Differential) -> CanonicalForm {
        let mut out = CanonicalForm::zero();
        for (m, c) in &self.terms {
            if m.diff == d {
                out.add_term(Monomial { diff: Differential::None, factors: m.factors.clone() }, c.clone());
            }
        }
        out
    }

    /// Drops monomials containing both members of a vanishing pair.
    pub fn filter_vanishing(&self, ctx: &Context) -> CanonicalForm {
        let pairs = ctx.vanishing_pairs();
        if pairs.is_empty() {
            return self.clone();
        }
        CanonicalForm {
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| !pairs.iter().any(|(a, b)| m.contains_name(a) && m.contains_name(b)))
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    pub fn conj(&self, ctx: &Context) -> CanonicalForm {
        let mut out = CanonicalForm::zero();
        for (m, c) in &self.terms {
            let mut factors: Vec<(Atom, i32)> = m
                .factors
                .iter()
                .map(|(a, e)| {
                    let mut a = a.clone();
                    if !ctx.is_real(&a.name) {
                        a.conj = !a.conj;
                    }
                    (a, *e)
                })
                .collect();
            factors.sort();
            out.add_term(Monomial { diff: m.diff, factors }, c.conj());
        }
        out
    }

    pub fn re(&self, ctx: &Context) -> CanonicalForm {
        self.add(&self.conj(ctx)).scale(&Coeff::from_ratio(1, 2))
    }

    pub fn im(&self, ctx: &Context) -> CanonicalForm {
        // (u - ū)/(2i) = -i/2 (u - ū)
        let k = Coeff::imag_ratio(-1, 2);
        self.sub(&self.conj(ctx)).scale(&k)
    }

    pub fn deriv(&self, ctx: &Context, var: Var) -> Result<CanonicalForm, ExprError> {
        let mut out = CanonicalForm::zero();
        for (m, c) in &self.terms {
            for (i, (atom, e)) in m.factors.iter().enumerate() {
                let d = atom_power_deriv(ctx, atom, *e, var)?;
                if d.is_zero() {
                    continue;
                }
                let mut rest = m.clone();
                rest.factors.remove(i);
                out.add_assign(&d.mul(&CanonicalForm::monomial(rest, c.clone())));
            }
        }
        Ok(out.filter_vanishing(ctx))
    }

    /// Itô differential. Rejects forms that already carry dt or dB.
    pub fn ito(&self, ctx: &Context) -> Result<CanonicalForm, ExprError> {
        if self.has_differentials() {
            return Err(ExprError::NestedDifferential);
        }
        let mut out = CanonicalForm::zero();
        for (m, c) in &self.terms {
            // ∏ (a + da)^e − ∏ a^e
            let mut prod = CanonicalForm::constant(c.clone());
            for (atom, e) in &m.factors {
                prod = prod.mul(&atom_power_shift(ctx, atom, *e)?);
            }
            prod.add_term(m.clone(), -c);
            out.add_assign(&prod);
        }
        Ok(out.filter_vanishing(ctx))
    }

    pub fn to_expr(&self) -> Expr {
        Expr::sum(self.terms.iter().map(|(m, c)| {
            if m.factors.is_empty() && m.diff == Differential::None {
                Expr::Const(c.clone())
            } else if c.is_one() {
                m.to_expr()
            } else {
                Expr::Const(c.clone()) * m.to_expr()
            }
        }))
    }

    /// Deterministic text serialization: one `coefficient * monomial` per line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (m, c) in &self.terms {
            let cs = if c.is_real() || c.re == num_rational::BigRational::from_integer(0.into()) {
                let t = c.to_string();
                if t.contains('/') || t.contains('*') {
                    format!("({t})")
                } else {
                    t
                }
            } else {
                c.to_string()
            };
            if m.factors.is_empty() && m.diff == Differential::None {
                s.push_str(&cs);
            } else {
                s.push_str(&cs);
                s.push_str(" * ");
                s.push_str(&m.to_string());
            }
            s.push('\n');
        }
        s
    }

    /// Monomials as printed strings, in canonical order.
    pub fn monomial_strings(&self) -> Vec<String> {
        self.to_text().lines().map(str::to_string).collect()
    }

    /// Floating-point evaluation with a caller-supplied atom valuation.
    /// Differentials must be absent.
    pub fn eval_f64<F>(&self, mut atom_value: F) -> (f64, f64)
    where
        F: FnMut(&Atom) -> (f64, f64),
    {
        let mut acc = (0.0, 0.0);
        for (m, c) in &self.terms {
            assert!(m.diff == Differential::None, "eval_f64 on a form with differentials");
            let mut v = c.to_f64_pair();
            for (a, e) in &m.factors {
                let x = atom_value(a);
                let xp = cpowi(x, *e);
                v = cmul(v, xp);
            }
            acc.0 += v.0;
            acc.1 += v.1;
        }
        acc
    }
}

fn cmul(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0)
}

fn cpowi(x: (f64, f64), e: i32) -> (f64, f64) {
    let mut acc = (1.0, 0.0);
    for _ in 0..e.unsigned_abs() {
        acc = cmul(acc, x);
    }
    if e < 0 {
        let d = acc.0 * acc.0 + acc.1 * acc.1;
        (acc.0 / d, -acc.1 / d)
    } else {
        acc
    }
}

impl fmt::Display for CanonicalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            write!(f, "0")
        } else {
            write!(f, "{}", self.to_expr())
        }
    }
}

/// `∂ atom` as a canonical form.
fn atom_deriv(ctx: &Context, atom: &Atom, var: Var) -> Result<CanonicalForm, ExprError> {
    let sym = ctx.symbol(&atom.name).ok_or_else(|| ExprError::UnknownSymbol(atom.name.to_string()))?;
    match sym.kind {
        SymbolKind::RealScalar => Ok(CanonicalForm::zero()),
        SymbolKind::Coordinate(v) => {
            let bare = atom.dx == [0; 3] && atom.dt == 0;
            Ok(if bare && v == var { CanonicalForm::constant(Coeff::one()) } else { CanonicalForm::zero() })
        }
        SymbolKind::Exponential => {
            let log = &ctx.log_of(&atom.name).expect("exponential without logarithm").form;
            Ok(log.deriv(ctx, var)?.mul(&CanonicalForm::atom(atom.clone())))
        }
        _ => match var {
            Var::T => {
                if sym.semimartingale {
                    Err(ExprError::NotTimeDifferentiable(sym.name.clone()))
                } else if !sym.depends_t {
                    Ok(CanonicalForm::zero())
                } else {
                    let mut a = atom.clone();
                    a.dt += 1;
                    Ok(CanonicalForm::atom(a))
                }
            }
            Var::X(j) => {
                if j == 0 || j as usize > ctx.dim() {
                    return Err(ExprError::IndexOutOfRange {
                        name: format!("dx{j}"),
                        index: j as usize,
                        n: ctx.dim(),
                    });
                }
                if !sym.depends_x {
                    Ok(CanonicalForm::zero())
                } else {
                    let mut a = atom.clone();
                    a.dx[j as usize - 1] += 1;
                    Ok(CanonicalForm::atom(a))
                }
            }
        },
    }
}

/// `∂ (atom^e) = e·atom^{e-1}·∂atom`.
fn atom_power_deriv(ctx: &Context, atom: &Atom, e: i32, var: Var) -> Result<CanonicalForm, ExprError> {
    let d = atom_deriv(ctx, atom, var)?;
    if d.is_zero() {
        return Ok(d);
    }
    let lower = if e == 1 {
        CanonicalForm::constant(Coeff::one())
    } else {
        CanonicalForm::monomial(Monomial::atom(atom.clone(), e - 1), Coeff::one())
    };
    Ok(d.mul(&lower).scale(&Coeff::from_int(e as i64)))
}

/// `d atom` as a canonical form (may contain dt and dB).
fn atom_ito(ctx: &Context, atom: &Atom) -> Result<CanonicalForm, ExprError> {
    let sym = ctx.symbol(&atom.name).ok_or_else(|| ExprError::UnknownSymbol(atom.name.to_string()))?;
    if sym.semimartingale {
        let (p, q) = ctx.jets_of(&atom.name).ok_or_else(|| ExprError::NoDifferential(sym.name.clone()))?;
        let dt = CanonicalForm::atom(atom.with_name(p)).mul(&CanonicalForm::differential(Differential::Dt));
        let db = CanonicalForm::atom(atom.with_name(q)).mul(&CanonicalForm::differential(Differential::DB));
        return Ok(dt.add(&db));
    }
    Ok(atom_deriv(ctx, atom, Var::T)?.mul(&CanonicalForm::differential(Differential::Dt)))
}

/// `(atom + d atom)^e`, Itô-truncated.
fn atom_power_shift(ctx: &Context, atom: &Atom, e: i32) -> Result<CanonicalForm, ExprError> {
    let base = CanonicalForm::atom(atom.clone());
    let da = atom_ito(ctx, atom)?;
    if e > 0 {
        return Ok(base.add(&da).pow(e as u32));
    }
    // Deterministic atoms only: a^e + e a^{e-1} a_t dt, the dt part of da
    // carries no dB so higher terms vanish.
    if da.part(Differential::DB).len() > 0 {
        return Err(ExprError::NegativePower);
    }
    let pow = CanonicalForm::monomial(Monomial::atom(atom.clone(), e), Coeff::one());
    let lower = CanonicalForm::monomial(Monomial::atom(atom.clone(), e - 1), Coeff::one());
    Ok(pow.add(&lower.mul(&da).scale(&Coeff::from_int(e as i64))))
}

/// Reduces an expression tree to its canonical form.
pub fn canonicalize(ctx: &Context, e: &Expr) -> Result<CanonicalForm, ExprError> {
    Ok(match e {
        Expr::Const(c) => CanonicalForm::constant(c.clone()),
        Expr::Dt => CanonicalForm::differential(Differential::Dt),
        Expr::DB => CanonicalForm::differential(Differential::DB),
        Expr::Sym(name) => {
            if let Some(d) = ctx.definition(name) {
                d.form.clone()
            } else {
                let key = ctx.lookup(name)?;
                if let Some(d) = ctx.definition(&key) {
                    d.form.clone()
                } else {
                    CanonicalForm::atom(Atom::plain(key))
                }
            }
        }
        Expr::Add(v) => {
            let mut acc = CanonicalForm::zero();
            for t in v.iter() {
                acc.add_assign(&canonicalize(ctx, t)?);
            }
            acc
        }
        Expr::Mul(v) => {
            let mut acc = CanonicalForm::constant(Coeff::one());
            for t in v.iter() {
                let f = canonicalize(ctx, t)?;
                acc = acc.mul(&f).filter_vanishing(ctx);
                if acc.is_zero() {
                    break;
                }
            }
            acc
        }
        Expr::Pow(b, k) => {
            let f = canonicalize(ctx, b)?;
            if *k >= 0 {
                let mut acc = CanonicalForm::constant(Coeff::one());
                for _ in 0..*k {
                    acc = acc.mul(&f).filter_vanishing(ctx);
                }
                acc
            } else {
                invert_power(ctx, &f, *k)?
            }
        }
        Expr::Dx(j, inner) => {
            if *j == 0 || *j as usize > ctx.dim() {
                return Err(ExprError::IndexOutOfRange { name: format!("dx{j}"), index: *j as usize, n: ctx.dim() });
            }
            canonicalize(ctx, inner)?.deriv(ctx, Var::X(*j))?
        }
        Expr::Dtau(inner) => canonicalize(ctx, inner)?.deriv(ctx, Var::T)?,
        Expr::Ito(inner) => canonicalize(ctx, inner)?.ito(ctx)?,
        Expr::Conj(inner) => canonicalize(ctx, inner)?.conj(ctx),
        Expr::Re(inner) => canonicalize(ctx, inner)?.re(ctx),
        Expr::Im(inner) => canonicalize(ctx, inner)?.im(ctx),
    })
}

/// `f^k` for `k < 0`, allowed when `f` is a single monomial of exponentials
/// (or a nonzero constant).
fn invert_power(ctx: &Context, f: &CanonicalForm, k: i32) -> Result<CanonicalForm, ExprError> {
    if f.len() != 1 {
        return Err(if f.is_zero() { ExprError::DivisionByZero } else { ExprError::NegativePower });
    }
    let (m, c) = f.iter().next().unwrap();
    if m.diff != Differential::None {
        return Err(ExprError::NegativePower);
    }
    for (a, _) in &m.factors {
        let exp = ctx.symbol(&a.name).map(|s| s.kind == SymbolKind::Exponential).unwrap_or(false);
        if !exp || a.dx != [0; 3] || a.dt != 0 {
            return Err(ExprError::NegativePower);
        }
    }
    let coeff = c.powi(k).ok_or(ExprError::DivisionByZero)?;
    let factors = m.factors.iter().map(|(a, e)| (a.clone(), e * k)).collect();
    Ok(CanonicalForm::monomial(Monomial { diff: Differential::None, factors }, coeff))
}
