//! Symbol registry for one verification instance.
//!
//! A [`Context`] fixes the spatial dimension and records every symbol the
//! kernel may meet, together with the rewrite data that drives
//! differentiation: semimartingale jets (`d z = P dt + Q dB`), exponential
//! weights defined through their logarithm (`θ = e^ℓ`, so `θ_x = ℓ_x θ`),
//! plain definitions (`ℓ := μφ`), and vanishing scalar products
//! (`a·b0^j = 0`).

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;

use crate::canon::CanonicalForm;
use crate::error::ExprError;
use crate::expr::Expr;

/// Differentiation variable: `X(j)` is `x_j` (1-based), `T` is time.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Var {
    X(u8),
    T,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum SymbolKind {
    ComplexField,
    RealField,
    RealScalar,
    DriftJet,
    DiffusionJet,
    /// A coordinate function `x_j` or `t`.
    Coordinate(Var),
    /// `e^{log}` for a registered logarithm; always real and positive.
    Exponential,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FieldSymbol {
    pub name: String,
    pub kind: SymbolKind,
    pub real: bool,
    pub semimartingale: bool,
    pub depends_x: bool,
    pub depends_t: bool,
}

#[derive(Clone, Debug)]
pub(crate) struct Definition {
    pub expr: Expr,
    pub form: CanonicalForm,
}

#[derive(Clone, Debug, Default)]
pub struct Context {
    n: usize,
    symbols: BTreeMap<Arc<str>, FieldSymbol>,
    aliases: BTreeMap<String, Arc<str>>,
    families: BTreeMap<String, usize>,
    definitions: BTreeMap<Arc<str>, Definition>,
    logs: BTreeMap<Arc<str>, Definition>,
    jets: BTreeMap<Arc<str>, (Arc<str>, Arc<str>)>,
    vanishing: Vec<(Arc<str>, Arc<str>)>,
    apply_vanishing: bool,
}

impl Context {
    /// A context of spatial dimension `n` (0 for time-only problems, at most 3).
    pub fn new(n: usize) -> Self {
        assert!(n <= 3, "dimension must be at most 3");
        Context { n, apply_vanishing: true, ..Default::default() }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn insert(&mut self, sym: FieldSymbol) -> Arc<str> {
        let key: Arc<str> = Arc::from(sym.name.as_str());
        self.symbols.insert(key.clone(), sym);
        key
    }

    fn field(&mut self, name: &str, real: bool) -> Arc<str> {
        self.insert(FieldSymbol {
            name: name.to_string(),
            kind: if real { SymbolKind::RealField } else { SymbolKind::ComplexField },
            real,
            semimartingale: false,
            depends_x: self.n > 0,
            depends_t: true,
        })
    }

    pub fn complex_field(&mut self, name: &str) -> Expr {
        Expr::sym(self.field(name, false))
    }

    pub fn real_field(&mut self, name: &str) -> Expr {
        Expr::sym(self.field(name, true))
    }

    pub fn real_scalar(&mut self, name: &str) -> Expr {
        Expr::sym(self.insert(FieldSymbol {
            name: name.to_string(),
            kind: SymbolKind::RealScalar,
            real: true,
            semimartingale: false,
            depends_x: false,
            depends_t: false,
        }))
    }

    /// Declares a semimartingale field with drift and diffusion jets,
    /// `d name = drift dt + diffusion dB`. The field is not differentiable in t.
    pub fn semimartingale(&mut self, name: &str, drift: &str, diffusion: &str, real: bool) -> Expr {
        let key = self.field(name, real);
        self.symbols.get_mut(&key).unwrap().semimartingale = true;
        let mut jet = |jet_name: &str, kind| {
            self.insert(FieldSymbol {
                name: jet_name.to_string(),
                kind,
                real,
                semimartingale: true,
                depends_x: self.n > 0,
                depends_t: false,
            })
        };
        let p = jet(drift, SymbolKind::DriftJet);
        let q = jet(diffusion, SymbolKind::DiffusionJet);
        self.jets.insert(key.clone(), (p, q));
        Expr::sym(key)
    }

    /// Coordinate function `x_j` (1-based) named `x{j}`.
    pub fn coordinate_x(&mut self, j: usize) -> Expr {
        assert!(j >= 1 && j <= self.n);
        Expr::sym(self.insert(FieldSymbol {
            name: format!("x{j}"),
            kind: SymbolKind::Coordinate(Var::X(j as u8)),
            real: true,
            semimartingale: false,
            depends_x: true,
            depends_t: false,
        }))
    }

    /// Coordinate function `t`.
    pub fn coordinate_t(&mut self) -> Expr {
        Expr::sym(self.insert(FieldSymbol {
            name: "t".to_string(),
            kind: SymbolKind::Coordinate(Var::T),
            real: true,
            semimartingale: false,
            depends_x: false,
            depends_t: true,
        }))
    }

    /// Declares `name = e^{log}`. `log` must be real and deterministic.
    pub fn exponential(&mut self, name: &str, log: Expr) -> Result<Expr, ExprError> {
        let form = crate::canon::canonicalize(self, &log)?;
        if form.has_differentials() {
            return Err(ExprError::Definition(format!("logarithm of `{name}` contains a differential")));
        }
        let key = self.insert(FieldSymbol {
            name: name.to_string(),
            kind: SymbolKind::Exponential,
            real: true,
            semimartingale: false,
            depends_x: self.n > 0,
            depends_t: true,
        });
        self.logs.insert(key.clone(), Definition { expr: log, form });
        Ok(Expr::sym(key))
    }

    /// Symmetric coefficient family `a^{jk}`, stored as `a11, a12, ..` with
    /// `a21` aliased to `a12`.
    pub fn symmetric_family(&mut self, prefix: &str) {
        for j in 1..=self.n {
            for k in j..=self.n {
                let key = self.field(&format!("{prefix}{j}{k}"), true);
                if j != k {
                    self.aliases.insert(format!("{prefix}{k}{j}"), key);
                }
            }
        }
        self.families.insert(prefix.to_string(), 2);
    }

    /// Real scalar vector `b0^j`, stored as `b01 .. b0n`.
    pub fn scalar_vector(&mut self, prefix: &str) {
        for j in 1..=self.n {
            self.real_scalar(&format!("{prefix}{j}"));
        }
        self.families.insert(prefix.to_string(), 1);
    }

    /// Restricts which variables a field depends on.
    pub fn set_dependence(&mut self, name: &str, depends_x: bool, depends_t: bool) {
        let sym = self.symbols.get_mut(name).unwrap_or_else(|| panic!("unknown symbol {name}"));
        sym.depends_x = depends_x && self.n > 0;
        sym.depends_t = depends_t;
    }

    /// Replaces every occurrence of `name` by `value`. The symbol must be
    /// declared; definitions may refer to earlier definitions.
    pub fn define(&mut self, name: &str, value: Expr) -> Result<(), ExprError> {
        let key = self
            .symbols
            .get_key_value(name)
            .map(|(k, _)| k.clone())
            .ok_or_else(|| ExprError::UnknownSymbol(name.to_string()))?;
        let form = crate::canon::canonicalize(self, &value)?;
        if form.mentions(&key) {
            return Err(ExprError::Definition(format!("`{name}` is defined in terms of itself")));
        }
        self.definitions.insert(key.clone(), Definition { expr: value, form });
        // earlier forms that mention the new definition are now stale
        let stale: Vec<_> = self.definitions.iter().filter(|(_, d)| d.form.mentions(&key)).map(|(k, _)| k.clone()).collect();
        for k in stale {
            let form = crate::canon::canonicalize(self, &self.definitions[&k].expr)?;
            self.definitions.get_mut(&k).unwrap().form = form;
        }
        let stale: Vec<_> = self.logs.iter().filter(|(_, d)| d.form.mentions(&key)).map(|(k, _)| k.clone()).collect();
        for k in stale {
            let form = crate::canon::canonicalize(self, &self.logs[&k].expr)?;
            self.logs.get_mut(&k).unwrap().form = form;
        }
        Ok(())
    }

    /// Registers the rewrite `lhs·rhs = 0` for two real scalars.
    pub fn vanishing_product(&mut self, lhs: &str, rhs: &str) {
        let l = self.key(lhs).expect("unknown symbol");
        let r = self.key(rhs).expect("unknown symbol");
        self.vanishing.push((l, r));
    }

    /// Turns the vanishing-product rewrites on or off.
    pub fn set_apply_vanishing(&mut self, on: bool) {
        self.apply_vanishing = on;
    }

    pub(crate) fn vanishing_pairs(&self) -> &[(Arc<str>, Arc<str>)] {
        if self.apply_vanishing {
            &self.vanishing
        } else {
            &[]
        }
    }

    pub fn vanishing_products(&self) -> Vec<(String, String)> {
        self.vanishing.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
    }

    fn key(&self, name: &str) -> Option<Arc<str>> {
        self.symbols.get_key_value(name).map(|(k, _)| k.clone())
    }

    /// Resolves a (possibly aliased) name to its interned key.
    pub fn lookup(&self, name: &str) -> Result<Arc<str>, ExprError> {
        if let Some(k) = self.key(name) {
            return Ok(k);
        }
        if let Some(k) = self.aliases.get(name) {
            return Ok(k.clone());
        }
        for (prefix, arity) in &self.families {
            if let Some(rest) = name.strip_prefix(prefix.as_str()) {
                if rest.len() == *arity && rest.chars().all(|c| c.is_ascii_digit()) {
                    for c in rest.chars() {
                        let index = c.to_digit(10).unwrap() as usize;
                        if index == 0 || index > self.n {
                            return Err(ExprError::IndexOutOfRange { name: name.to_string(), index, n: self.n });
                        }
                    }
                }
            }
        }
        Err(ExprError::UnknownSymbol(name.to_string()))
    }

    pub fn symbol(&self, name: &str) -> Option<&FieldSymbol> {
        self.symbols.get(name)
    }

    pub fn symbols(&self) -> impl Iterator<Item = &FieldSymbol> {
        self.symbols.values()
    }

    pub fn is_real(&self, name: &str) -> bool {
        self.symbols.get(name).map(|s| s.real).unwrap_or(false)
    }

    pub fn is_defined(&self, name: &str) -> bool {
        self.definitions.contains_key(name)
    }

    pub(crate) fn definition(&self, name: &str) -> Option<&Definition> {
        self.definitions.get(name)
    }

    pub(crate) fn log_of(&self, name: &str) -> Option<&Definition> {
        self.logs.get(name)
    }

    pub fn definition_expr(&self, name: &str) -> Option<&Expr> {
        self.definitions.get(name).map(|d| &d.expr)
    }

    pub fn log_expr(&self, name: &str) -> Option<&Expr> {
        self.logs.get(name).map(|d| &d.expr)
    }

    pub fn jets_of(&self, name: &str) -> Option<(&Arc<str>, &Arc<str>)> {
        self.jets.get(name).map(|(p, q)| (p, q))
    }

    /// Symbol by name, as an expression. Panics on unknown names; intended
    /// for builders that declared the symbol themselves.
    pub fn get(&self, name: &str) -> Expr {
        Expr::sym(self.lookup(name).unwrap_or_else(|e| panic!("{e}")))
    }
}
