//! Expression trees.
//!
//! Trees are cheap to clone (children are reference counted), so builders can
//! reuse subexpressions freely. Printing emits the text grammar accepted by
//! [`crate::parse`].

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_traits::{One, Signed};

use crate::coeff::Coeff;

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(Coeff),
    Sym(Arc<str>),
    Add(Arc<[Expr]>),
    Mul(Arc<[Expr]>),
    Pow(Arc<Expr>, i32),
    /// `∂/∂x_j`, j is 1-based.
    Dx(u8, Arc<Expr>),
    /// `∂/∂t`.
    Dtau(Arc<Expr>),
    /// Itô differential `d(·)`.
    Ito(Arc<Expr>),
    Conj(Arc<Expr>),
    Re(Arc<Expr>),
    Im(Arc<Expr>),
    Dt,
    DB,
}

impl Expr {
    pub fn sym(name: Arc<str>) -> Expr {
        Expr::Sym(name)
    }

    pub fn int(n: i64) -> Expr {
        Expr::Const(Coeff::from_int(n))
    }

    pub fn ratio(num: i64, den: i64) -> Expr {
        Expr::Const(Coeff::from_ratio(num, den))
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn i() -> Expr {
        Expr::Const(Coeff::i())
    }

    pub fn dt() -> Expr {
        Expr::Dt
    }

    pub fn db() -> Expr {
        Expr::DB
    }

    pub fn sum<I: IntoIterator<Item = Expr>>(terms: I) -> Expr {
        let v: Vec<Expr> = terms.into_iter().collect();
        match v.len() {
            0 => Expr::zero(),
            1 => v.into_iter().next().unwrap(),
            _ => Expr::Add(v.into()),
        }
    }

    pub fn product<I: IntoIterator<Item = Expr>>(factors: I) -> Expr {
        let v: Vec<Expr> = factors.into_iter().collect();
        match v.len() {
            0 => Expr::one(),
            1 => v.into_iter().next().unwrap(),
            _ => Expr::Mul(v.into()),
        }
    }

    pub fn pow(&self, k: i32) -> Expr {
        Expr::Pow(Arc::new(self.clone()), k)
    }

    pub fn dx(&self, j: usize) -> Expr {
        Expr::Dx(j as u8, Arc::new(self.clone()))
    }

    pub fn dtau(&self) -> Expr {
        Expr::Dtau(Arc::new(self.clone()))
    }

    pub fn d(&self) -> Expr {
        Expr::Ito(Arc::new(self.clone()))
    }

    pub fn conj(&self) -> Expr {
        Expr::Conj(Arc::new(self.clone()))
    }

    pub fn re(&self) -> Expr {
        Expr::Re(Arc::new(self.clone()))
    }

    pub fn im(&self) -> Expr {
        Expr::Im(Arc::new(self.clone()))
    }

    pub fn scale(&self, c: Coeff) -> Expr {
        Expr::product([Expr::Const(c), self.clone()])
    }

    pub fn as_const(&self) -> Option<&Coeff> {
        match self {
            Expr::Const(c) => Some(c),
            _ => None,
        }
    }

    /// Number of nodes, for diagnostics.
    pub fn size(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Sym(_) | Expr::Dt | Expr::DB => 1,
            Expr::Add(v) | Expr::Mul(v) => 1 + v.iter().map(Expr::size).sum::<usize>(),
            Expr::Pow(e, _)
            | Expr::Dx(_, e)
            | Expr::Dtau(e)
            | Expr::Ito(e)
            | Expr::Conj(e)
            | Expr::Re(e)
            | Expr::Im(e) => 1 + e.size(),
        }
    }

    // Printing precedence: sums 1, products 2, powers 4, atoms 5.
    fn prec(&self) -> u8 {
        match self {
            Expr::Add(_) => 1,
            Expr::Mul(_) => 2,
            Expr::Pow(..) => 4,
            Expr::Const(c) => {
                if c.is_real() {
                    if c.re.is_negative() || !c.re.denom().is_one() {
                        2
                    } else {
                        5
                    }
                } else if c.re == num_rational::BigRational::from_integer(0.into()) {
                    // `i`, `-i`, `3*i`
                    if c.im.is_one() {
                        5
                    } else {
                        2
                    }
                } else {
                    5
                }
            }
            _ => 5,
        }
    }

    fn fmt_child(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.prec() < min {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Sym(s) => write!(f, "{s}"),
            Expr::Dt => write!(f, "dt"),
            Expr::DB => write!(f, "dB"),
            Expr::Add(v) => {
                for (k, t) in v.iter().enumerate() {
                    if k > 0 {
                        write!(f, " + ")?;
                    }
                    t.fmt_child(f, 2)?;
                }
                Ok(())
            }
            Expr::Mul(v) => {
                for (k, t) in v.iter().enumerate() {
                    if k > 0 {
                        write!(f, "*")?;
                    }
                    t.fmt_child(f, 3)?;
                }
                Ok(())
            }
            Expr::Pow(b, k) => {
                b.fmt_child(f, 5)?;
                if *k < 0 {
                    write!(f, "^(-{})", k.unsigned_abs())
                } else {
                    write!(f, "^{k}")
                }
            }
            Expr::Dx(j, e) => write!(f, "dx{j}({e})"),
            Expr::Dtau(e) => write!(f, "dtau({e})"),
            Expr::Ito(e) => write!(f, "d({e})"),
            Expr::Conj(e) => write!(f, "conj({e})"),
            Expr::Re(e) => write!(f, "Re({e})"),
            Expr::Im(e) => write!(f, "Im({e})"),
        }
    }
}

impl Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        let mut v: Vec<Expr> = match self {
            Expr::Add(a) => a.to_vec(),
            e => vec![e],
        };
        match rhs {
            Expr::Add(b) => v.extend(b.iter().cloned()),
            e => v.push(e),
        }
        Expr::sum(v)
    }
}

impl Add for &Expr {
    type Output = Expr;
    fn add(self, rhs: &Expr) -> Expr {
        self.clone() + rhs.clone()
    }
}

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        match self {
            Expr::Const(c) => Expr::Const(-c),
            e => Expr::product([Expr::int(-1), e]),
        }
    }
}

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -self.clone()
    }
}

impl Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        self + (-rhs)
    }
}

impl Sub for &Expr {
    type Output = Expr;
    fn sub(self, rhs: &Expr) -> Expr {
        self.clone() - rhs.clone()
    }
}

impl Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        let mut v: Vec<Expr> = match self {
            Expr::Mul(a) => a.to_vec(),
            e => vec![e],
        };
        match rhs {
            Expr::Mul(b) => v.extend(b.iter().cloned()),
            e => v.push(e),
        }
        Expr::product(v)
    }
}

impl Mul for &Expr {
    type Output = Expr;
    fn mul(self, rhs: &Expr) -> Expr {
        self.clone() * rhs.clone()
    }
}

impl Mul<Expr> for i64 {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::int(self) * rhs
    }
}

impl Mul<&Expr> for i64 {
    type Output = Expr;
    fn mul(self, rhs: &Expr) -> Expr {
        Expr::int(self) * rhs.clone()
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Self {
        Expr::int(n)
    }
}
