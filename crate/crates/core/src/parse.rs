//! Text front end.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*        division by nonzero constants only
//! unary   := '-' unary | power
//! power   := primary ('^' exponent)?
//! exponent:= INT | '-' INT | '(' '-'? INT ')'
//! primary := NUMBER | 'i' | 'dt' | 'dB' | IDENT | FUNC '(' expr ')' | '(' expr ')'
//! FUNC    := dx1 | dx2 | dx3 | dtau | d | conj | Re | Im
//! ```
//!
//! Numbers are exact: `0.25` is `1/4`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{pow, Zero};

use crate::coeff::Coeff;
use crate::context::Context;
use crate::error::ExprError;
use crate::expr::Expr;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(BigRational),
    Ident(String),
    Op(char),
    End,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn next(&mut self) -> Result<(Tok, usize), ExprError> {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        let Some(&c) = self.src.get(self.pos) else {
            return Ok((Tok::End, start));
        };
        if c.is_ascii_digit() {
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            let int_part = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
            let mut value = BigRational::from_integer(int_part.parse::<BigInt>().unwrap());
            if self.src.get(self.pos) == Some(&b'.') {
                self.pos += 1;
                let fs = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                if fs == self.pos {
                    return Err(ExprError::Syntax { pos: self.pos, msg: "expected digits after '.'".into() });
                }
                let frac = std::str::from_utf8(&self.src[fs..self.pos]).unwrap();
                let den = pow(BigInt::from(10), frac.len());
                value += BigRational::new(frac.parse::<BigInt>().unwrap(), den);
            }
            return Ok((Tok::Num(value), start));
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
                self.pos += 1;
            }
            let s = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
            return Ok((Tok::Ident(s.to_string()), start));
        }
        if b"+-*/^()".contains(&c) {
            self.pos += 1;
            return Ok((Tok::Op(c as char), start));
        }
        let ch = std::str::from_utf8(&self.src[start..]).ok().and_then(|s| s.chars().next()).unwrap_or('?');
        Err(ExprError::Syntax { pos: start, msg: format!("unexpected character '{ch}'") })
    }
}

struct Parser<'a> {
    lex: Lexer<'a>,
    tok: Tok,
    pos: usize,
    ctx: &'a Context,
}

impl<'a> Parser<'a> {
    fn bump(&mut self) -> Result<(), ExprError> {
        let (t, p) = self.lex.next()?;
        self.tok = t;
        self.pos = p;
        Ok(())
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ExprError> {
        Err(ExprError::Syntax { pos: self.pos, msg: msg.into() })
    }

    fn expect(&mut self, c: char) -> Result<(), ExprError> {
        if self.tok == Tok::Op(c) {
            self.bump()
        } else {
            self.err(format!("expected '{c}'"))
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut terms = vec![self.term()?];
        loop {
            match self.tok {
                Tok::Op('+') => {
                    self.bump()?;
                    terms.push(self.term()?);
                }
                Tok::Op('-') => {
                    self.bump()?;
                    terms.push(-self.term()?);
                }
                _ => break,
            }
        }
        Ok(Expr::sum(terms))
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut factors = vec![self.unary()?];
        loop {
            match self.tok {
                Tok::Op('*') => {
                    self.bump()?;
                    factors.push(self.unary()?);
                }
                Tok::Op('/') => {
                    self.bump()?;
                    let at = self.pos;
                    let d = self.unary()?;
                    let c = const_value(&d)
                        .ok_or_else(|| ExprError::Syntax { pos: at, msg: "division only by numeric constants".into() })?;
                    let inv = c.inv().ok_or(ExprError::DivisionByZero)?;
                    factors.push(Expr::Const(inv));
                }
                _ => break,
            }
        }
        // Fold a leading constant pair like `3/4` into one literal.
        if factors.len() == 2 {
            if let (Some(a), Some(b)) = (factors[0].as_const(), factors[1].as_const()) {
                return Ok(Expr::Const(a * b));
            }
        }
        Ok(Expr::product(factors))
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.tok == Tok::Op('-') {
            self.bump()?;
            return Ok(-self.unary()?);
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.primary()?;
        if self.tok != Tok::Op('^') {
            return Ok(base);
        }
        self.bump()?;
        let paren = self.tok == Tok::Op('(');
        if paren {
            self.bump()?;
        }
        let neg = self.tok == Tok::Op('-');
        if neg {
            self.bump()?;
        }
        let k = match &self.tok {
            Tok::Num(q) if q.is_integer() => {
                let v: i64 = q.to_integer().try_into().map_err(|_| ExprError::Syntax {
                    pos: self.pos,
                    msg: "exponent too large".into(),
                })?;
                if v > i32::MAX as i64 {
                    return self.err("exponent too large");
                }
                v as i32
            }
            _ => return self.err("expected integer exponent"),
        };
        self.bump()?;
        if paren {
            self.expect(')')?;
        }
        Ok(base.pow(if neg { -k } else { k }))
    }

    fn primary(&mut self) -> Result<Expr, ExprError> {
        match self.tok.clone() {
            Tok::Num(q) => {
                self.bump()?;
                Ok(Expr::Const(Coeff::real(q)))
            }
            Tok::Op('(') => {
                self.bump()?;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                let at = self.pos;
                self.bump()?;
                if self.tok == Tok::Op('(') {
                    self.bump()?;
                    let arg = self.expr()?;
                    self.expect(')')?;
                    return self.apply(&name, arg, at);
                }
                match name.as_str() {
                    "i" => Ok(Expr::i()),
                    "dt" => Ok(Expr::Dt),
                    "dB" => Ok(Expr::DB),
                    _ => Ok(Expr::Sym(self.ctx.lookup(&name)?)),
                }
            }
            Tok::End => self.err("unexpected end of input"),
            Tok::Op(c) => self.err(format!("unexpected '{c}'")),
        }
    }

    fn apply(&self, name: &str, arg: Expr, at: usize) -> Result<Expr, ExprError> {
        Ok(match name {
            "dtau" => arg.dtau(),
            "d" => arg.d(),
            "conj" => arg.conj(),
            "Re" => arg.re(),
            "Im" => arg.im(),
            _ => {
                if let Some(idx) = name.strip_prefix("dx") {
                    if let Ok(j) = idx.parse::<usize>() {
                        if j == 0 || j > self.ctx.dim() {
                            return Err(ExprError::IndexOutOfRange { name: name.to_string(), index: j, n: self.ctx.dim() });
                        }
                        return Ok(arg.dx(j));
                    }
                }
                return Err(ExprError::Syntax { pos: at, msg: format!("unknown function `{name}`") });
            }
        })
    }
}

fn const_value(e: &Expr) -> Option<Coeff> {
    match e {
        Expr::Const(c) => Some(c.clone()),
        Expr::Mul(v) => {
            let mut acc = Coeff::one();
            for f in v.iter() {
                acc = &acc * &const_value(f)?;
            }
            Some(acc)
        }
        _ => None,
    }
}

/// Parses `text` against the symbols registered in `ctx`.
pub fn parse(ctx: &Context, text: &str) -> Result<Expr, ExprError> {
    let mut p = Parser { lex: Lexer { src: text.as_bytes(), pos: 0 }, tok: Tok::End, pos: 0, ctx };
    p.bump()?;
    let e = p.expr()?;
    if p.tok != Tok::End {
        return p.err("trailing input");
    }
    Ok(e)
}

/// Parses a canonical-form text dump (one term per line) back into a sum.
pub fn parse_lines(ctx: &Context, text: &str) -> Result<Expr, ExprError> {
    let mut terms = Vec::new();
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
        terms.push(parse(ctx, line)?);
    }
    if terms.is_empty() {
        return Ok(Expr::Const(Coeff::real(BigRational::zero())));
    }
    Ok(Expr::sum(terms))
}
