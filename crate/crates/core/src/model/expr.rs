//! Coefficient expressions in one variable `t`.
//!
//! Grammar (whitespace is ignored between tokens):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor ('*' factor)*
//! factor := number | 't' | fn '(' expr ')' | '(' expr ')' | '-' factor
//! fn     := sin | cos | exp
//! ```
//!
//! There is no division and no logarithm, so evaluation is total for every
//! finite `t`.

use std::fmt;

use thiserror::Error;

use crate::scalar::Real;

/// Parsed expression tree over the variable `t`.
#[derive(Debug, Clone, PartialEq)]
pub enum CoefficientExpr<T> {
    Const(T),
    Var,
    Add(Box<Self>, Box<Self>),
    Sub(Box<Self>, Box<Self>),
    Mul(Box<Self>, Box<Self>),
    Neg(Box<Self>),
    Sin(Box<Self>),
    Cos(Box<Self>),
    Exp(Box<Self>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("unexpected character '{0}'")]
    UnexpectedChar(char),
    #[error("unexpected end of input")]
    UnexpectedEnd,
    #[error("unknown function '{0}'")]
    UnknownFunction(String),
    #[error("malformed number '{0}'")]
    BadNumber(String),
    #[error("expected '{0}'")]
    Expected(char),
    #[error("trailing input")]
    Trailing,
}

/// Syntax error with the byte offset where it was detected.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind} at position {pos}")]
pub struct ParseError {
    pub pos: usize,
    pub kind: ParseErrorKind,
}

/// Shape of an expression, used to decide whether sampled extrema are exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Shape {
    Constant,
    /// Affine combination of `1`, `t`, `sin t`, `cos t`.
    SinusoidAffine,
}

impl<T: Real> CoefficientExpr<T> {
    pub fn constant(c: T) -> Self {
        CoefficientExpr::Const(c)
    }

    pub fn var() -> Self {
        CoefficientExpr::Var
    }

    pub fn eval(&self, t: T) -> T {
        use CoefficientExpr::*;
        match self {
            Const(c) => *c,
            Var => t,
            Add(l, r) => l.eval(t) + r.eval(t),
            Sub(l, r) => l.eval(t) - r.eval(t),
            Mul(l, r) => l.eval(t) * r.eval(t),
            Neg(e) => -e.eval(t),
            Sin(e) => e.eval(t).sin(),
            Cos(e) => e.eval(t).cos(),
            Exp(e) => e.eval(t).exp(),
        }
    }

    /// True when the tree contains no `t`.
    pub fn is_constant(&self) -> bool {
        matches!(self.shape(), Some(Shape::Constant))
    }

    /// True for constants and affine combinations of `t`, `sin t`, `cos t`.
    /// Dense sampling of such functions lands on (or within rounding of)
    /// their extrema, so no outward inflation of sampled bounds is needed.
    pub fn is_sinusoid_affine(&self) -> bool {
        self.shape().is_some()
    }

    fn shape(&self) -> Option<Shape> {
        use CoefficientExpr::*;
        match self {
            Const(_) => Some(Shape::Constant),
            Var => Some(Shape::SinusoidAffine),
            Add(l, r) | Sub(l, r) => Some(l.shape()?.max(r.shape()?)),
            Mul(l, r) => match (l.shape()?, r.shape()?) {
                (Shape::Constant, s) | (s, Shape::Constant) => Some(s),
                _ => None,
            },
            Neg(e) => e.shape(),
            Sin(e) | Cos(e) => match **e {
                Var => Some(Shape::SinusoidAffine),
                _ if e.is_constant() => Some(Shape::Constant),
                _ => None,
            },
            Exp(e) if e.is_constant() => Some(Shape::Constant),
            Exp(_) => None,
        }
    }
}

/// Prints fully parenthesised so that re-parsing reproduces the same tree
/// (negative constants come back as `Neg(Const)`, which evaluates identically).
impl<T: Real> fmt::Display for CoefficientExpr<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use CoefficientExpr::*;
        match self {
            Const(c) if *c < T::zero() => write!(f, "(-{})", -*c),
            Const(c) => write!(f, "{}", c),
            Var => f.write_str("t"),
            Add(l, r) => write!(f, "({} + {})", l, r),
            Sub(l, r) => write!(f, "({} - {})", l, r),
            Mul(l, r) => write!(f, "({} * {})", l, r),
            Neg(e) => write!(f, "(-{})", e),
            Sin(e) => write!(f, "sin({})", e),
            Cos(e) => write!(f, "cos({})", e),
            Exp(e) => write!(f, "exp({})", e),
        }
    }
}

impl<T: Real> std::str::FromStr for CoefficientExpr<T> {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_expr(s)
    }
}

/// Parses `text` with the recursive-descent grammar in the module docs.
pub fn parse_expr<T: Real>(text: &str) -> Result<CoefficientExpr<T>, ParseError> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.err(ParseErrorKind::Trailing));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, kind: ParseErrorKind) -> ParseError {
        ParseError {
            pos: self.pos,
            kind,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        match self.peek() {
            Some(x) if x == c => {
                self.pos += 1;
                Ok(())
            }
            Some(_) => Err(self.err(ParseErrorKind::Expected(c as char))),
            None => Err(self.err(ParseErrorKind::UnexpectedEnd)),
        }
    }

    fn expr<T: Real>(&mut self) -> Result<CoefficientExpr<T>, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    lhs = CoefficientExpr::Add(Box::new(lhs), Box::new(rhs));
                }
                Some(b'-') => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    lhs = CoefficientExpr::Sub(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term<T: Real>(&mut self) -> Result<CoefficientExpr<T>, ParseError> {
        let mut lhs = self.factor()?;
        while self.peek() == Some(b'*') {
            self.pos += 1;
            let rhs = self.factor()?;
            lhs = CoefficientExpr::Mul(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn factor<T: Real>(&mut self) -> Result<CoefficientExpr<T>, ParseError> {
        match self.peek() {
            None => Err(self.err(ParseErrorKind::UnexpectedEnd)),
            Some(b'-') => {
                self.pos += 1;
                Ok(CoefficientExpr::Neg(Box::new(self.factor()?)))
            }
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.ident(),
            Some(c) => Err(self.err(ParseErrorKind::UnexpectedChar(c as char))),
        }
    }

    fn number<T: Real>(&mut self) -> Result<CoefficientExpr<T>, ParseError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
        };
        digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            digits(self);
        }
        // An exponent only when a digit follows, so "2e" never swallows "exp".
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let mut k = self.pos + 1;
            if matches!(self.src.get(k), Some(b'+' | b'-')) {
                k += 1;
            }
            if self.src.get(k).is_some_and(|c| c.is_ascii_digit()) {
                self.pos = k;
                digits(self);
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii slice");
        let value: f64 = text.parse().map_err(|_| ParseError {
            pos: start,
            kind: ParseErrorKind::BadNumber(text.to_string()),
        })?;
        match T::from_f64(value) {
            Some(v) if v.is_finite() => Ok(CoefficientExpr::Const(v)),
            _ => Err(ParseError {
                pos: start,
                kind: ParseErrorKind::BadNumber(text.to_string()),
            }),
        }
    }

    fn ident<T: Real>(&mut self) -> Result<CoefficientExpr<T>, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii slice");
        if name == "t" {
            return Ok(CoefficientExpr::Var);
        }
        let wrap: fn(Box<CoefficientExpr<T>>) -> CoefficientExpr<T> = match name {
            "sin" => CoefficientExpr::Sin,
            "cos" => CoefficientExpr::Cos,
            "exp" => CoefficientExpr::Exp,
            _ => {
                return Err(ParseError {
                    pos: start,
                    kind: ParseErrorKind::UnknownFunction(name.to_string()),
                })
            }
        };
        self.expect(b'(')?;
        let arg = self.expr()?;
        self.expect(b')')?;
        Ok(wrap(Box::new(arg)))
    }
}
