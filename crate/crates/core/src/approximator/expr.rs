//! Complex-valued expression language for coefficient generators and fit
//! targets.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := ('-' | '+') unary | power
//! power   := atom ('^' unary)?
//! atom    := number ['i'] | 'i' | name | name '(' expr ')' | '(' expr ')'
//! ```
//!
//! Names: `t1`, `t2`, ... (parameters, `t` is `t1`), `z` (the complex
//! variable, fit targets only), `pi`, `e`. Functions: `sin`, `cos`, `exp`.
//! Integer exponents use repeated multiplication; others go through the
//! principal branch.

use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message} at column {column}")]
pub struct ParseError {
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        match name {
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "exp" => Some(Func::Exp),
            _ => None,
        }
    }

    fn apply(self, v: Complex64) -> Complex64 {
        match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Exp => v.exp(),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(Complex64),
    /// Zero-based parameter index.
    Param(usize),
    Z,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr, ParseError> {
        let mut p = Parser { src: src.as_bytes(), pos: 0 };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(e)
    }

    /// Evaluates with parameter vector `t` and variable `z`.
    ///
    /// # Panics
    /// If a referenced parameter index is out of range; check
    /// [`Expr::param_count`] first.
    pub fn eval(&self, t: &[f64], z: Complex64) -> Complex64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Param(k) => Complex64::new(t[*k], 0.0),
            Expr::Z => z,
            Expr::Neg(a) => -a.eval(t, z),
            Expr::Add(a, b) => a.eval(t, z) + b.eval(t, z),
            Expr::Sub(a, b) => a.eval(t, z) - b.eval(t, z),
            Expr::Mul(a, b) => a.eval(t, z) * b.eval(t, z),
            Expr::Div(a, b) => a.eval(t, z) / b.eval(t, z),
            Expr::Pow(a, b) => {
                let base = a.eval(t, z);
                let exp = b.eval(t, z);
                if exp.im == 0.0 && exp.re.fract() == 0.0 && exp.re.abs() <= i32::MAX as f64 {
                    base.powi(exp.re as i32)
                } else {
                    base.powc(exp)
                }
            }
            Expr::Call(f, a) => f.apply(a.eval(t, z)),
        }
    }

    /// Highest parameter index used plus one.
    pub fn param_count(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Z => 0,
            Expr::Param(k) => k + 1,
            Expr::Neg(a) | Expr::Call(_, a) => a.param_count(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.param_count().max(b.param_count())
            }
        }
    }

    pub fn uses_z(&self) -> bool {
        match self {
            Expr::Z => true,
            Expr::Const(_) | Expr::Param(_) => false,
            Expr::Neg(a) | Expr::Call(_, a) => a.uses_z(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.uses_z() || b.uses_z()
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) if c.im == 0.0 => write!(f, "{}", c.re),
            Expr::Const(c) => write!(f, "({}{:+}i)", c.re, c.im),
            Expr::Param(k) => write!(f, "t{}", k + 1),
            Expr::Z => f.write_str("z"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, b) => write!(f, "({a} ^ {b})"),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: &str) -> ParseError {
        ParseError { column: self.pos + 1, message: message.to_string() }
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

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(b'-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(b'*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat(b'/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat(b'-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat(b'+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.eat(b'^') {
            // right associative; binds tighter than a leading minus on the base
            return Ok(Expr::Pow(Box::new(base), Box::new(self.unary()?)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            None => Err(self.error("unexpected end of expression")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.error("expected ')'"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.name(),
            Some(c) => Err(self.error(&format!("unexpected character '{}'", c as char))),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let s = self.src;
        while self.pos < s.len() && (s[self.pos].is_ascii_digit() || s[self.pos] == b'.') {
            self.pos += 1;
        }
        if self.pos < s.len() && (s[self.pos] == b'e' || s[self.pos] == b'E') {
            // exponent only if digits follow, so `2e` is not swallowed
            let mut k = self.pos + 1;
            if k < s.len() && (s[k] == b'+' || s[k] == b'-') {
                k += 1;
            }
            if k < s.len() && s[k].is_ascii_digit() {
                while k < s.len() && s[k].is_ascii_digit() {
                    k += 1;
                }
                self.pos = k;
            }
        }
        let text = std::str::from_utf8(&s[start..self.pos]).expect("ascii");
        let v: f64 =
            text.parse().map_err(|_| ParseError { column: start + 1, message: format!("bad number '{text}'") })?;
        // imaginary literal: a trailing `i` not starting a longer name
        if self.pos < s.len() && s[self.pos] == b'i' && !s.get(self.pos + 1).is_some_and(|c| c.is_ascii_alphanumeric())
        {
            self.pos += 1;
            return Ok(Expr::Const(Complex64::new(0.0, v)));
        }
        Ok(Expr::Const(Complex64::new(v, 0.0)))
    }

    fn name(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        let unknown = || ParseError { column: start + 1, message: format!("unknown name '{name}'") };
        if let Some(func) = Func::from_name(name) {
            if !self.eat(b'(') {
                return Err(self.error(&format!("expected '(' after {name}")));
            }
            let arg = self.expr()?;
            if !self.eat(b')') {
                return Err(self.error("expected ')'"));
            }
            return Ok(Expr::Call(func, Box::new(arg)));
        }
        match name {
            "i" => Ok(Expr::Const(Complex64::new(0.0, 1.0))),
            "z" => Ok(Expr::Z),
            "t" => Ok(Expr::Param(0)),
            "pi" => Ok(Expr::Const(Complex64::new(std::f64::consts::PI, 0.0))),
            "e" => Ok(Expr::Const(Complex64::new(std::f64::consts::E, 0.0))),
            _ => match name.strip_prefix('t').map(str::parse::<usize>) {
                Some(Ok(k)) if k >= 1 => Ok(Expr::Param(k - 1)),
                _ => Err(unknown()),
            },
        }
    }
}
