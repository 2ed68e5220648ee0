//! Arithmetic expressions over `x[i]`, `y[i]` (1-based) and `r`.
//!
//! Only smooth primitives are available; there is no `abs`.

use crate::error::{FinslerError, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    X(usize),
    Y(usize),
    R,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    PowI(Box<Expr>, i32),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sqrt,
    Sin,
    Cos,
    Sinh,
    Cosh,
    Exp,
    Log,
}

impl Func {
    fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "sqrt" => Func::Sqrt,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "exp" => Func::Exp,
            "log" | "ln" => Func::Log,
            _ => return None,
        })
    }

    fn apply<T: Scalar>(self, v: T) -> T {
        match self {
            Func::Sqrt => v.sqrt(),
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Sinh => v.sinh(),
            Func::Cosh => v.cosh(),
            Func::Exp => v.exp(),
            Func::Log => v.ln(),
        }
    }
}

/// Variable bindings for evaluation.
pub struct Vars<'a, T> {
    pub x: &'a [T],
    pub y: &'a [T],
    pub r: T,
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        let mut p = Parser {
            chars: src.chars().collect(),
            pos: 0,
        };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos < p.chars.len() {
            return Err(p.err("unexpected trailing input"));
        }
        Ok(e)
    }

    pub fn eval<T: Scalar>(&self, v: &Vars<'_, T>) -> T {
        match self {
            Expr::Num(a) => T::cst(*a),
            Expr::X(i) => v.x.get(*i).copied().unwrap_or_else(T::nan),
            Expr::Y(i) => v.y.get(*i).copied().unwrap_or_else(T::nan),
            Expr::R => v.r,
            Expr::Neg(a) => -a.eval(v),
            Expr::Add(a, b) => a.eval(v) + b.eval(v),
            Expr::Sub(a, b) => a.eval(v) - b.eval(v),
            Expr::Mul(a, b) => a.eval(v) * b.eval(v),
            Expr::Div(a, b) => a.eval(v) / b.eval(v),
            Expr::PowI(a, k) => a.eval(v).powi(*k),
            Expr::Pow(a, b) => a.eval(v).powf(b.eval(v)),
            Expr::Call(f, a) => f.apply(a.eval(v)),
        }
    }

    /// Evaluate an expression in `r` only.
    pub fn eval_r<T: Scalar>(&self, r: T) -> T {
        self.eval(&Vars { x: &[], y: &[], r })
    }

    /// Largest 0-based index referenced by `x[..]` or `y[..]`, if any.
    pub fn max_index(&self) -> Option<usize> {
        match self {
            Expr::X(i) | Expr::Y(i) => Some(*i),
            Expr::Num(_) | Expr::R => None,
            Expr::Neg(a) | Expr::PowI(a, _) | Expr::Call(_, a) => a.max_index(),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b) => a.max_index().max(b.max_index()),
        }
    }

    pub fn uses_xy(&self) -> bool {
        self.max_index().is_some()
    }
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
}

impl Parser {
    fn err(&self, msg: &str) -> FinslerError {
        FinslerError::Parse {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn is_minus(c: char) -> bool {
        c == '-' || c == '−'
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some('+') => {
                    self.pos += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(c) if Self::is_minus(c) => {
                    self.pos += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some('*') => {
                    self.pos += 1;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Some('/') => {
                    self.pos += 1;
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(c) if Self::is_minus(c) => {
                self.pos += 1;
                Ok(Expr::Neg(Box::new(self.unary()?)))
            }
            Some('+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.eat('^') {
            let exp = self.unary()?;
            if let Expr::Num(k) = exp {
                if k.fract() == 0.0 && k.abs() <= 64.0 {
                    return Ok(Expr::PowI(Box::new(base), k as i32));
                }
            }
            if let Expr::Neg(inner) = &exp {
                if let Expr::Num(k) = **inner {
                    if k.fract() == 0.0 && k <= 64.0 {
                        return Ok(Expr::PowI(Box::new(base), -(k as i32)));
                    }
                }
            }
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(')') {
                    return Err(self.err("expected ')'"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_alphanumeric() {
                    self.pos += 1;
                }
                let name: String = self.chars[start..self.pos].iter().collect();
                match name.as_str() {
                    "pi" => Ok(Expr::Num(std::f64::consts::PI)),
                    "r" => Ok(Expr::R),
                    "x" | "y" => {
                        if !self.eat('[') {
                            return Err(self.err("expected '[' after variable"));
                        }
                        let idx = match self.number()? {
                            Expr::Num(k) if k >= 1.0 && k.fract() == 0.0 => k as usize - 1,
                            _ => return Err(self.err("index must be a positive integer")),
                        };
                        if !self.eat(']') {
                            return Err(self.err("expected ']'"));
                        }
                        Ok(if name == "x" {
                            Expr::X(idx)
                        } else {
                            Expr::Y(idx)
                        })
                    }
                    _ => {
                        let f = Func::from_name(&name).ok_or_else(|| FinslerError::Parse {
                            pos: start,
                            msg: format!("unknown identifier '{name}'"),
                        })?;
                        if !self.eat('(') {
                            return Err(self.err("expected '(' after function name"));
                        }
                        let arg = self.expr()?;
                        if !self.eat(')') {
                            return Err(self.err("expected ')'"));
                        }
                        Ok(Expr::Call(f, Box::new(arg)))
                    }
                }
            }
            Some(_) => Err(self.err("unexpected character")),
            None => Err(self.err("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        self.skip_ws();
        let start = self.pos;
        let c = &self.chars;
        let mut i = self.pos;
        while i < c.len() && (c[i].is_ascii_digit() || c[i] == '.') {
            i += 1;
        }
        if i < c.len() && (c[i] == 'e' || c[i] == 'E') {
            let mut j = i + 1;
            if j < c.len() && (c[j] == '+' || c[j] == '-') {
                j += 1;
            }
            if j < c.len() && c[j].is_ascii_digit() {
                while j < c.len() && c[j].is_ascii_digit() {
                    j += 1;
                }
                i = j;
            }
        }
        let s: String = c[start..i].iter().collect();
        self.pos = i;
        s.parse::<f64>()
            .map(Expr::Num)
            .map_err(|_| FinslerError::Parse {
                pos: start,
                msg: format!("bad number '{s}'"),
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dual::Dual;

    fn ev(src: &str, x: &[f64], y: &[f64], r: f64) -> f64 {
        Expr::parse(src).unwrap().eval(&Vars { x, y, r })
    }

    #[test]
    fn precedence_and_variables() {
        assert_eq!(ev("1 + 2*3^2", &[], &[], 0.0), 19.0);
        assert_eq!(ev("-2^2", &[], &[], 0.0), -4.0);
        assert_eq!(ev("x[1]*y[2] - x[2]", &[2.0, 5.0], &[0.0, 3.0], 0.0), 1.0);
        assert!((ev("0.5*r/(1+r)", &[], &[], 1.0) - 0.25).abs() < 1e-15);
        assert!((ev("sqrt(y[1]^2+y[2]^2)", &[], &[3.0, 4.0], 0.0) - 5.0).abs() < 1e-15);
        assert!((ev("2.5e-1 + cos(pi)", &[], &[], 0.0) + 0.75).abs() < 1e-15);
        assert!((ev("r^0.5", &[], &[], 4.0) - 2.0).abs() < 1e-15);
        assert!((ev("r^-2", &[], &[], 2.0) - 0.25).abs() < 1e-15);
        assert_eq!(ev("3 − 1", &[], &[], 0.0), 2.0);
    }

    #[test]
    fn generic_evaluation_differentiates() {
        let e = Expr::parse("sinh(r)*exp(r)").unwrap();
        let d = e.eval_r(Dual::variable(0.3_f64));
        let want = 0.3f64.cosh() * 0.3f64.exp() + 0.3f64.sinh() * 0.3f64.exp();
        assert!((d.eps - want).abs() < 1e-14);
    }

    #[test]
    fn rejects_malformed() {
        for src in ["", "1 +", "abs(x[1])", "x[0]", "(1", "y1", "2 3"] {
            assert!(Expr::parse(src).is_err(), "{src}");
        }
    }
}
