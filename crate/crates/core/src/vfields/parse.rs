//! Text form of expressions and vector fields.
//!
//! Grammar (whitespace is insignificant):
//!
//! ```text
//! field  := expr (';' expr)*
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' exponent)?
//! exponent := ['-'] integer | '(' ['-'] integer ')'
//! atom   := number | ident | ident '(' expr ')' | '(' expr ')'
//! ```
//!
//! Division by `u` is stored as `u^(-1)` (or `b^(-k)` when `u = b^k`), and
//! `a - b` as `a + (-b)`. The printer emits the same forms, so printing a
//! parsed canonical string reproduces it.

use std::fmt;

use super::expr::{Expr, Func, Node};
use crate::error::{Error, Result};

pub fn parse_expr(text: &str, variables: &[String]) -> Result<Expr> {
    let mut p = Parser::new(text, variables);
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    vars: &'a [String],
}

impl<'a> Parser<'a> {
    fn new(text: &'a str, vars: &'a [String]) -> Self {
        Self {
            src: text.as_bytes(),
            pos: 0,
            vars,
        }
    }

    fn error(&self, message: &str) -> Error {
        Error::Parse {
            position: self.pos,
            message: message.to_string(),
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

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(&format!("expected `{}`", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut terms = vec![self.term()?];
        loop {
            if self.eat(b'+') {
                terms.push(self.term()?);
            } else if self.eat(b'-') {
                let t = self.term()?;
                terms.push(negate(t));
            } else {
                break;
            }
        }
        Ok(if terms.len() == 1 {
            terms.pop().expect("one term")
        } else {
            Expr::raw(Node::Add(terms))
        })
    }

    fn term(&mut self) -> Result<Expr> {
        let mut factors = vec![self.unary()?];
        loop {
            if self.eat(b'*') {
                factors.push(self.unary()?);
            } else if self.eat(b'/') {
                let d = self.unary()?;
                factors.push(reciprocal(d));
            } else {
                break;
            }
        }
        Ok(if factors.len() == 1 {
            factors.pop().expect("one factor")
        } else {
            Expr::raw(Node::Mul(factors))
        })
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat(b'-') {
            let inner = self.unary()?;
            Ok(negate(inner))
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.eat(b'^') {
            let k = self.exponent()?;
            Ok(Expr::raw(Node::Pow(base, k)))
        } else {
            Ok(base)
        }
    }

    fn exponent(&mut self) -> Result<i32> {
        let paren = self.eat(b'(');
        let negative = self.eat(b'-');
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected integer exponent"));
        }
        let digits = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
        let k: i32 = digits.parse().map_err(|_| self.error("exponent out of range"))?;
        if paren {
            self.expect(b')')?;
        }
        Ok(if negative { -k } else { k })
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            Some(_) => Err(self.error("unexpected character")),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let s = self.src;
        while self.pos < s.len() && (s[self.pos].is_ascii_digit() || s[self.pos] == b'.') {
            self.pos += 1;
        }
        if self.pos < s.len() && (s[self.pos] == b'e' || s[self.pos] == b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < s.len() && (s[self.pos] == b'+' || s[self.pos] == b'-') {
                self.pos += 1;
            }
            let digits = self.pos;
            while self.pos < s.len() && s[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if digits == self.pos {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&s[start..self.pos]).expect("ascii number");
        text.parse::<f64>().map(Expr::constant).map_err(|_| Error::Parse {
            position: start,
            message: format!("malformed number `{text}`"),
        })
    }

    fn ident(&mut self) -> Result<Expr> {
        let start = self.pos;
        let s = self.src;
        while self.pos < s.len() && (s[self.pos].is_ascii_alphanumeric() || s[self.pos] == b'_') {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&s[start..self.pos]).expect("ascii identifier");
        if self.peek() == Some(b'(') {
            let f = Func::from_name(name).ok_or_else(|| Error::Parse {
                position: start,
                message: format!("unknown function `{name}`"),
            })?;
            self.pos += 1;
            let arg = self.expr()?;
            self.expect(b')')?;
            return Ok(Expr::raw(Node::Func(f, arg)));
        }
        if let Some(i) = self.vars.iter().position(|v| v == name) {
            return Ok(Expr::var(i));
        }
        if name == "pi" {
            return Ok(Expr::constant(std::f64::consts::PI));
        }
        Err(Error::UnknownVariable(name.to_string()))
    }
}

fn negate(e: Expr) -> Expr {
    match e.node() {
        Node::Const(c) => Expr::constant(-c),
        _ => Expr::raw(Node::Neg(e)),
    }
}

fn reciprocal(e: Expr) -> Expr {
    match e.node() {
        Node::Pow(b, k) => Expr::raw(Node::Pow(b.clone(), -k)),
        _ => Expr::raw(Node::Pow(e, -1)),
    }
}

fn is_atomic(e: &Expr) -> bool {
    match e.node() {
        Node::Var(_) | Node::Func(..) => true,
        Node::Const(c) => *c >= 0.0,
        _ => false,
    }
}

fn write_const(f: &mut fmt::Formatter<'_>, c: f64) -> fmt::Result {
    write!(f, "{c}")
}

fn write_paren(f: &mut fmt::Formatter<'_>, e: &Expr, names: &[String]) -> fmt::Result {
    write!(f, "(")?;
    write_expr(f, e, names)?;
    write!(f, ")")
}

fn write_atomic(f: &mut fmt::Formatter<'_>, e: &Expr, names: &[String]) -> fmt::Result {
    if is_atomic(e) {
        write_expr(f, e, names)
    } else {
        write_paren(f, e, names)
    }
}

fn write_pow(f: &mut fmt::Formatter<'_>, base: &Expr, k: i32, names: &[String]) -> fmt::Result {
    write_atomic(f, base, names)?;
    if k < 0 {
        write!(f, "^({k})")
    } else {
        write!(f, "^{k}")
    }
}

/// A product factor in non-leading position.
fn write_factor(f: &mut fmt::Formatter<'_>, e: &Expr, names: &[String]) -> fmt::Result {
    match e.node() {
        Node::Pow(b, k) if *k < 0 => {
            write!(f, "/")?;
            if *k == -1 {
                write_atomic(f, b, names)
            } else {
                write_pow(f, b, -k, names)
            }
        }
        Node::Pow(b, k) => {
            write!(f, "*")?;
            write_pow(f, b, *k, names)
        }
        _ => {
            write!(f, "*")?;
            write_atomic(f, e, names)
        }
    }
}

pub(crate) fn write_expr(f: &mut fmt::Formatter<'_>, e: &Expr, names: &[String]) -> fmt::Result {
    match e.node() {
        Node::Const(c) => write_const(f, *c),
        Node::Var(i) => match names.get(*i) {
            Some(n) => write!(f, "{n}"),
            None => write!(f, "_{i}"),
        },
        Node::Func(func, x) => {
            write!(f, "{}(", func.name())?;
            write_expr(f, x, names)?;
            write!(f, ")")
        }
        Node::Pow(b, k) => write_pow(f, b, *k, names),
        Node::Neg(x) => {
            write!(f, "-")?;
            write_atomic(f, x, names)
        }
        Node::Mul(fs) => {
            let first = &fs[0];
            match first.node() {
                Node::Add(_) | Node::Mul(_) => write_paren(f, first, names)?,
                _ => write_expr(f, first, names)?,
            }
            for g in &fs[1..] {
                write_factor(f, g, names)?;
            }
            Ok(())
        }
        Node::Add(ts) => {
            match ts[0].node() {
                Node::Add(_) => write_paren(f, &ts[0], names)?,
                _ => write_expr(f, &ts[0], names)?,
            }
            for t in &ts[1..] {
                match t.node() {
                    Node::Neg(x) => {
                        write!(f, " - ")?;
                        match x.node() {
                            Node::Add(_) => write_paren(f, x, names)?,
                            _ => write_expr(f, x, names)?,
                        }
                    }
                    Node::Const(c) if *c < 0.0 => {
                        write!(f, " - ")?;
                        write_const(f, -c)?;
                    }
                    Node::Add(_) => {
                        write!(f, " + ")?;
                        write_paren(f, t, names)?;
                    }
                    _ => {
                        write!(f, " + ")?;
                        write_expr(f, t, names)?;
                    }
                }
            }
            Ok(())
        }
    }
}
