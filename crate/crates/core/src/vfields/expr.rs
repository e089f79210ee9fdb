use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Smallest |cos x| accepted by `tan` and `sec`.
const COS_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Sec,
    Arctan,
    Sqrt,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Sec => "sec",
            Func::Arctan => "arctan",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "sec" => Func::Sec,
            "arctan" | "atan" => Func::Arctan,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    fn apply(self, x: f64) -> Result<f64> {
        match self {
            Func::Sin => Ok(x.sin()),
            Func::Cos => Ok(x.cos()),
            Func::Tan | Func::Sec => {
                let c = x.cos();
                if c.abs() < COS_GUARD {
                    return Err(Error::domain(format!("{}({x}) with cos = {c:e}", self.name())));
                }
                Ok(if self == Func::Tan { x.sin() / c } else { 1.0 / c })
            }
            Func::Arctan => Ok(x.atan()),
            Func::Sqrt => {
                if x < 0.0 {
                    return Err(Error::domain(format!("sqrt of negative value {x}")));
                }
                Ok(x.sqrt())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    Var(usize),
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    Neg(Expr),
    Pow(Expr, i32),
    Func(Func, Expr),
}

/// Immutable expression tree with shared subtrees.
#[derive(Clone, PartialEq)]
pub struct Expr(Arc<Node>);

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl Expr {
    /// Wrap a node as-is, without simplification.
    pub fn raw(node: Node) -> Self {
        Expr(Arc::new(node))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn constant(c: f64) -> Self {
        Self::raw(Node::Const(c))
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn one() -> Self {
        Self::constant(1.0)
    }

    pub fn var(i: usize) -> Self {
        Self::raw(Node::Var(i))
    }

    pub fn as_const(&self) -> Option<f64> {
        match *self.0 {
            Node::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    /// Sum with flattening, constant folding and zero elimination.
    pub fn sum(terms: Vec<Expr>) -> Self {
        let mut flat = Vec::with_capacity(terms.len());
        let mut constant = 0.0;
        for t in terms {
            match t.node() {
                Node::Const(c) => constant += c,
                Node::Add(inner) => {
                    for s in inner {
                        match s.as_const() {
                            Some(c) => constant += c,
                            None => flat.push(s.clone()),
                        }
                    }
                }
                _ => flat.push(t),
            }
        }
        if constant != 0.0 {
            flat.push(Expr::constant(constant));
        }
        match flat.len() {
            0 => Expr::zero(),
            1 => flat.pop().expect("one term"),
            _ => Self::raw(Node::Add(flat)),
        }
    }

    /// Product with flattening, constant folding and zero/one elimination.
    pub fn product(factors: Vec<Expr>) -> Self {
        let mut flat = Vec::with_capacity(factors.len());
        let mut constant = 1.0;
        let push = |f: &Expr, flat: &mut Vec<Expr>, constant: &mut f64| match f.node() {
            Node::Const(c) => *constant *= c,
            Node::Neg(inner) => {
                *constant = -*constant;
                flat.push(inner.clone());
            }
            _ => flat.push(f.clone()),
        };
        for f in &factors {
            match f.node() {
                Node::Mul(inner) => {
                    for g in inner {
                        push(g, &mut flat, &mut constant);
                    }
                }
                _ => push(f, &mut flat, &mut constant),
            }
        }
        if constant == 0.0 {
            return Expr::zero();
        }
        let body = match flat.len() {
            0 => return Expr::constant(constant),
            1 => flat.pop().expect("one factor"),
            _ => Self::raw(Node::Mul(flat)),
        };
        if constant == 1.0 {
            body
        } else if constant == -1.0 {
            Self::raw(Node::Neg(body))
        } else {
            let mut v = vec![Expr::constant(constant)];
            match body.node() {
                Node::Mul(inner) => v.extend(inner.iter().cloned()),
                _ => v.push(body),
            }
            Self::raw(Node::Mul(v))
        }
    }

    pub fn neg(&self) -> Self {
        match self.node() {
            Node::Const(c) => Expr::constant(-c),
            Node::Neg(inner) => inner.clone(),
            Node::Mul(factors) => {
                if let Some(c) = factors[0].as_const() {
                    let mut v = factors.clone();
                    v[0] = Expr::constant(-c);
                    Expr::product(v)
                } else {
                    Self::raw(Node::Neg(self.clone()))
                }
            }
            _ => Self::raw(Node::Neg(self.clone())),
        }
    }

    pub fn powi(&self, k: i32) -> Self {
        match (self.node(), k) {
            (_, 0) => Expr::one(),
            (_, 1) => self.clone(),
            (Node::Const(c), _) => {
                let v = c.powi(k);
                if v.is_finite() {
                    Expr::constant(v)
                } else {
                    Self::raw(Node::Pow(self.clone(), k))
                }
            }
            (Node::Pow(base, j), _) => base.powi(j * k),
            _ => Self::raw(Node::Pow(self.clone(), k)),
        }
    }

    pub fn apply(f: Func, arg: Expr) -> Self {
        if let Some(c) = arg.as_const() {
            if let Ok(v) = f.apply(c) {
                // Keep exact zeros and ones; other values stay symbolic.
                if v == 0.0 || v == 1.0 {
                    return Expr::constant(v);
                }
            }
        }
        Self::raw(Node::Func(f, arg))
    }

    pub fn add(&self, other: &Expr) -> Self {
        Expr::sum(vec![self.clone(), other.clone()])
    }

    pub fn sub(&self, other: &Expr) -> Self {
        Expr::sum(vec![self.clone(), other.neg()])
    }

    pub fn mul(&self, other: &Expr) -> Self {
        Expr::product(vec![self.clone(), other.clone()])
    }

    pub fn eval(&self, vars: &[f64]) -> Result<f64> {
        let v = match self.node() {
            Node::Const(c) => *c,
            Node::Var(i) => *vars
                .get(*i)
                .ok_or_else(|| Error::invalid(format!("variable index {i} out of range")))?,
            Node::Add(ts) => {
                let mut s = 0.0;
                for t in ts {
                    s += t.eval(vars)?;
                }
                s
            }
            Node::Mul(fs) => {
                let mut p = 1.0;
                for f in fs {
                    p *= f.eval(vars)?;
                }
                p
            }
            Node::Neg(x) => -x.eval(vars)?,
            Node::Pow(b, k) => {
                let base = b.eval(vars)?;
                if *k < 0 && base == 0.0 {
                    return Err(Error::domain("division by zero"));
                }
                base.powi(*k)
            }
            Node::Func(f, x) => f.apply(x.eval(vars)?)?,
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::domain("non-finite value"))
        }
    }

    /// Exact partial derivative with respect to variable `var`.
    pub fn diff(&self, var: usize) -> Expr {
        match self.node() {
            Node::Const(_) => Expr::zero(),
            Node::Var(i) => {
                if *i == var {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Node::Add(ts) => Expr::sum(ts.iter().map(|t| t.diff(var)).collect()),
            Node::Mul(fs) => {
                let mut terms = Vec::new();
                for (i, f) in fs.iter().enumerate() {
                    let d = f.diff(var);
                    if d.is_zero() {
                        continue;
                    }
                    let mut factors: Vec<Expr> = fs
                        .iter()
                        .enumerate()
                        .filter(|&(j, _)| j != i)
                        .map(|(_, g)| g.clone())
                        .collect();
                    factors.push(d);
                    terms.push(Expr::product(factors));
                }
                Expr::sum(terms)
            }
            Node::Neg(x) => x.diff(var).neg(),
            Node::Pow(b, k) => {
                let db = b.diff(var);
                if db.is_zero() {
                    return Expr::zero();
                }
                Expr::product(vec![Expr::constant(*k as f64), b.powi(k - 1), db])
            }
            Node::Func(f, x) => {
                let dx = x.diff(var);
                if dx.is_zero() {
                    return Expr::zero();
                }
                let outer = match f {
                    Func::Sin => Expr::apply(Func::Cos, x.clone()),
                    Func::Cos => Expr::apply(Func::Sin, x.clone()).neg(),
                    Func::Tan => Expr::apply(Func::Sec, x.clone()).powi(2),
                    Func::Sec => Expr::product(vec![
                        Expr::apply(Func::Sec, x.clone()),
                        Expr::apply(Func::Tan, x.clone()),
                    ]),
                    Func::Arctan => Expr::sum(vec![Expr::one(), x.powi(2)]).powi(-1),
                    Func::Sqrt => Expr::product(vec![Expr::constant(0.5), Expr::apply(Func::Sqrt, x.clone()).powi(-1)]),
                };
                Expr::product(vec![outer, dx])
            }
        }
    }

    /// Rebuild the tree through the simplifying constructors.
    pub fn simplify(&self) -> Expr {
        match self.node() {
            Node::Const(_) | Node::Var(_) => self.clone(),
            Node::Add(ts) => Expr::sum(ts.iter().map(Expr::simplify).collect()),
            Node::Mul(fs) => Expr::product(fs.iter().map(Expr::simplify).collect()),
            Node::Neg(x) => x.simplify().neg(),
            Node::Pow(b, k) => b.simplify().powi(*k),
            Node::Func(f, x) => Expr::apply(*f, x.simplify()),
        }
    }

    /// Number of nodes, counting shared subtrees once per occurrence.
    pub fn size(&self) -> usize {
        1 + match self.node() {
            Node::Const(_) | Node::Var(_) => 0,
            Node::Add(v) | Node::Mul(v) => v.iter().map(Expr::size).sum(),
            Node::Neg(x) | Node::Pow(x, _) | Node::Func(_, x) => x.size(),
        }
    }

    /// Whether variable `var` occurs anywhere in the tree.
    pub fn mentions(&self, var: usize) -> bool {
        match self.node() {
            Node::Const(_) => false,
            Node::Var(i) => *i == var,
            Node::Add(v) | Node::Mul(v) => v.iter().any(|e| e.mentions(var)),
            Node::Neg(x) | Node::Pow(x, _) | Node::Func(_, x) => x.mentions(var),
        }
    }

    /// Replace every variable `i` by `subs[i]`.
    pub fn substitute(&self, subs: &[Expr]) -> Expr {
        match self.node() {
            Node::Const(_) => self.clone(),
            Node::Var(i) => subs[*i].clone(),
            Node::Add(ts) => Expr::sum(ts.iter().map(|t| t.substitute(subs)).collect()),
            Node::Mul(fs) => Expr::product(fs.iter().map(|f| f.substitute(subs)).collect()),
            Node::Neg(x) => x.substitute(subs).neg(),
            Node::Pow(b, k) => b.substitute(subs).powi(*k),
            Node::Func(f, x) => Expr::apply(*f, x.substitute(subs)),
        }
    }

    /// Printable view using the given variable names.
    pub fn display<'a>(&'a self, names: &'a [String]) -> ExprDisplay<'a> {
        ExprDisplay { expr: self, names }
    }
}

pub struct ExprDisplay<'a> {
    expr: &'a Expr,
    names: &'a [String],
}

impl fmt::Display for ExprDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        super::parse::write_expr(f, self.expr, self.names)
    }
}
