//! Sparse real polynomials in the Wei–Norman coordinates.

use std::collections::BTreeMap;
use std::fmt;

use crate::vfields::{Expr, Node};

/// Coefficients below this are dropped after each operation.
const DROP_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Poly {
    nvars: usize,
    /// Exponent vector to coefficient.
    terms: BTreeMap<Vec<u32>, f64>,
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        Self {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        let mut p = Self::zero(nvars);
        if c.abs() > DROP_TOL {
            p.terms.insert(vec![0; nvars], c);
        }
        p
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        let mut p = Self::zero(nvars);
        p.terms.insert(e, 1.0);
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self.terms.len() {
            0 => Some(0.0),
            1 => self.terms.get(&vec![0; self.nvars]).copied(),
            _ => None,
        }
    }

    /// Variables that occur with a positive exponent.
    pub fn variables(&self) -> Vec<usize> {
        (0..self.nvars)
            .filter(|&i| self.terms.keys().any(|e| e[i] > 0))
            .collect()
    }

    pub fn mentions(&self, i: usize) -> bool {
        self.terms.keys().any(|e| e[i] > 0)
    }

    fn cleaned(mut self) -> Self {
        self.terms.retain(|_, c| c.abs() > DROP_TOL);
        self
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            *out.terms.entry(e.clone()).or_insert(0.0) += c;
        }
        out.cleaned()
    }

    pub fn scale(&self, s: f64) -> Poly {
        Poly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c * s)).collect(),
        }
        .cleaned()
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero(self.nvars);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                *out.terms.entry(e).or_insert(0.0) += c1 * c2;
            }
        }
        out.cleaned()
    }

    pub fn eval(&self, v: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                e.iter()
                    .zip(v)
                    .fold(*c, |acc, (&k, &x)| if k == 0 { acc } else { acc * x.powi(k as i32) })
            })
            .sum()
    }

    /// Expand a polynomial expression in `nvars` variables; `None` if the
    /// expression is not polynomial.
    pub fn from_expr(e: &Expr, nvars: usize) -> Option<Poly> {
        match e.node() {
            Node::Const(c) => Some(Poly::constant(nvars, *c)),
            Node::Var(i) if *i < nvars => Some(Poly::var(nvars, *i)),
            Node::Var(_) => None,
            Node::Add(terms) => terms
                .iter()
                .try_fold(Poly::zero(nvars), |acc, t| Some(acc.add(&Poly::from_expr(t, nvars)?))),
            Node::Mul(factors) => factors.iter().try_fold(Poly::constant(nvars, 1.0), |acc, f| {
                Some(acc.mul(&Poly::from_expr(f, nvars)?))
            }),
            Node::Neg(x) => Some(Poly::from_expr(x, nvars)?.scale(-1.0)),
            Node::Pow(x, k) if x.as_const().is_some() => Some(Poly::constant(nvars, x.as_const()?.powi(*k))),
            Node::Pow(x, k) if *k >= 0 => {
                let base = Poly::from_expr(x, nvars)?;
                Some((0..*k).fold(Poly::constant(nvars, 1.0), |acc, _| acc.mul(&base)))
            }
            Node::Pow(..) | Node::Func(..) => None,
        }
    }

    /// Display using the given variable names.
    pub fn display<'a>(&'a self, names: &'a [String]) -> PolyDisplay<'a> {
        PolyDisplay { poly: self, names }
    }
}

pub struct PolyDisplay<'a> {
    poly: &'a Poly,
    names: &'a [String],
}

impl fmt::Display for PolyDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.poly.terms.is_empty() {
            return write!(f, "0");
        }
        // Lowest total degree first.
        let mut terms: Vec<(&Vec<u32>, &f64)> = self.poly.terms.iter().collect();
        terms.sort_by_key(|(e, _)| (e.iter().sum::<u32>(), std::cmp::Reverse((*e).clone())));
        for (k, (e, &c)) in terms.into_iter().enumerate() {
            let monomial: Vec<String> = e
                .iter()
                .enumerate()
                .filter(|(_, &p)| p > 0)
                .map(|(i, &p)| {
                    if p == 1 {
                        self.names[i].clone()
                    } else {
                        format!("{}^{p}", self.names[i])
                    }
                })
                .collect();
            let mag = c.abs();
            let sign = if c < 0.0 { "-" } else { "+" };
            if k == 0 {
                if c < 0.0 {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            if monomial.is_empty() {
                write!(f, "{mag}")?;
            } else if mag == 1.0 {
                write!(f, "{}", monomial.join("*"))?;
            } else {
                write!(f, "{mag}*{}", monomial.join("*"))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_and_evaluation() {
        let x = Poly::var(2, 0);
        let y = Poly::var(2, 1);
        let p = x.mul(&x).scale(0.5).add(&x.mul(&y)).add(&Poly::constant(2, -1.0));
        assert_eq!(p.eval(&[2.0, 3.0]), 2.0 + 6.0 - 1.0);
        assert_eq!(p.variables(), vec![0, 1]);
        assert!(p.add(&p.scale(-1.0)).is_zero());
        assert_eq!(Poly::constant(2, 4.0).as_constant(), Some(4.0));
        assert_eq!(p.as_constant(), None);
    }

    #[test]
    fn from_expression() {
        let names: Vec<String> = ["x", "y"].iter().map(|s| s.to_string()).collect();
        let e = crate::vfields::parse_expr("-(x + 2*y)^2/4 + x*y", &names).unwrap();
        let p = Poly::from_expr(&e, 2).unwrap();
        assert_eq!(p.display(&names).to_string(), "-0.25*x^2 - y^2");
        let t = crate::vfields::parse_expr("sin(x)", &names).unwrap();
        assert!(Poly::from_expr(&t, 2).is_none());
    }

    #[test]
    fn display() {
        let names = vec!["v1".to_string(), "v2".to_string()];
        let x = Poly::var(2, 0);
        let y = Poly::var(2, 1);
        let p = x.mul(&x).scale(-0.5).add(&x.mul(&y)).add(&y);
        assert_eq!(p.display(&names).to_string(), "v2 - 0.5*v1^2 + v1*v2");
        assert_eq!(Poly::zero(2).display(&names).to_string(), "0");
    }
}
