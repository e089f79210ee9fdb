//! Symbolic vector fields: exact differentiation, Lie brackets, closure of a
//! family of fields under brackets, and pointwise rank.
//!
//! Linear dependence of fields over ℝ is decided numerically: every field is
//! evaluated at the same set of probe points and the stacked samples are
//! compared by least squares. This is a randomized identity test, not a
//! canonical form; decisions report their margin so callers can tell a clear
//! verdict from a borderline one.

mod expr;
mod parse;

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use expr::{Expr, Func, Node};
pub use parse::parse_expr;

use crate::algebra::LieAlgebra;
use crate::error::{Error, Result};

/// Relative residual below which a field counts as a combination of others.
pub const DEPENDENCE_TOL: f64 = 1e-9;
/// Pivot threshold for [`rank_at`], relative to the largest matrix entry.
pub const RANK_PIVOT_TOL: f64 = 1e-10;
pub const DEFAULT_PROBES: usize = 32;
pub const DEFAULT_SEED: u64 = 0x5eed_2002;

#[derive(Clone, PartialEq)]
pub struct VectorFieldExpr {
    variables: Arc<Vec<String>>,
    components: Vec<Expr>,
}

impl fmt::Debug for VectorFieldExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "VectorFieldExpr({self})")
    }
}

impl fmt::Display for VectorFieldExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.components.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{}", c.display(&self.variables))?;
        }
        Ok(())
    }
}

impl VectorFieldExpr {
    pub fn new(variables: Vec<String>, components: Vec<Expr>) -> Result<Self> {
        if variables.len() != components.len() {
            return Err(Error::invalid(format!(
                "{} components for {} variables",
                components.len(),
                variables.len()
            )));
        }
        Ok(Self {
            variables: Arc::new(variables),
            components,
        })
    }

    pub fn zero(variables: Vec<String>) -> Self {
        let n = variables.len();
        Self {
            variables: Arc::new(variables),
            components: vec![Expr::zero(); n],
        }
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn eval(&self, point: &[f64]) -> Result<Vec<f64>> {
        if point.len() != self.dim() {
            return Err(Error::invalid(format!(
                "point has {} coordinates, field has {}",
                point.len(),
                self.dim()
            )));
        }
        self.components.iter().map(|c| c.eval(point)).collect()
    }

    /// Lie derivative of a scalar function along the field.
    pub fn apply(&self, f: &Expr) -> Expr {
        Expr::sum(
            self.components
                .iter()
                .enumerate()
                .map(|(j, xj)| xj.mul(&f.diff(j)))
                .collect(),
        )
    }

    pub fn scale(&self, s: &Expr) -> Self {
        Self {
            variables: Arc::clone(&self.variables),
            components: self.components.iter().map(|c| s.mul(c)).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_vars(other)?;
        Ok(Self {
            variables: Arc::clone(&self.variables),
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a.add(b))
                .collect(),
        })
    }

    fn same_vars(&self, other: &Self) -> Result<()> {
        if self.variables == other.variables {
            Ok(())
        } else {
            Err(Error::invalid("vector fields use different variable lists"))
        }
    }

    /// Whether every component simplifies to the constant zero.
    pub fn is_structurally_zero(&self) -> bool {
        self.components.iter().all(Expr::is_zero)
    }
}

/// Parse a semicolon-separated field, one expression per variable.
pub fn parse_field(text: &str, variables: &[&str]) -> Result<VectorFieldExpr> {
    let vars: Vec<String> = variables.iter().map(|s| s.to_string()).collect();
    parse_field_owned(text, vars)
}

pub fn parse_field_owned(text: &str, variables: Vec<String>) -> Result<VectorFieldExpr> {
    let mut comps = Vec::new();
    let mut offset = 0;
    for part in text.split(';') {
        let e = parse_expr(part, &variables).map_err(|e| match e {
            Error::Parse { position, message } => Error::Parse {
                position: position + offset,
                message,
            },
            other => other,
        })?;
        comps.push(e);
        offset += part.len() + 1;
    }
    VectorFieldExpr::new(variables, comps)
}

/// `[X, Y]^i = Σ_j (X^j ∂_j Y^i − Y^j ∂_j X^i)`, lightly simplified.
pub fn lie_bracket(x: &VectorFieldExpr, y: &VectorFieldExpr) -> Result<VectorFieldExpr> {
    x.same_vars(y)?;
    let n = x.dim();
    let comps = (0..n)
        .map(|i| {
            let mut terms = Vec::with_capacity(2 * n);
            for j in 0..n {
                let dy = y.components[i].diff(j);
                if !dy.is_zero() && !x.components[j].is_zero() {
                    terms.push(x.components[j].mul(&dy));
                }
                let dx = x.components[i].diff(j);
                if !dx.is_zero() && !y.components[j].is_zero() {
                    terms.push(y.components[j].mul(&dx).neg());
                }
            }
            Expr::sum(terms)
        })
        .collect();
    Ok(VectorFieldExpr {
        variables: Arc::clone(&x.variables),
        components: comps,
    })
}

/// Probe points for randomized identity tests.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSet {
    points: Vec<Vec<f64>>,
}

impl ProbeSet {
    /// `count` points drawn uniformly from the box `[lower, upper]^dim`.
    pub fn uniform(dim: usize, lower: f64, upper: f64, count: usize, seed: u64) -> Self {
        Self::in_box(&vec![(lower, upper); dim], count, seed)
    }

    pub fn in_box(bounds: &[(f64, f64)], count: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points = (0..count)
            .map(|_| bounds.iter().map(|&(lo, hi)| rng.gen_range(lo..hi)).collect())
            .collect();
        Self { points }
    }

    pub fn from_points(points: Vec<Vec<f64>>) -> Self {
        Self { points }
    }

    /// The default set: 32 points in `[-1, 1]^dim`.
    pub fn default_for(dim: usize) -> Self {
        Self::uniform(dim, -1.0, 1.0, DEFAULT_PROBES, DEFAULT_SEED)
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    /// Stacked evaluations of `field` at every probe point.
    pub fn sample(&self, field: &VectorFieldExpr) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(self.points.len() * field.dim());
        for p in &self.points {
            out.extend(field.eval(p)?);
        }
        Ok(out)
    }

    /// Largest absolute value of `e` over the probe points.
    pub fn max_abs(&self, e: &Expr) -> Result<f64> {
        let mut m = 0.0f64;
        for p in &self.points {
            m = m.max(e.eval(p)?.abs());
        }
        Ok(m)
    }
}

/// Least-squares expression of `target` in the span of `columns`.
///
/// Returns the coefficients and the residual relative to `|target|`.
fn express_in_span(columns: &[Vec<f64>], target: &[f64]) -> (Vec<f64>, f64) {
    let tnorm = target.iter().map(|v| v * v).sum::<f64>().sqrt();
    if columns.is_empty() {
        return (Vec::new(), if tnorm == 0.0 { 0.0 } else { 1.0 });
    }
    let rows = target.len();
    let norms: Vec<f64> = columns
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE))
        .collect();
    let a = DMatrix::from_fn(rows, columns.len(), |i, j| columns[j][i] / norms[j]);
    let b = DVector::from_column_slice(target);
    let svd = a.clone().svd(true, true);
    let x = svd.solve(&b, 1e-13).unwrap_or_else(|_| DVector::zeros(columns.len()));
    let resid = (&a * &x - &b).norm();
    let coeffs = x.iter().zip(&norms).map(|(v, n)| v / n).collect();
    let rel = if tnorm == 0.0 { 0.0 } else { resid / tnorm };
    (coeffs, rel)
}

/// Result of closing a family of fields under brackets.
#[derive(Debug, Clone)]
pub enum Closure {
    Closed {
        /// Structure constants with respect to `fields`.
        algebra: LieAlgebra,
        /// Input fields followed by any brackets that had to be added.
        fields: Vec<VectorFieldExpr>,
        /// Largest relative residual among "dependent" decisions.
        dependent_margin: f64,
        /// Smallest relative residual among "independent" decisions.
        independent_margin: f64,
    },
    NotClosed {
        /// Fields generated before the budget ran out.
        fields: Vec<VectorFieldExpr>,
        /// Number of fields added beyond the input.
        added: usize,
        independent_margin: f64,
    },
}

impl Closure {
    pub fn is_closed(&self) -> bool {
        matches!(self, Closure::Closed { .. })
    }
}

/// Close `fields` under Lie brackets, adding at most `max_new` new fields.
///
/// Brackets are formed pairwise in breadth-first order; each one is either
/// expressed as a real combination of the current basis (its coefficients
/// become structure constants) or appended to the basis.
pub fn closes_algebra(fields: &[VectorFieldExpr], max_new: usize, probes: &ProbeSet) -> Result<Closure> {
    if fields.is_empty() {
        return Err(Error::invalid("no fields given"));
    }
    for f in &fields[1..] {
        fields[0].same_vars(f)?;
    }
    let mut basis: Vec<VectorFieldExpr> = Vec::new();
    let mut samples: Vec<Vec<f64>> = Vec::new();
    let mut dependent_margin = 0.0f64;
    let mut independent_margin = f64::INFINITY;
    for f in fields {
        let s = probes.sample(f)?;
        let (_, rel) = express_in_span(&samples, &s);
        if rel <= DEPENDENCE_TOL {
            return Err(Error::invalid(format!(
                "input fields are linearly dependent (residual {rel:e})"
            )));
        }
        independent_margin = independent_margin.min(rel);
        basis.push(f.clone());
        samples.push(s);
    }

    // brackets[(i, j)] for i < j, as coefficient vectors over the basis
    let mut table: Vec<((usize, usize), Vec<f64>)> = Vec::new();
    let mut added = 0;
    let mut i = 0;
    while i < basis.len() {
        for j in 0..i {
            let br = lie_bracket(&basis[j], &basis[i])?;
            let s = probes.sample(&br)?;
            let (coeffs, rel) = express_in_span(&samples, &s);
            if rel <= DEPENDENCE_TOL {
                dependent_margin = dependent_margin.max(rel);
                table.push(((j, i), coeffs));
            } else {
                independent_margin = independent_margin.min(rel);
                if added == max_new {
                    return Ok(Closure::NotClosed {
                        fields: basis,
                        added,
                        independent_margin,
                    });
                }
                added += 1;
                let k = basis.len();
                let mut c = vec![0.0; k + 1];
                c[k] = 1.0;
                table.push(((j, i), c));
                basis.push(br);
                samples.push(s);
            }
        }
        i += 1;
    }

    let r = basis.len();
    let mut structure = vec![0.0; r * r * r];
    for ((a, b), coeffs) in &table {
        for (k, &c) in coeffs.iter().enumerate() {
            let c = snap(c);
            structure[(a * r + b) * r + k] = c;
            structure[(b * r + a) * r + k] = -c;
        }
    }
    let names = (1..=r).map(|k| format!("X{k}")).collect();
    let algebra = LieAlgebra::new(names, structure)?;
    Ok(Closure::Closed {
        algebra,
        fields: basis,
        dependent_margin,
        independent_margin,
    })
}

/// Round values within 1e-10 of an integer (zero included).
fn snap(c: f64) -> f64 {
    let r = c.round();
    if (c - r).abs() <= 1e-10 {
        r
    } else {
        c
    }
}

/// Numeric rank of the fields evaluated at `point`.
///
/// Gaussian elimination with partial pivoting; a pivot counts when it exceeds
/// `1e-10` times the largest entry of the evaluation matrix.
pub fn rank_at(fields: &[VectorFieldExpr], point: &[f64]) -> Result<usize> {
    let rows: Vec<Vec<f64>> = fields.iter().map(|f| f.eval(point)).collect::<Result<_>>()?;
    Ok(numeric_rank(rows))
}

pub(crate) fn numeric_rank(mut rows: Vec<Vec<f64>>) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let ncols = rows[0].len();
    let scale = rows.iter().flat_map(|r| r.iter()).fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0;
    }
    let mut rank = 0;
    for col in 0..ncols {
        if rank == rows.len() {
            break;
        }
        let (p, pv) = rows[rank..]
            .iter()
            .enumerate()
            .map(|(k, r)| (k + rank, r[col].abs()))
            .fold((rank, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pv <= RANK_PIVOT_TOL * scale {
            continue;
        }
        rows.swap(rank, p);
        let pivot_row = rows[rank].clone();
        for r in rows.iter_mut().skip(rank + 1) {
            let factor = r[col] / pivot_row[col];
            for (v, pv) in r.iter_mut().zip(&pivot_row).skip(col) {
                *v -= factor * pv;
            }
        }
        rank += 1;
    }
    rank
}
