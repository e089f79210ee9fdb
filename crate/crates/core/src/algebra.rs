//! Finite-dimensional real Lie algebras given by structure constants.
//!
//! Structure constants are stored densely as `c[α][β][γ]`, meaning
//! `[a_α, a_β] = Σ_γ c[α][β][γ] a_γ`. Construction validates antisymmetry and
//! the Jacobi identity, so every `LieAlgebra` value is a genuine Lie algebra.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

const STRUCTURE_TOL: f64 = 1e-12;
const SERIES_TOL: f64 = 1e-14;
const RANK_TOL: f64 = 1e-10;

/// One nonzero bracket `[a_left, a_right] = Σ coef · a_k`, zero-based indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Bracket {
    pub left: usize,
    pub right: usize,
    pub terms: Vec<(usize, f64)>,
}

impl Bracket {
    pub fn new(left: usize, right: usize, terms: Vec<(usize, f64)>) -> Self {
        Self { left, right, terms }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LieAlgebra {
    names: Vec<String>,
    structure: Vec<f64>,
    class: Option<usize>,
}

impl LieAlgebra {
    /// Build an algebra from a flat `r*r*r` array of structure constants.
    pub fn new(names: Vec<String>, structure: Vec<f64>) -> Result<Self> {
        let r = names.len();
        if r == 0 {
            return Err(Error::invalid("Lie algebra must have positive dimension"));
        }
        if structure.len() != r * r * r {
            return Err(Error::invalid(format!(
                "expected {} structure constants for dimension {r}, got {}",
                r * r * r,
                structure.len()
            )));
        }
        if structure.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("structure constants must be finite"));
        }
        let mut algebra = Self {
            names,
            structure,
            class: None,
        };
        algebra.validate()?;
        algebra.class = algebra.is_nilpotent(r);
        Ok(algebra)
    }

    /// Build an algebra from the list of its nonzero brackets.
    pub fn from_brackets(names: Vec<String>, brackets: &[Bracket]) -> Result<Self> {
        let r = names.len();
        let mut structure = vec![0.0; r * r * r];
        for b in brackets {
            if b.left >= r || b.right >= r {
                return Err(Error::invalid(format!(
                    "bracket [{}, {}] refers to a basis index beyond {r}",
                    b.left + 1,
                    b.right + 1
                )));
            }
            if b.left == b.right {
                return Err(Error::invalid("bracket of a basis element with itself"));
            }
            for &(k, coef) in &b.terms {
                if k >= r {
                    return Err(Error::invalid(format!("bracket term index {} beyond {r}", k + 1)));
                }
                structure[(b.left * r + b.right) * r + k] += coef;
                structure[(b.right * r + b.left) * r + k] -= coef;
            }
        }
        Self::new(names, structure)
    }

    /// The algebra 𝔤₄: `[a1,a2]=a3, [a1,a3]=a4, [a2,a3]=a4`.
    pub fn g4() -> Self {
        Self::from_brackets(
            default_names(4),
            &[
                Bracket::new(0, 1, vec![(2, 1.0)]),
                Bracket::new(0, 2, vec![(3, 1.0)]),
                Bracket::new(1, 2, vec![(3, 1.0)]),
            ],
        )
        .expect("g4 constants are valid")
    }

    /// The algebra 𝔤̄₄: `[a1,a2]=a3, [a1,a3]=a4`.
    pub fn g4bar() -> Self {
        Self::from_brackets(
            default_names(4),
            &[Bracket::new(0, 1, vec![(2, 1.0)]), Bracket::new(0, 2, vec![(3, 1.0)])],
        )
        .expect("g4bar constants are valid")
    }

    /// The Heisenberg algebra 𝔥(3): `[a1,a2]=a3`.
    pub fn h3() -> Self {
        Self::from_brackets(default_names(3), &[Bracket::new(0, 1, vec![(2, 1.0)])]).expect("h3 constants are valid")
    }

    pub fn abelian(dim: usize) -> Result<Self> {
        Self::new(default_names(dim), vec![0.0; dim * dim * dim])
    }

    /// Look up a shipped algebra by name (`h3`, `g4`, `g4bar`).
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "h3" => Ok(Self::h3()),
            "g4" => Ok(Self::g4()),
            "g4bar" => Ok(Self::g4bar()),
            other => Err(Error::invalid(format!("unknown algebra `{other}`"))),
        }
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Structure constant `c[α][β][γ]`.
    pub fn c(&self, alpha: usize, beta: usize, gamma: usize) -> f64 {
        let r = self.dim();
        self.structure[(alpha * r + beta) * r + gamma]
    }

    pub fn structure(&self) -> &[f64] {
        &self.structure
    }

    /// Nilpotency class cached at construction, `None` if not nilpotent.
    pub fn nilpotency_class(&self) -> Option<usize> {
        self.class
    }

    fn validate(&self) -> Result<()> {
        let r = self.dim();
        let scale = self.structure.iter().fold(1.0_f64, |m, c| m.max(c.abs()));
        for a in 0..r {
            for b in 0..r {
                for g in 0..r {
                    let asym = self.c(a, b, g) + self.c(b, a, g);
                    if asym.abs() > STRUCTURE_TOL * scale {
                        return Err(Error::invalid(format!(
                            "structure constants not antisymmetric at ({}, {}, {}): residual {asym:e}",
                            a + 1,
                            b + 1,
                            g + 1
                        )));
                    }
                }
            }
        }
        for a in 0..r {
            for b in 0..r {
                for d in 0..r {
                    for g in 0..r {
                        let mut s = 0.0;
                        for m in 0..r {
                            s += self.c(a, b, m) * self.c(m, d, g)
                                + self.c(b, d, m) * self.c(m, a, g)
                                + self.c(d, a, m) * self.c(m, b, g);
                        }
                        if s.abs() > STRUCTURE_TOL * scale * scale {
                            return Err(Error::invalid(format!(
                                "Jacobi identity fails for ({}, {}, {}) component {}: residual {s:e}",
                                a + 1,
                                b + 1,
                                d + 1,
                                g + 1
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn check_len(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::invalid(format!(
                "element has {} coefficients, algebra has dimension {}",
                x.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    /// `[x, y]` on raw coefficient vectors.
    pub fn bracket_coeffs(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x)?;
        self.check_len(y)?;
        let r = self.dim();
        let mut out = vec![0.0; r];
        for (a, &xa) in x.iter().enumerate() {
            if xa == 0.0 {
                continue;
            }
            for (b, &yb) in y.iter().enumerate() {
                if yb == 0.0 {
                    continue;
                }
                for (g, o) in out.iter_mut().enumerate() {
                    *o += xa * yb * self.c(a, b, g);
                }
            }
        }
        Ok(out)
    }

    /// Matrix of `ad(x)`: `M[γ][β] = Σ_α x_α c[α][β][γ]`.
    pub fn ad_matrix(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        self.check_len(x)?;
        let r = self.dim();
        Ok(DMatrix::from_fn(r, r, |g, b| {
            x.iter().enumerate().map(|(a, &xa)| xa * self.c(a, b, g)).sum()
        }))
    }

    /// `exp(scale · ad(x))`.
    ///
    /// Nilpotent algebras use the terminating power series; otherwise the
    /// series is evaluated with scaling and squaring and truncated once a term
    /// falls below `1e-14` relative to the partial sum.
    pub fn exp_ad(&self, x: &[f64], scale: f64) -> Result<DMatrix<f64>> {
        let a = self.ad_matrix(x)? * scale;
        Ok(if self.class.is_some() {
            exp_nilpotent(&a)
        } else {
            exp_general(&a)
        })
    }

    /// Lower central series dimensions `dim 𝔤¹, dim 𝔤², …`, stopping at the
    /// first zero term or after `max_terms` terms.
    pub fn lower_central_series(&self, max_terms: usize) -> Vec<usize> {
        let r = self.dim();
        let mut dims = vec![r];
        let mut current = DMatrix::<f64>::identity(r, r);
        // Columns of `current` are orthonormal, so the tolerance is absolute
        // up to the size of the structure constants.
        let scale = self.structure.iter().fold(1.0_f64, |m, c| m.max(c.abs()));
        while dims.len() < max_terms {
            let mut gens: Vec<Vec<f64>> = Vec::new();
            for i in 0..r {
                let ad = self.ad_matrix(&unit(r, i)).expect("unit has algebra length");
                for col in current.column_iter() {
                    gens.push((&ad * col).iter().copied().collect());
                }
            }
            current = span_basis(r, &gens, RANK_TOL * scale);
            dims.push(current.ncols());
            if current.ncols() == 0 {
                break;
            }
        }
        dims
    }

    /// Nilpotency class if the lower central series vanishes within
    /// `max_depth` bracket steps.
    pub fn is_nilpotent(&self, max_depth: usize) -> Option<usize> {
        let dims = self.lower_central_series(max_depth.max(1) + 1);
        dims.iter().position(|&d| d == 0)
    }

    /// 2-cocycle of this algebra viewed as a central extension of the quotient
    /// by the basis element `kernel`: `ω(i, j) = c[i][j][kernel]` on the
    /// remaining indices, listed for `i < j`.
    pub fn extension_cocycle(&self, kernel: usize) -> Result<Vec<f64>> {
        let r = self.dim();
        if kernel >= r {
            return Err(Error::invalid("kernel index out of range"));
        }
        let ad = self.ad_matrix(&unit(r, kernel))?;
        if ad.amax() > STRUCTURE_TOL {
            return Err(Error::invalid(format!("a{} is not central", kernel + 1)));
        }
        let rest: Vec<usize> = (0..r).filter(|&i| i != kernel).collect();
        let mut omega = Vec::new();
        for (p, &i) in rest.iter().enumerate() {
            for &j in &rest[p + 1..] {
                omega.push(self.c(i, j, kernel));
            }
        }
        Ok(omega)
    }

    /// Whether `self` and `other` are equivalent central extensions of the
    /// same quotient algebra by the line spanned by `a_kernel`.
    ///
    /// Both algebras must induce identical structure constants on the
    /// quotient. The extensions are equivalent exactly when the difference of
    /// their cocycles is a coboundary `(x, y) ↦ f([x, y])`.
    pub fn equivalent_central_extension(&self, other: &LieAlgebra, kernel: usize) -> Result<bool> {
        let r = self.dim();
        if other.dim() != r {
            return Err(Error::invalid("algebras have different dimensions"));
        }
        let rest: Vec<usize> = (0..r).filter(|&i| i != kernel).collect();
        for &i in &rest {
            for &j in &rest {
                for &m in &rest {
                    if (self.c(i, j, m) - other.c(i, j, m)).abs() > STRUCTURE_TOL {
                        return Err(Error::invalid("quotient algebras differ"));
                    }
                }
            }
        }
        let w1 = self.extension_cocycle(kernel)?;
        let w2 = other.extension_cocycle(kernel)?;
        let diff: Vec<f64> = w1.iter().zip(&w2).map(|(a, b)| a - b).collect();
        // Coboundary space: columns indexed by f_m, rows by pairs (i < j).
        let pairs: Vec<(usize, usize)> = rest
            .iter()
            .enumerate()
            .flat_map(|(p, &i)| rest[p + 1..].iter().map(move |&j| (i, j)))
            .collect();
        let coboundary = DMatrix::from_fn(pairs.len(), rest.len(), |row, col| {
            self.c(pairs[row].0, pairs[row].1, rest[col])
        });
        let target = DMatrix::from_column_slice(diff.len(), 1, &diff);
        if target.amax() <= STRUCTURE_TOL {
            return Ok(true);
        }
        let svd = coboundary.clone().svd(true, true);
        let f = svd
            .solve(&target, RANK_TOL)
            .map_err(|e| Error::Numeric(e.to_string()))?;
        let residual = (&coboundary * f - &target).amax();
        Ok(residual <= 1e-9)
    }

    pub fn element(self: &Arc<Self>, coeffs: Vec<f64>) -> Result<AlgebraElement> {
        self.check_len(&coeffs)?;
        Ok(AlgebraElement {
            algebra: Arc::clone(self),
            coeffs,
        })
    }

    pub fn basis(self: &Arc<Self>, i: usize) -> AlgebraElement {
        AlgebraElement {
            algebra: Arc::clone(self),
            coeffs: unit(self.dim(), i),
        }
    }

    pub fn zero(self: &Arc<Self>) -> AlgebraElement {
        AlgebraElement {
            algebra: Arc::clone(self),
            coeffs: vec![0.0; self.dim()],
        }
    }
}

impl fmt::Display for LieAlgebra {
    /// Lists the nonzero brackets `[a_i, a_j] = …` with `i < j`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = self.dim();
        let mut first = true;
        for i in 0..r {
            for j in i + 1..r {
                let terms: Vec<String> = (0..r)
                    .filter(|&k| self.c(i, j, k) != 0.0)
                    .map(|k| format_term(self.c(i, j, k), &self.names[k]))
                    .collect();
                if terms.is_empty() {
                    continue;
                }
                if !first {
                    writeln!(f)?;
                }
                first = false;
                write!(f, "[{}, {}] = {}", self.names[i], self.names[j], terms.join(" + "))?;
            }
        }
        if first {
            write!(f, "abelian")?;
        }
        Ok(())
    }
}

fn format_term(coef: f64, name: &str) -> String {
    if coef == 1.0 {
        name.to_string()
    } else {
        format!("{coef}*{name}")
    }
}

/// An element `Σ x_α a_α` of a particular algebra.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraElement {
    algebra: Arc<LieAlgebra>,
    coeffs: Vec<f64>,
}

impl AlgebraElement {
    pub fn algebra(&self) -> &Arc<LieAlgebra> {
        &self.algebra
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    fn same_algebra(&self, other: &AlgebraElement) -> Result<()> {
        if Arc::ptr_eq(&self.algebra, &other.algebra) || self.algebra == other.algebra {
            Ok(())
        } else {
            Err(Error::invalid("elements belong to different Lie algebras"))
        }
    }

    pub fn bracket(&self, other: &AlgebraElement) -> Result<AlgebraElement> {
        self.same_algebra(other)?;
        let coeffs = self.algebra.bracket_coeffs(&self.coeffs, &other.coeffs)?;
        Ok(AlgebraElement {
            algebra: Arc::clone(&self.algebra),
            coeffs,
        })
    }

    pub fn ad_matrix(&self) -> DMatrix<f64> {
        self.algebra
            .ad_matrix(&self.coeffs)
            .expect("element length matches algebra")
    }

    pub fn exp_ad(&self, scale: f64) -> DMatrix<f64> {
        self.algebra
            .exp_ad(&self.coeffs, scale)
            .expect("element length matches algebra")
    }

    pub fn scale(&self, s: f64) -> AlgebraElement {
        AlgebraElement {
            algebra: Arc::clone(&self.algebra),
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn add(&self, other: &AlgebraElement) -> Result<AlgebraElement> {
        self.same_algebra(other)?;
        Ok(AlgebraElement {
            algebra: Arc::clone(&self.algebra),
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        })
    }

    /// Apply a linear map given in the basis of the algebra.
    pub fn transform(&self, m: &DMatrix<f64>) -> AlgebraElement {
        let v = m * nalgebra::DVector::from_column_slice(&self.coeffs);
        AlgebraElement {
            algebra: Arc::clone(&self.algebra),
            coeffs: v.iter().copied().collect(),
        }
    }
}

pub(crate) fn default_names(r: usize) -> Vec<String> {
    (1..=r).map(|i| format!("a{i}")).collect()
}

pub(crate) fn unit(r: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; r];
    v[i] = 1.0;
    v
}

/// Orthonormal basis (as columns) of the span of `vectors`.
/// Orthonormal basis of the span of `vectors`, dropping singular values
/// at or below `tol`.
fn span_basis(r: usize, vectors: &[Vec<f64>], tol: f64) -> DMatrix<f64> {
    if vectors.is_empty() {
        return DMatrix::zeros(r, 0);
    }
    let m = DMatrix::from_fn(r, vectors.len(), |i, j| vectors[j][i]);
    let svd = m.svd(true, false);
    let u = svd.u.expect("requested U");
    let keep: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > tol)
        .map(|(i, _)| i)
        .collect();
    DMatrix::from_fn(r, keep.len(), |i, j| u[(i, keep[j])])
}

fn exp_nilpotent(a: &DMatrix<f64>) -> DMatrix<f64> {
    let r = a.nrows();
    let mut sum = DMatrix::identity(r, r);
    let mut term = DMatrix::identity(r, r);
    for k in 1..=r {
        term = &term * a / k as f64;
        if term.amax() == 0.0 {
            break;
        }
        sum += &term;
    }
    sum
}

fn exp_general(a: &DMatrix<f64>) -> DMatrix<f64> {
    let r = a.nrows();
    let norm = a.amax() * r as f64;
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a / 2f64.powi(squarings);
    let mut sum = DMatrix::identity(r, r);
    let mut term = DMatrix::identity(r, r);
    for k in 1..200 {
        term = &term * &scaled / k as f64;
        sum += &term;
        if term.amax() <= SERIES_TOL * sum.amax() {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}
