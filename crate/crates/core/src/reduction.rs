//! Reduction of a group-level control problem through a homogeneous space.
//!
//! A solution of `ġ g⁻¹ = -Σ b_α a_α` with `g(t0) = e` factors as
//! `g = g₁ h`, where `g₁ = lift(y)` for a solution `y` of the projected
//! system on `G/H` and `h` solves `ḣ h⁻¹ = -Ad(g₁⁻¹)(B + ġ₁ g₁⁻¹)` in `H`.

use std::sync::Arc;

use crate::algebra::{AlgebraElement, LieAlgebra};
use crate::error::{Error, Result};
use crate::groups::{Chart, GroupElement, GroupModel, ModelKind};
use crate::integrate::{quad_with_breaks, solve_dense, ControlSignal, OdeSolution, TimeGrid, Trajectory};
use crate::vfields::{Expr, VectorFieldExpr};
use crate::weinorman::Poly;

/// Support outside `𝔥` above this aborts a reduction.
pub const SUPPORT_LIMIT: f64 = 1e-6;
/// Step for finite-difference velocities of base curves.
pub const FD_STEP: f64 = 1e-5;

/// `G/Z` for a four-dimensional group whose centre is spanned by `a4` and
/// whose quotient is the Heisenberg group, in first-kind coordinates.
///
/// The section is `y ↦ exp(y1 a1 + y2 a2 + y3 a3)`, so `project` keeps the
/// first three first-kind coordinates and the action is
/// `Φ(g, y) = (y1 + a, y2 + b, y3 + c + (a y2 - b y1)/2)`.
#[derive(Debug, Clone)]
pub struct HomogeneousSpace {
    group: GroupModel,
    subalgebra: Vec<usize>,
}

impl HomogeneousSpace {
    pub fn center_quotient(kind: ModelKind) -> Result<Self> {
        match kind {
            ModelKind::G4 | ModelKind::G4Bar => Ok(Self {
                group: GroupModel::new(kind),
                subalgebra: vec![3],
            }),
            ModelKind::H3 => Err(Error::invalid("no quotient space is shipped for h3")),
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        Self::center_quotient(ModelKind::from_name(name)?)
    }

    pub fn group(&self) -> &GroupModel {
        &self.group
    }

    pub fn algebra(&self) -> &Arc<LieAlgebra> {
        self.group.algebra()
    }

    pub fn chart(&self) -> Chart {
        Chart::FirstKind
    }

    /// Dimension of `G/H`.
    pub fn dim(&self) -> usize {
        self.group.dim() - self.subalgebra.len()
    }

    /// Basis indices spanning `𝔥`.
    pub fn subalgebra(&self) -> &[usize] {
        &self.subalgebra
    }

    pub fn variable_names(&self) -> Vec<String> {
        (1..=self.dim()).map(|i| format!("y{i}")).collect()
    }

    pub fn project(&self, g: &GroupElement) -> Result<Vec<f64>> {
        let g = self.group.convert(g, Chart::FirstKind)?;
        Ok(g.coords[..3].to_vec())
    }

    pub fn lift(&self, y: &[f64]) -> Result<GroupElement> {
        self.check_point(y)?;
        let mut coords = y.to_vec();
        coords.push(0.0);
        self.group.element(Chart::FirstKind, coords)
    }

    /// The subgroup element with first-kind coordinates `d` on `𝔥`.
    pub fn subgroup_element(&self, d: &[f64]) -> Result<GroupElement> {
        if d.len() != self.subalgebra.len() {
            return Err(Error::invalid("subgroup coordinates have the wrong length"));
        }
        let mut coords = vec![0.0; self.group.dim()];
        for (&k, &x) in self.subalgebra.iter().zip(d) {
            coords[k] = x;
        }
        self.group.element(Chart::FirstKind, coords)
    }

    pub fn action(&self, g: &GroupElement, y: &[f64]) -> Result<Vec<f64>> {
        self.check_point(y)?;
        let g = self.group.convert(g, Chart::FirstKind)?;
        let (a, b, c) = (g.coords[0], g.coords[1], g.coords[2]);
        Ok(vec![y[0] + a, y[1] + b, y[2] + c + (a * y[1] - b * y[0]) / 2.0])
    }

    /// `X_α(y) = d/ds Φ(exp(-s a_α), y)` at `s = 0`.
    pub fn fundamental_fields(&self) -> Vec<VectorFieldExpr> {
        let names = self.variable_names();
        (0..self.group.dim())
            .map(|alpha| {
                let e = |k: usize| if k == alpha { 1.0 } else { 0.0 };
                let twist = Expr::sum(vec![
                    Expr::constant(-e(0) / 2.0).mul(&Expr::var(1)),
                    Expr::constant(e(1) / 2.0).mul(&Expr::var(0)),
                ]);
                let components = vec![
                    Expr::constant(-e(0)),
                    Expr::constant(-e(1)),
                    Expr::constant(-e(2)).add(&twist),
                ];
                VectorFieldExpr::new(names.clone(), components).expect("three components")
            })
            .collect()
    }

    fn check_point(&self, y: &[f64]) -> Result<()> {
        if y.len() != self.dim() {
            return Err(Error::invalid(format!(
                "points of the quotient have {} coordinates, got {}",
                self.dim(),
                y.len()
            )));
        }
        Ok(())
    }

    /// Coordinates of `ad_X` for `X = Σ x_i a_i` with polynomial entries.
    fn ad_poly(&self, x: &[Poly], z: &[Poly]) -> Vec<Poly> {
        let alg = self.algebra();
        let r = alg.dim();
        let mut out = vec![Poly::zero(x[0].nvars()); r];
        for a in 0..r {
            for b in 0..r {
                for (g, o) in out.iter_mut().enumerate() {
                    let c = alg.c(a, b, g);
                    if c != 0.0 {
                        *o = o.add(&x[a].mul(&z[b]).scale(c));
                    }
                }
            }
        }
        out
    }
}

/// The projected system `ẏ = Σ b_α(t) X_α(y)` on `G/H`.
#[derive(Debug, Clone)]
pub struct ProjectedSystem {
    fields: Vec<VectorFieldExpr>,
    controls: ControlSignal,
}

pub fn project_system(space: &HomogeneousSpace, controls: &ControlSignal) -> Result<ProjectedSystem> {
    Ok(ProjectedSystem {
        fields: space.fundamental_fields(),
        controls: controls.padded(space.group().dim())?,
    })
}

impl ProjectedSystem {
    pub fn fields(&self) -> &[VectorFieldExpr] {
        &self.fields
    }

    pub fn controls(&self) -> &ControlSignal {
        &self.controls
    }

    pub fn rhs(&self, t: f64, y: &[f64], out: &mut [f64]) -> Result<()> {
        let b = self.controls.eval(t)?;
        out.fill(0.0);
        for (field, &bk) in self.fields.iter().zip(&b) {
            if bk == 0.0 {
                continue;
            }
            for (o, v) in out.iter_mut().zip(field.eval(y)?) {
                *o += bk * v;
            }
        }
        Ok(())
    }

    /// Right-hand sides as polynomials in `y1.., b1..`.
    pub fn polynomials(&self) -> Result<Vec<Poly>> {
        let n = self.fields[0].dim();
        let nvars = n + self.fields.len();
        let mut out = vec![Poly::zero(nvars); n];
        for (k, field) in self.fields.iter().enumerate() {
            let b = Poly::var(nvars, n + k);
            for (o, comp) in out.iter_mut().zip(field.components()) {
                let p = Poly::from_expr(comp, nvars)
                    .ok_or_else(|| Error::invalid("fundamental field is not polynomial"))?;
                *o = o.add(&p.mul(&b));
            }
        }
        Ok(out)
    }

    /// Lines `y1' = ...` of the projected system.
    pub fn equations(&self) -> Result<Vec<String>> {
        let n = self.fields[0].dim();
        let names = equation_names(n, self.fields.len());
        Ok(self
            .polynomials()?
            .iter()
            .enumerate()
            .map(|(i, p)| format!("{}' = {}", names[i], p.display(&names)))
            .collect())
    }

    /// Dense solution from `project(e) = 0`.
    pub fn solve(&self, tol: f64) -> Result<OdeSolution> {
        let (t0, t1) = self.controls.domain();
        let y0 = vec![0.0; self.fields[0].dim()];
        solve_dense(
            |t, y, out| self.rhs(t, y, out),
            &y0,
            t0,
            t1,
            &self.controls.breakpoints(),
            tol,
        )
    }
}

fn equation_names(n: usize, r: usize) -> Vec<String> {
    (1..=n)
        .map(|i| format!("y{i}"))
        .chain((1..=r).map(|k| format!("b{k}")))
        .collect()
}

/// A curve on `G/H` with a velocity.
pub trait BaseCurve {
    fn domain(&self) -> (f64, f64);
    fn point(&self, t: f64) -> Result<Vec<f64>>;
    fn velocity(&self, t: f64) -> Result<Vec<f64>>;
}

impl BaseCurve for OdeSolution {
    fn domain(&self) -> (f64, f64) {
        OdeSolution::domain(self)
    }

    fn point(&self, t: f64) -> Result<Vec<f64>> {
        self.eval(t)
    }

    fn velocity(&self, t: f64) -> Result<Vec<f64>> {
        self.deriv(t)
    }
}

/// A curve given by a function, differentiated by finite differences.
pub struct FnCurve<F> {
    f: F,
    t0: f64,
    t1: f64,
}

impl<F> FnCurve<F>
where
    F: Fn(f64) -> Result<Vec<f64>>,
{
    pub fn new(f: F, t0: f64, t1: f64) -> Self {
        Self { f, t0, t1 }
    }
}

impl<F> BaseCurve for FnCurve<F>
where
    F: Fn(f64) -> Result<Vec<f64>>,
{
    fn domain(&self) -> (f64, f64) {
        (self.t0, self.t1)
    }

    fn point(&self, t: f64) -> Result<Vec<f64>> {
        (self.f)(t)
    }

    /// Central differences, second-order one-sided ones near the ends.
    fn velocity(&self, t: f64) -> Result<Vec<f64>> {
        let h = FD_STEP;
        let combine = |pts: &[(f64, f64)]| -> Result<Vec<f64>> {
            let mut out: Option<Vec<f64>> = None;
            for &(s, w) in pts {
                let y = (self.f)(t + s * h)?;
                let o = out.get_or_insert_with(|| vec![0.0; y.len()]);
                for (oi, yi) in o.iter_mut().zip(y) {
                    *oi += w * yi / h;
                }
            }
            Ok(out.unwrap_or_default())
        };
        if t - h < self.t0 {
            combine(&[(0.0, -1.5), (1.0, 2.0), (2.0, -0.5)])
        } else if t + h > self.t1 {
            combine(&[(0.0, 1.5), (-1.0, -2.0), (-2.0, 0.5)])
        } else {
            combine(&[(1.0, 0.5), (-1.0, -0.5)])
        }
    }
}

/// `ḣ h⁻¹ = -Ad(g₁⁻¹)(B + ġ₁ g₁⁻¹)` at time `t` along `base`.
pub fn subgroup_velocity(
    space: &HomogeneousSpace,
    controls: &ControlSignal,
    base: &dyn BaseCurve,
    t: f64,
) -> Result<AlgebraElement> {
    let group = space.group();
    let r = group.dim();
    let y = base.point(t)?;
    let mut ydot = base.velocity(t)?;
    ydot.push(0.0);
    let g1 = space.lift(&y)?;
    let xi = group.right_deriv(&g1, &ydot)?;
    let mut b = controls.eval(t)?;
    b.resize(r, 0.0);
    let total = group.algebra().element(b)?.add(&xi)?;
    let ad = group.adjoint(&group.inverse(&g1)?)?;
    Ok(total.transform(&ad).scale(-1.0))
}

/// Largest coefficient outside `𝔥`.
pub fn support_violation(space: &HomogeneousSpace, eta: &AlgebraElement) -> f64 {
    eta.coeffs()
        .iter()
        .enumerate()
        .filter(|(k, _)| !space.subalgebra().contains(k))
        .map(|(_, c)| c.abs())
        .fold(0.0, f64::max)
}

/// Largest `𝔥`-support violation of the subgroup equation over `grid`.
pub fn support_residual(
    space: &HomogeneousSpace,
    controls: &ControlSignal,
    base: &dyn BaseCurve,
    grid: &TimeGrid,
) -> Result<(f64, f64)> {
    let mut worst = (0.0, grid.t0());
    for &t in grid.nodes() {
        let eta = subgroup_velocity(space, controls, base, t)?;
        let v = support_violation(space, &eta);
        if v.is_nan() || v > worst.0 {
            worst = (v, t);
        }
    }
    Ok(worst)
}

/// A group problem split into a base curve and a subgroup equation.
pub struct ReducedProblem<'a> {
    space: &'a HomogeneousSpace,
    controls: ControlSignal,
    base: &'a dyn BaseCurve,
    grid: TimeGrid,
    lifted: Vec<GroupElement>,
    residual: f64,
}

/// Lift `base` through the section and check that the subgroup equation lies in `𝔥`.
pub fn reduce<'a>(
    space: &'a HomogeneousSpace,
    controls: &ControlSignal,
    base: &'a dyn BaseCurve,
    grid: &TimeGrid,
) -> Result<ReducedProblem<'a>> {
    let controls = controls.padded(space.group().dim())?;
    let (c0, c1) = controls.domain();
    let (b0, b1) = base.domain();
    if grid.t0() < c0.max(b0) || grid.t1() > c1.min(b1) {
        return Err(Error::invalid("grid extends beyond the controls or the base curve"));
    }
    let (residual, t) = support_residual(space, &controls, base, grid)?;
    if residual.is_nan() || residual > SUPPORT_LIMIT {
        return Err(Error::Consistency { residual, t });
    }
    let lifted = grid
        .nodes()
        .iter()
        .map(|&t| space.lift(&base.point(t)?))
        .collect::<Result<_>>()?;
    Ok(ReducedProblem {
        space,
        controls,
        base,
        grid: grid.clone(),
        lifted,
        residual,
    })
}

impl ReducedProblem<'_> {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// `g₁(t)` at the grid nodes.
    pub fn lifted(&self) -> &[GroupElement] {
        &self.lifted
    }

    /// Largest `𝔥`-support violation seen on the grid.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn subgroup_rhs(&self, t: f64) -> Result<AlgebraElement> {
        subgroup_velocity(self.space, &self.controls, self.base, t)
    }

    /// First-kind coordinates of `h` on `𝔥`, solved by quadrature.
    ///
    /// Only abelian `𝔥` is handled, where `ḣ h⁻¹ = Σ ḋ_k a_k`.
    pub fn solve_subgroup(&self, tol: f64) -> Result<Trajectory> {
        let sub = self.space.subalgebra();
        let alg = self.space.algebra();
        for &i in sub {
            for &j in sub {
                if (0..alg.dim()).any(|k| alg.c(i, j, k) != 0.0) {
                    return Err(Error::invalid("subgroup equation needs an abelian subalgebra"));
                }
            }
        }
        let breaks = self.controls.breakpoints();
        let nodes = self.grid.nodes();
        let mut d = vec![0.0; sub.len()];
        let mut states = vec![d.clone()];
        for w in nodes.windows(2) {
            for (slot, &k) in d.iter_mut().zip(sub) {
                *slot += quad_with_breaks(|t| Ok(self.subgroup_rhs(t)?.coeffs()[k]), w[0], w[1], &breaks, tol)?;
            }
            states.push(d.clone());
        }
        Ok(Trajectory::new(self.grid.clone(), states))
    }

    /// `g(t) = g₁(t) h(t)` pointwise.
    pub fn recombine(&self, h: &Trajectory) -> Result<Vec<GroupElement>> {
        if h.times() != self.grid.nodes() {
            return Err(Error::invalid("subgroup trajectory is on a different grid"));
        }
        let group = self.space.group();
        self.lifted
            .iter()
            .zip(h.states())
            .map(|(g1, d)| group.compose(g1, &self.space.subgroup_element(d)?))
            .collect()
    }
}

/// The subgroup equation `ḋ = η(y, b)` as polynomials in `y1.., b1..`,
/// one per basis element of `𝔥`.
///
/// With `X = lift(y)`, `ġ₁ g₁⁻¹ = Σ_k ad_X^k Ẋ / (k+1)!` and
/// `Ad(g₁⁻¹) = exp(-ad_X)`; both series terminate since the algebra is nilpotent.
pub fn reduced_equation(space: &HomogeneousSpace) -> Result<Vec<Poly>> {
    let r = space.group().dim();
    let n = space.dim();
    let nvars = n + r;
    let fields = space.fundamental_fields();

    let mut x: Vec<Poly> = (0..n).map(|i| Poly::var(nvars, i)).collect();
    x.push(Poly::zero(nvars));
    let mut xdot = vec![Poly::zero(nvars); r];
    for (k, field) in fields.iter().enumerate() {
        let b = Poly::var(nvars, n + k);
        for (o, comp) in xdot.iter_mut().zip(field.components()) {
            let p =
                Poly::from_expr(comp, nvars).ok_or_else(|| Error::invalid("fundamental field is not polynomial"))?;
            *o = o.add(&p.mul(&b));
        }
    }
    let series = |start: Vec<Poly>, coeff: &dyn Fn(usize) -> f64| -> Vec<Poly> {
        let mut term = start;
        let mut acc: Vec<Poly> = term.iter().map(|p| p.scale(coeff(0))).collect();
        for k in 1..=r {
            term = space.ad_poly(&x, &term);
            if term.iter().all(Poly::is_zero) {
                break;
            }
            acc = acc.iter().zip(&term).map(|(a, t)| a.add(&t.scale(coeff(k)))).collect();
        }
        acc
    };
    let factorial = |k: usize| (1..=k).map(|i| i as f64).product::<f64>();
    let xi = series(xdot, &|k| 1.0 / factorial(k + 1));
    let total: Vec<Poly> = xi
        .iter()
        .enumerate()
        .map(|(k, p)| p.add(&Poly::var(nvars, n + k)))
        .collect();
    let eta = series(total, &|k| {
        let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
        sign / factorial(k)
    });
    for (k, p) in eta.iter().enumerate() {
        if !space.subalgebra().contains(&k) && !p.is_zero() {
            return Err(Error::invalid(format!(
                "reduced equation has a component along a{}",
                k + 1
            )));
        }
    }
    Ok(space.subalgebra().iter().map(|&k| eta[k].clone()).collect())
}

/// Lines `d' = ...` of the reduced subgroup equation.
pub fn reduced_equation_text(space: &HomogeneousSpace) -> Result<Vec<String>> {
    let names = equation_names(space.dim(), space.group().dim());
    let eqs = reduced_equation(space)?;
    let labels: Vec<String> = if eqs.len() == 1 {
        vec!["d".to_string()]
    } else {
        (1..=eqs.len()).map(|i| format!("d{i}")).collect()
    };
    Ok(eqs
        .iter()
        .zip(labels)
        .map(|(p, l)| format!("{l}' = {}", p.display(&names)))
        .collect())
}

/// Everything produced by a reduction run on a grid.
#[derive(Debug, Clone)]
pub struct Reduction {
    pub base: Trajectory,
    pub subgroup: Trajectory,
    pub recombined: Vec<GroupElement>,
    pub residual: f64,
}

/// Solve the projected system, reduce, solve the subgroup equation and recombine.
pub fn reduce_and_solve(
    space: &HomogeneousSpace,
    controls: &ControlSignal,
    grid: &TimeGrid,
    ode_tol: f64,
    quad_tol: f64,
) -> Result<Reduction> {
    let system = project_system(space, controls)?;
    let base = system.solve(ode_tol)?;
    let problem = reduce(space, controls, &base, grid)?;
    let subgroup = problem.solve_subgroup(quad_tol)?;
    let recombined = problem.recombine(&subgroup)?;
    Ok(Reduction {
        base: base.sample(grid)?,
        subgroup,
        recombined,
        residual: problem.residual(),
    })
}
