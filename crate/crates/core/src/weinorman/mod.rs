//! The Wei–Norman system for `g(t) = Π exp(-v_α(t) a_α)`.
//!
//! Writing the solution of `ġ g⁻¹ = -Σ b_α(t) a_α` with `g(t0) = e` as an
//! ordered product of one-parameter subgroups turns the group equation into
//! `M(v) v̇ = b(t)`, where column `α` of `M(v)` is
//! `(Π_{β before α} exp(-v_β ad a_β)) a_α`. When every `ad a_β` is nilpotent
//! the entries of `M(v)` are polynomials and `M(v) = I + N(v)`; if `N` is
//! nilpotent the inverse is a finite Neumann series and the zero pattern of
//! `M(v)⁻¹ b` decides whether the system can be solved by iterated
//! quadratures.

mod poly;

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::algebra::{unit, LieAlgebra};
use crate::error::{Error, Result};
use crate::integrate::{quad_with_breaks, solve_dense, ControlSignal, TimeGrid, Trajectory};
use crate::integrate::{DEFAULT_ODE_TOL, DEFAULT_QUAD_TOL};

pub use poly::Poly;

/// Condition number of `M(v)` above which it is treated as singular.
pub const SINGULAR_CONDITION: f64 = 1e12;

type PolyMatrix = Vec<Vec<Poly>>;

#[derive(Debug, Clone)]
pub struct WNSystem {
    algebra: Arc<LieAlgebra>,
    ordering: Vec<usize>,
    controls: ControlSignal,
}

impl WNSystem {
    /// `ordering` lists zero-based basis indices in factorisation order.
    /// Controls with fewer than `dim` channels are padded with zeros.
    pub fn new(algebra: Arc<LieAlgebra>, ordering: Vec<usize>, controls: ControlSignal) -> Result<Self> {
        let r = algebra.dim();
        let mut seen = vec![false; r];
        if ordering.len() != r {
            return Err(Error::invalid(format!(
                "ordering has {} entries, expected {r}",
                ordering.len()
            )));
        }
        for &o in &ordering {
            if o >= r || seen[o] {
                return Err(Error::invalid(format!("ordering {ordering:?} is not a permutation")));
            }
            seen[o] = true;
        }
        let controls = controls.padded(r)?;
        Ok(Self {
            algebra,
            ordering,
            controls,
        })
    }

    /// Factorisation in the basis order.
    pub fn natural(algebra: Arc<LieAlgebra>, controls: ControlSignal) -> Result<Self> {
        let r = algebra.dim();
        Self::new(algebra, (0..r).collect(), controls)
    }

    pub fn algebra(&self) -> &Arc<LieAlgebra> {
        &self.algebra
    }

    pub fn ordering(&self) -> &[usize] {
        &self.ordering
    }

    pub fn controls(&self) -> &ControlSignal {
        &self.controls
    }

    pub fn dim(&self) -> usize {
        self.algebra.dim()
    }

    /// `M(v)` evaluated numerically.
    pub fn wn_matrix(&self, v: &[f64]) -> Result<DMatrix<f64>> {
        let r = self.dim();
        if v.len() != r {
            return Err(Error::invalid(format!("expected {r} coordinates, got {}", v.len())));
        }
        let mut m = DMatrix::zeros(r, r);
        let mut prefix = DMatrix::<f64>::identity(r, r);
        for &o in &self.ordering {
            m.set_column(o, &prefix.column(o));
            prefix *= self.algebra.exp_ad(&unit(r, o), -v[o])?;
        }
        Ok(m)
    }

    /// `exp(-v_β ad a_β)` with polynomial entries, if `ad a_β` is nilpotent.
    fn symbolic_exp(&self, beta: usize) -> Option<PolyMatrix> {
        let r = self.dim();
        let ad = self.algebra.ad_matrix(&unit(r, beta)).ok()?;
        let scale = ad.amax().max(1.0);
        let mut powers = vec![DMatrix::<f64>::identity(r, r)];
        loop {
            let next = powers.last().expect("nonempty") * &ad;
            if next.amax() <= 1e-12 * scale {
                break;
            }
            if powers.len() > r {
                return None;
            }
            powers.push(next);
        }
        let mut out = vec![vec![Poly::zero(r); r]; r];
        let mut coef = Poly::constant(r, 1.0);
        let minus_v = Poly::var(r, beta).scale(-1.0);
        for (n, p) in powers.iter().enumerate() {
            if n > 0 {
                coef = coef.mul(&minus_v).scale(1.0 / n as f64);
            }
            for i in 0..r {
                for j in 0..r {
                    if p[(i, j)] != 0.0 {
                        out[i][j] = out[i][j].add(&coef.scale(p[(i, j)]));
                    }
                }
            }
        }
        Some(out)
    }

    /// `M(v)` with polynomial entries, if available.
    pub fn symbolic_matrix(&self) -> Option<PolyMatrix> {
        let r = self.dim();
        let mut m = vec![vec![Poly::zero(r); r]; r];
        let mut prefix = identity(r);
        for &o in &self.ordering {
            for i in 0..r {
                m[i][o] = prefix[i][o].clone();
            }
            prefix = mat_mul(&prefix, &self.symbolic_exp(o)?);
        }
        Some(m)
    }

    /// `M(v)⁻¹` by the Neumann series, if `M - I` is nilpotent.
    pub fn symbolic_inverse(&self) -> Option<PolyMatrix> {
        let r = self.dim();
        let m = self.symbolic_matrix()?;
        let mut minus_n = m.clone();
        for (i, row) in minus_n.iter_mut().enumerate() {
            for (j, p) in row.iter_mut().enumerate() {
                let d = if i == j {
                    p.add(&Poly::constant(r, -1.0))
                } else {
                    p.clone()
                };
                *p = d.scale(-1.0);
            }
        }
        let mut inverse = identity(r);
        let mut power = identity(r);
        for _ in 0..r {
            power = mat_mul(&power, &minus_n);
            if power.iter().flatten().all(Poly::is_zero) {
                return Some(inverse);
            }
            inverse = mat_add(&inverse, &power);
        }
        None
    }

    /// Right-hand sides `v̇_α = Σ_β P_αβ(v) b_β`, channels known to vanish
    /// dropped. `None` when no polynomial inverse exists.
    fn symbolic_rows(&self) -> Option<Vec<Vec<(usize, Poly)>>> {
        let inv = self.symbolic_inverse()?;
        Some(
            inv.into_iter()
                .map(|row| {
                    row.into_iter()
                        .enumerate()
                        .filter(|(beta, p)| !p.is_zero() && !self.controls.is_zero_channel(*beta))
                        .collect()
                })
                .collect(),
        )
    }

    /// Structural triangularity test of `M(v)⁻¹ b`.
    pub fn quadrature_plan(&self) -> QuadraturePlan {
        let Some(rows) = self.symbolic_rows() else {
            return QuadraturePlan::NotTriangular("no polynomial inverse of the Wei-Norman matrix".to_string());
        };
        let r = self.dim();
        let mut position = vec![0; r];
        for (k, &o) in self.ordering.iter().enumerate() {
            position[o] = k;
        }
        let mut steps = Vec::with_capacity(r);
        for &alpha in &self.ordering {
            let mut deps: Vec<usize> = rows[alpha].iter().flat_map(|(_, p)| p.variables()).collect();
            deps.sort_unstable_by_key(|&d| position[d]);
            deps.dedup();
            if let Some(&bad) = deps.iter().find(|&&d| position[d] >= position[alpha]) {
                return QuadraturePlan::NotTriangular(format!(
                    "v{}' depends on v{}, which is not earlier in the ordering",
                    alpha + 1,
                    bad + 1
                ));
            }
            steps.push(PlanStep {
                var: alpha,
                deps,
                terms: rows[alpha].clone(),
            });
        }
        QuadraturePlan::Triangular(steps)
    }

    /// The system `v̇ = M(v)⁻¹ b` as text, one line per coordinate.
    pub fn equations(&self) -> Option<Vec<String>> {
        let rows = self.symbolic_rows()?;
        let r = self.dim();
        let vnames: Vec<String> = (1..=r).map(|i| format!("v{i}")).collect();
        Some(
            rows.iter()
                .enumerate()
                .map(|(alpha, row)| {
                    let rhs: Vec<String> = row
                        .iter()
                        .map(|(beta, p)| match p.as_constant() {
                            Some(1.0) => format!("b{}", beta + 1),
                            Some(c) => format!("{c}*b{}", beta + 1),
                            None => format!("b{}*({})", beta + 1, p.display(&vnames)),
                        })
                        .collect();
                    let rhs = if rhs.is_empty() {
                        "0".to_string()
                    } else {
                        rhs.join(" + ")
                    };
                    format!("v{}' = {rhs}", alpha + 1)
                })
                .collect(),
        )
    }

    /// `M(v)⁻¹ b` evaluated numerically, with the singularity check.
    pub fn velocity(&self, t: f64, v: &[f64], b: &[f64]) -> Result<Vec<f64>> {
        let m = self.wn_matrix(v)?;
        let sv = m.clone().singular_values();
        let smax = sv.max();
        let smin = sv.min();
        let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
        if condition > SINGULAR_CONDITION {
            return Err(Error::Singular {
                t,
                v: v.to_vec(),
                condition,
            });
        }
        let x = m
            .lu()
            .solve(&DVector::from_column_slice(b))
            .ok_or_else(|| Error::Singular {
                t,
                v: v.to_vec(),
                condition,
            })?;
        Ok(x.iter().copied().collect())
    }
}

fn identity(r: usize) -> PolyMatrix {
    (0..r)
        .map(|i| {
            (0..r)
                .map(|j| Poly::constant(r, if i == j { 1.0 } else { 0.0 }))
                .collect()
        })
        .collect()
}

fn mat_mul(a: &PolyMatrix, b: &PolyMatrix) -> PolyMatrix {
    let r = a.len();
    let nv = r;
    (0..r)
        .map(|i| {
            (0..r)
                .map(|j| {
                    (0..r).fold(Poly::zero(nv), |acc, k| {
                        if a[i][k].is_zero() || b[k][j].is_zero() {
                            acc
                        } else {
                            acc.add(&a[i][k].mul(&b[k][j]))
                        }
                    })
                })
                .collect()
        })
        .collect()
}

fn mat_add(a: &PolyMatrix, b: &PolyMatrix) -> PolyMatrix {
    a.iter()
        .zip(b)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x.add(y)).collect())
        .collect()
}

/// One coordinate of a triangular plan: `v̇_var = Σ P(v_deps) b_channel`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanStep {
    pub var: usize,
    pub deps: Vec<usize>,
    terms: Vec<(usize, Poly)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum QuadraturePlan {
    Triangular(Vec<PlanStep>),
    NotTriangular(String),
}

impl QuadraturePlan {
    pub fn is_triangular(&self) -> bool {
        matches!(self, QuadraturePlan::Triangular(_))
    }
}

impl fmt::Display for QuadraturePlan {
    /// `[v1, v2, v3(v1), v4(v1,v2)]` with one-based names.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QuadraturePlan::NotTriangular(why) => write!(f, "not triangular: {why}"),
            QuadraturePlan::Triangular(steps) => {
                let items: Vec<String> = steps
                    .iter()
                    .map(|s| {
                        if s.deps.is_empty() {
                            format!("v{}", s.var + 1)
                        } else {
                            let deps: Vec<String> = s.deps.iter().map(|d| format!("v{}", d + 1)).collect();
                            format!("v{}({})", s.var + 1, deps.join(","))
                        }
                    })
                    .collect();
                write!(f, "[{}]", items.join(", "))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    /// Iterated quadrature when the plan is triangular, ODE otherwise.
    #[default]
    Auto,
    Quadrature,
    Ode,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WnOptions {
    pub method: Method,
    pub quad_tol: f64,
    pub ode_tol: f64,
}

impl Default for WnOptions {
    fn default() -> Self {
        Self {
            method: Method::Auto,
            quad_tol: DEFAULT_QUAD_TOL,
            ode_tol: DEFAULT_ODE_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WNTrajectory {
    pub grid: TimeGrid,
    /// `v[k][α]` at node `k`.
    pub v: Vec<Vec<f64>>,
    pub solvable_by_quadratures: bool,
    pub plan: QuadraturePlan,
}

impl WNTrajectory {
    pub fn last(&self) -> &[f64] {
        &self.v[self.v.len() - 1]
    }

    pub fn to_trajectory(&self) -> Trajectory {
        Trajectory::new(self.grid.clone(), self.v.clone())
    }
}

/// Solve with default options.
pub fn solve_wn(system: &WNSystem, grid: &TimeGrid) -> Result<WNTrajectory> {
    solve_wn_with(system, grid, WnOptions::default())
}

pub fn solve_wn_with(system: &WNSystem, grid: &TimeGrid, opts: WnOptions) -> Result<WNTrajectory> {
    let (c0, c1) = system.controls.domain();
    let slack = 1e-12 * c0.abs().max(c1.abs()).max(1.0);
    if grid.t0() < c0 - slack || grid.t1() > c1 + slack {
        return Err(Error::invalid(format!(
            "grid [{}, {}] leaves the control domain [{c0}, {c1}]",
            grid.t0(),
            grid.t1()
        )));
    }
    let plan = system.quadrature_plan();
    let use_quadrature = match opts.method {
        Method::Auto => plan.is_triangular(),
        Method::Quadrature => {
            if !plan.is_triangular() {
                return Err(Error::invalid(format!("quadrature requested but {plan}")));
            }
            true
        }
        Method::Ode => false,
    };
    let v = if use_quadrature {
        let QuadraturePlan::Triangular(steps) = &plan else {
            unreachable!("checked above")
        };
        IteratedQuadrature {
            system,
            steps,
            nodes: grid.nodes(),
            breaks: system.controls.breakpoints(),
            tol: opts.quad_tol,
        }
        .run()?
    } else {
        solve_by_ode(system, grid, opts.ode_tol)?
    };
    Ok(WNTrajectory {
        grid: grid.clone(),
        v,
        solvable_by_quadratures: plan.is_triangular(),
        plan,
    })
}

fn solve_by_ode(system: &WNSystem, grid: &TimeGrid, tol: f64) -> Result<Vec<Vec<f64>>> {
    let r = system.dim();
    let mut b = vec![0.0; r];
    let sol = solve_dense(
        |t, v, dv| {
            system.controls.eval_into(t, &mut b)?;
            dv.copy_from_slice(&system.velocity(t, v, &b)?);
            Ok(())
        },
        &vec![0.0; r],
        grid.t0(),
        grid.t1(),
        &system.controls.breakpoints(),
        tol,
    )?;
    grid.nodes().iter().map(|&t| sol.eval(t)).collect()
}

/// Nested quadrature over the grid intervals. The value of `v_α` inside
/// interval `k` is its node value plus an integral from the left node.
struct IteratedQuadrature<'a> {
    system: &'a WNSystem,
    steps: &'a [PlanStep],
    nodes: &'a [f64],
    breaks: Vec<f64>,
    tol: f64,
}

impl IteratedQuadrature<'_> {
    fn run(&self) -> Result<Vec<Vec<f64>>> {
        let r = self.system.dim();
        let mut out = vec![vec![0.0; r]];
        for k in 0..self.nodes.len() - 1 {
            let mut next = vec![0.0; r];
            for step in self.steps {
                next[step.var] = self.value(step, self.nodes[k + 1], k, &out[k])?;
            }
            out.push(next);
        }
        Ok(out)
    }

    fn step_of(&self, var: usize) -> &PlanStep {
        self.steps
            .iter()
            .find(|s| s.var == var)
            .expect("plan covers every coordinate")
    }

    fn value(&self, step: &PlanStep, s: f64, k: usize, left: &[f64]) -> Result<f64> {
        let tk = self.nodes[k];
        if s == tk {
            return Ok(left[step.var]);
        }
        let integral = quad_with_breaks(
            |sigma| self.integrand(step, sigma, k, left),
            tk,
            s,
            &self.breaks,
            self.tol,
        )?;
        Ok(left[step.var] + integral)
    }

    fn integrand(&self, step: &PlanStep, sigma: f64, k: usize, left: &[f64]) -> Result<f64> {
        let r = self.system.dim();
        let mut v = vec![0.0; r];
        for &d in &step.deps {
            v[d] = self.value(self.step_of(d), sigma, k, left)?;
        }
        let mut acc = 0.0;
        for (beta, p) in &step.terms {
            acc += p.eval(&v) * self.system.controls.eval_channel(*beta, sigma)?;
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Bracket;
    use crate::integrate::Channel;

    fn unit_controls(t1: f64) -> ControlSignal {
        ControlSignal::constant(0.0, t1, &[1.0, 1.0]).unwrap()
    }

    fn g4() -> Arc<LieAlgebra> {
        Arc::new(LieAlgebra::g4())
    }

    fn g4bar() -> Arc<LieAlgebra> {
        Arc::new(LieAlgebra::g4bar())
    }

    #[test]
    fn matrix_at_origin_is_identity() {
        let sys = WNSystem::natural(g4(), unit_controls(1.0)).unwrap();
        assert_eq!(sys.wn_matrix(&[0.0; 4]).unwrap(), DMatrix::identity(4, 4));
    }

    /// Columns from the terminating series `exp(-v ad a1) a2 = a2 - v a3 + v²/2 a4`.
    #[test]
    fn g4_matrix_columns() {
        let sys = WNSystem::natural(g4(), unit_controls(1.0)).unwrap();
        let (v1, v2) = (0.7, -1.3);
        let m = sys.wn_matrix(&[v1, v2, 0.4, 2.0]).unwrap();
        let expected = DMatrix::from_row_slice(
            4,
            4,
            &[
                1.0,
                0.0,
                0.0,
                0.0, //
                0.0,
                1.0,
                0.0,
                0.0, //
                0.0,
                -v1,
                1.0,
                0.0, //
                0.0,
                v1 * v1 / 2.0,
                -v1 - v2,
                1.0,
            ],
        );
        assert!((m - expected).amax() < 1e-15);
    }

    /// `M(v) v̇ = b` with `b3 = b4 = 0` gives the printed right-hand sides.
    #[test]
    fn printed_systems() {
        let points = [[0.3, -0.8, 1.1, 0.2], [-1.2, 0.5, -0.4, 2.0], [2.0, 1.5, 0.0, -1.0]];
        for v in &points {
            for (b1, b2) in [(1.0, 0.0), (0.0, 1.0), (0.6, -1.7)] {
                let b = [b1, b2, 0.0, 0.0];
                let sys = WNSystem::natural(g4(), unit_controls(1.0)).unwrap();
                let vd = sys.velocity(0.0, v, &b).unwrap();
                let expected = [b1, b2, b2 * v[0], b2 * v[0] * (v[0] / 2.0 + v[1])];
                for i in 0..4 {
                    assert!((vd[i] - expected[i]).abs() < 1e-13);
                }
                let sys = WNSystem::natural(g4bar(), unit_controls(1.0)).unwrap();
                let vd = sys.velocity(0.0, v, &b).unwrap();
                let expected = [b1, b2, b2 * v[0], b2 * v[0] * v[0] / 2.0];
                for i in 0..4 {
                    assert!((vd[i] - expected[i]).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn symbolic_equations_text() {
        let sys = WNSystem::natural(g4(), unit_controls(1.0)).unwrap();
        assert_eq!(
            sys.equations().unwrap(),
            vec!["v1' = b1", "v2' = b2", "v3' = b2*(v1)", "v4' = b2*(0.5*v1^2 + v1*v2)"]
        );
        let sys = WNSystem::natural(g4bar(), unit_controls(1.0)).unwrap();
        assert_eq!(sys.equations().unwrap()[3], "v4' = b2*(0.5*v1^2)");
    }

    #[test]
    fn plans() {
        let sys = WNSystem::natural(g4(), unit_controls(1.0)).unwrap();
        assert_eq!(sys.quadrature_plan().to_string(), "[v1, v2, v3(v1), v4(v1,v2)]");
        let sys = WNSystem::natural(g4bar(), unit_controls(1.0)).unwrap();
        assert_eq!(sys.quadrature_plan().to_string(), "[v1, v2, v3(v1), v4(v1)]");
        let ab = Arc::new(LieAlgebra::abelian(3).unwrap());
        let sys = WNSystem::natural(ab, ControlSignal::constant(0.0, 1.0, &[1.0, 2.0, 3.0]).unwrap()).unwrap();
        assert_eq!(sys.quadrature_plan().to_string(), "[v1, v2, v3]");
        let sys = WNSystem::new(g4(), vec![1, 0, 2, 3], unit_controls(1.0)).unwrap();
        assert!(sys.quadrature_plan().is_triangular());
    }

    /// Reversed ordering on 𝔥(3) gives `v̇3 = b3 - v2 b1`, with `v3` first.
    #[test]
    fn reversed_heisenberg_ordering_is_not_triangular() {
        let h3 = Arc::new(LieAlgebra::h3());
        let sys = WNSystem::new(
            h3,
            vec![2, 1, 0],
            ControlSignal::constant(0.0, 1.0, &[1.0, 1.0]).unwrap(),
        )
        .unwrap();
        let plan = sys.quadrature_plan();
        assert!(!plan.is_triangular(), "{plan}");
        let grid = TimeGrid::uniform(0.0, 1.0, 5).unwrap();
        let tr = solve_wn(&sys, &grid).unwrap();
        assert!(!tr.solvable_by_quadratures);
    }

    #[test]
    fn non_nilpotent_algebra_falls_back_to_ode() {
        // [a1, a2] = a2: affine group of the line.
        let aff = Arc::new(
            LieAlgebra::from_brackets(vec!["a1".into(), "a2".into()], &[Bracket::new(0, 1, vec![(1, 1.0)])]).unwrap(),
        );
        let u = ControlSignal::constant(0.0, 1.0, &[1.0, 1.0]).unwrap();
        let sys = WNSystem::natural(aff, u).unwrap();
        assert!(!sys.quadrature_plan().is_triangular());
        let tr = solve_wn(&sys, &TimeGrid::uniform(0.0, 1.0, 3).unwrap()).unwrap();
        // M = diag(1, e^{-v1}), so v1 = t and v2' = e^t.
        let last = tr.last();
        assert!((last[0] - 1.0).abs() < 1e-9);
        assert!((last[1] - (std::f64::consts::E - 1.0)).abs() < 1e-9);
    }

    #[test]
    fn zero_controls_give_zero() {
        let sys = WNSystem::natural(g4(), ControlSignal::constant(0.0, 1.0, &[0.0, 0.0]).unwrap()).unwrap();
        let tr = solve_wn(&sys, &TimeGrid::uniform(0.0, 1.0, 4).unwrap()).unwrap();
        assert!(tr.v.iter().flatten().all(|&x| x == 0.0));
    }

    #[test]
    fn unit_controls_closed_forms() {
        let grid = TimeGrid::uniform(0.0, 1.0, 11).unwrap();
        for (alg, c4) in [(g4(), 0.5), (g4bar(), 1.0 / 6.0)] {
            let sys = WNSystem::natural(alg, unit_controls(1.0)).unwrap();
            let tr = solve_wn(&sys, &grid).unwrap();
            assert!(tr.solvable_by_quadratures);
            for (t, v) in grid.nodes().iter().zip(&tr.v) {
                let expected = [*t, *t, t * t / 2.0, c4 * t * t * t];
                for i in 0..4 {
                    assert!((v[i] - expected[i]).abs() < 1e-12, "t={t} {v:?}");
                }
            }
        }
    }

    #[test]
    fn quadrature_and_ode_paths_agree() {
        let u = ControlSignal::from_exprs(0.0, 2.0, &["sin(t)", "cos(t)"]).unwrap();
        let grid = TimeGrid::uniform(0.0, 2.0, 21).unwrap();
        for alg in [g4(), g4bar()] {
            let sys = WNSystem::natural(alg, u.clone()).unwrap();
            let q = solve_wn_with(
                &sys,
                &grid,
                WnOptions {
                    method: Method::Quadrature,
                    ..Default::default()
                },
            )
            .unwrap();
            let ode = WnOptions {
                method: Method::Ode,
                ode_tol: 1e-12,
                ..Default::default()
            };
            let o = solve_wn_with(&sys, &grid, ode).unwrap();
            let d = q.to_trajectory().max_distance(&o.to_trajectory());
            assert!(d < 1e-9, "{d:e}");
        }
    }

    #[test]
    fn piecewise_controls_by_quadrature() {
        let u = ControlSignal::new(
            0.0,
            2.0,
            vec![
                Channel::piecewise(vec![1.0], vec![1.0, 0.0]).unwrap(),
                Channel::piecewise(vec![1.0], vec![0.0, 1.0]).unwrap(),
            ],
        )
        .unwrap();
        let sys = WNSystem::natural(g4bar(), u).unwrap();
        let tr = solve_wn(&sys, &TimeGrid::uniform(0.0, 2.0, 3).unwrap()).unwrap();
        // v1 = 1 after t = 1, then v3 = ∫ v1 b2 = 1 and v4 = ∫ v1²/2 b2 = 1/2.
        let last = tr.last();
        let expected = [1.0, 1.0, 1.0, 0.5];
        for i in 0..4 {
            assert!((last[i] - expected[i]).abs() < 1e-12, "{last:?}");
        }
    }

    #[test]
    fn rejects_bad_orderings() {
        assert!(WNSystem::new(g4(), vec![0, 0, 1, 2], unit_controls(1.0)).is_err());
        assert!(WNSystem::new(g4(), vec![0, 1, 2], unit_controls(1.0)).is_err());
        let sys = WNSystem::natural(g4(), unit_controls(1.0)).unwrap();
        assert!(solve_wn(&sys, &TimeGrid::uniform(0.0, 2.0, 3).unwrap()).is_err());
    }
}
