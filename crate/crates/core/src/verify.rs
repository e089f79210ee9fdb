//! Self-checks for one shipped model.
//!
//! Each check compares a computed quantity with an independent route or a
//! closed form and records the measured discrepancy against its tolerance.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::LieAlgebra;
use crate::error::Result;
use crate::groups::{Chart, GroupModel, ModelKind};
use crate::integrate::{ControlSignal, TimeGrid};
use crate::models::{car_to_chained, compare_paths, Model, CAR_FEEDBACK_FIELDS, CAR_VARS, CAR_X2};
use crate::reduction::{reduce_and_solve, reduced_equation, HomogeneousSpace};
use crate::vfields::{
    closes_algebra, lie_bracket, parse_expr, parse_field, rank_at, Closure, ProbeSet, VectorFieldExpr,
};
use crate::weinorman::{solve_wn, WNSystem};

pub const DEFAULT_VERIFY_SEED: u64 = 2002;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    /// Measured discrepancy, or 0/1 for yes-no checks.
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn within(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            passed: value <= tolerance,
        }
    }

    fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self {
            name: name.into(),
            value: if ok { 0.0 } else { 1.0 },
            tolerance: 0.0,
            passed: ok,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(
            f,
            "{status} {}: {:.3e} (tol {:.1e})",
            self.name, self.value, self.tolerance
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub model: Model,
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "model: {}", self.model.name())?;
        writeln!(f, "seed: {}", self.seed)?;
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        write!(f, "summary: {} passed, {failed} failed", self.checks.len() - failed)
    }
}

/// Largest pointwise difference between two fields over `probes`.
pub fn field_gap(a: &VectorFieldExpr, b: &VectorFieldExpr, probes: &ProbeSet) -> Result<f64> {
    let sa = probes.sample(a)?;
    let sb = probes.sample(b)?;
    Ok(sa.iter().zip(&sb).fold(0.0, |m, (x, y)| m.max((x - y).abs())))
}

fn field(text: &str, vars: &[&str]) -> VectorFieldExpr {
    parse_field(text, vars).expect("shipped field parses")
}

fn sincos(t1: f64) -> ControlSignal {
    ControlSignal::from_exprs(0.0, t1, &["sin(t)", "cos(t)"]).expect("valid controls")
}

fn wn_closed_form(kind: ModelKind, expected: [f64; 4]) -> Result<Check> {
    let alg = GroupModel::new(kind).algebra().clone();
    let sys = WNSystem::natural(alg, ControlSignal::constant(0.0, 1.0, &[1.0, 1.0])?)?;
    let sol = solve_wn(&sys, &TimeGrid::uniform(0.0, 1.0, 2)?)?;
    let err = sol
        .last()
        .iter()
        .zip(expected)
        .fold(0.0, |m: f64, (a, b)| m.max((a - b).abs()));
    Ok(Check::within(
        format!("wei-norman {} unit controls at t=1", kind.name()),
        err,
        1e-9,
    ))
}

fn brackets(
    fields: &[VectorFieldExpr],
    printed: &[(&str, &str)],
    vars: &[&str],
    probes: &ProbeSet,
) -> Result<Vec<Check>> {
    let x3 = lie_bracket(&fields[0], &fields[1])?;
    let x4 = lie_bracket(&fields[0], &x3)?;
    let mut out = Vec::new();
    for ((label, text), computed) in printed.iter().zip([x3, x4]) {
        let gap = field_gap(&computed, &field(text, vars), probes)?;
        out.push(Check::within(format!("bracket {label} = {text}"), gap, 1e-10));
    }
    Ok(out)
}

fn closure(fields: &[VectorFieldExpr], expected: &LieAlgebra, dim: usize) -> Result<Check> {
    let c = closes_algebra(fields, 4, &ProbeSet::default_for(dim))?;
    let ok = match &c {
        Closure::Closed { algebra, .. } => algebra
            .structure()
            .iter()
            .zip(expected.structure())
            .all(|(a, b)| (a - b).abs() < 1e-9),
        Closure::NotClosed { .. } => false,
    };
    Ok(Check::holds("brackets close on the expected structure constants", ok))
}

fn random_starts(model: Model, rng: &mut ChaCha8Rng, count: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| (0..model.dim()).map(|_| rng.gen_range(-0.5..0.5)).collect())
        .collect()
}

fn oracle_equivalence(model: Model, rng: &mut ChaCha8Rng) -> Result<Check> {
    let grid = TimeGrid::uniform(0.0, 2.0, 201)?;
    let controls = sincos(2.0);
    let mut worst: f64 = 0.0;
    for s0 in random_starts(model, rng, 5) {
        worst = worst.max(compare_paths(model, &controls, &s0, &grid, None)?.deviation);
    }
    Ok(Check::within(
        "group path vs ode oracle, 5 starts on [0,2]",
        worst,
        1e-6,
    ))
}

fn reduction_checks(kind: ModelKind, printed: fn(&[f64]) -> f64) -> Result<Vec<Check>> {
    let space = HomogeneousSpace::center_quotient(kind)?;
    let controls = sincos(2.0);
    let grid = TimeGrid::uniform(0.0, 2.0, 41)?;
    let red = reduce_and_solve(&space, &controls, &grid, 1e-12, 1e-12)?;
    let group = space.group();
    let sys = WNSystem::natural(group.algebra().clone(), controls)?;
    let wn = solve_wn(&sys, &grid)?;
    let mut gap: f64 = 0.0;
    for (v, g) in wn.v.iter().zip(&red.recombined) {
        let direct = group.convert(&group.from_wn(Chart::SecondKind, &[0, 1, 2, 3], v)?, Chart::FirstKind)?;
        for (a, b) in direct.coords.iter().zip(&g.coords) {
            gap = gap.max((a - b).abs());
        }
    }
    let eq = reduced_equation(&space)?;
    let probes = ProbeSet::uniform(5, -2.0, 2.0, 32, 17);
    let mut sym: f64 = 0.0;
    for p in probes.points() {
        let vars = [p[0], p[1], p[2], p[3], p[4], 0.0, 0.0];
        sym = sym.max((eq[0].eval(&vars) - printed(p)).abs());
    }
    Ok(vec![
        Check::within("reduce, solve and recombine vs wei-norman on [0,2]", gap, 1e-6),
        Check::within("subgroup support residual", red.residual, 1e-9),
        Check::within("reduced equation vs printed form at 32 probes", sym, 1e-10),
    ])
}

fn rank_everywhere(fields: &[VectorFieldExpr], expected: usize, points: &ProbeSet, label: &str) -> Result<Check> {
    let mut ok = true;
    for p in points.points() {
        ok &= rank_at(fields, p)? == expected;
    }
    Ok(Check::holds(format!("rank {expected} {label}"), ok))
}

/// Run every check that applies to `model`.
pub fn verify_model(model: Model, seed: u64) -> Result<Report> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();
    let vars = model.variables();
    let probes = ProbeSet::uniform(model.dim(), -1.0, 1.0, 32, seed);
    let fields = model.fields();
    match model {
        Model::RigidBody => {
            checks.push(wn_closed_form(ModelKind::G4, [1.0, 1.0, 0.5, 0.5])?);
            checks.extend(brackets(
                &fields,
                &[("X3", "0; 0; 2*(x1 + x2)"), ("X4", "0; 0; 2")],
                vars,
                &probes,
            )?);
            let mut all = fields.clone();
            all.push(field("0; 0; 2*(x1 + x2)", vars));
            all.push(field("0; 0; 2", vars));
            checks.push(closure(&all, &LieAlgebra::g4(), 3)?);
            let pts = ProbeSet::in_box(&[(-3.0, 3.0), (-3.0, 3.0), (0.0, std::f64::consts::TAU)], 100, seed);
            let x124 = [fields[0].clone(), fields[1].clone(), field("0; 0; 2", vars)];
            checks.push(rank_everywhere(&x124, 3, &pts, "for {X1, X2, X4} at 100 points")?);
            checks.push(oracle_equivalence(model, &mut rng)?);
            checks.extend(reduction_checks(ModelKind::G4, |p| {
                ((p[0] + p[1]) * (p[3] * p[1] - p[4] * p[0]) - 6.0 * p[2] * (p[3] + p[4])) / 12.0
            })?);
        }
        Model::CarChained => {
            checks.push(wn_closed_form(ModelKind::G4Bar, [1.0, 1.0, 0.5, 1.0 / 6.0])?);
            checks.extend(brackets(
                &fields,
                &[("X3", "0; 0; -1; 0"), ("X4", "0; 0; 0; 1")],
                vars,
                &probes,
            )?);
            checks.push(closure(&fields, &LieAlgebra::g4bar(), 4)?);
            let x3 = lie_bracket(&fields[0], &fields[1])?;
            let x4 = lie_bracket(&fields[0], &x3)?;
            let quad = [fields[0].clone(), fields[1].clone(), x3, x4];
            let pts = ProbeSet::uniform(4, -3.0, 3.0, 100, seed);
            checks.push(rank_everywhere(
                &quad,
                4,
                &pts,
                "for the chained quadruple at 100 points",
            )?);
            checks.push(oracle_equivalence(model, &mut rng)?);
            checks.extend(reduction_checks(ModelKind::G4Bar, |p| {
                p[3] / 2.0 * (p[0] * p[1] / 6.0 - p[2]) - p[4] * p[0] * p[0] / 12.0
            })?);
        }
        Model::CarRaw => {
            let car_probes = ProbeSet::in_box(&[(-1.0, 1.0), (-1.0, 1.0), (-1.2, 1.2), (-1.2, 1.2)], 32, seed);
            checks.extend(brackets(
                &fields,
                &[
                    ("Y3", "0; 0; -sec(theta)*sec(phi)^2; 0"),
                    ("Y4", "0; sec(theta)^2*sec(phi)^2; 0; 0"),
                ],
                vars,
                &car_probes,
            )?);
            let c = closes_algebra(&fields, 8, &car_probes)?;
            checks.push(Check::holds(
                "raw fields do not close within 8 brackets",
                !c.is_closed(),
            ));
            let y3 = lie_bracket(&fields[0], &fields[1])?;
            let y4 = lie_bracket(&fields[0], &y3)?;
            let quad = [fields[0].clone(), fields[1].clone(), y3, y4];
            checks.push(Check::holds(
                "rank 4 for {Y1, Y2, Y3, Y4} at (0, 0, 0.3, 0.2)",
                rank_at(&quad, &[0.0, 0.0, 0.3, 0.2])? == 4,
            ));
            checks.push(oracle_equivalence(model, &mut rng)?);
            checks.push(feedback_equivalence(&mut rng)?);
            checks.push(feedback_identity(&car_probes)?);
        }
        Model::Brockett => {
            checks.push(oracle_equivalence(model, &mut rng)?);
            let pts = ProbeSet::uniform(3, -3.0, 3.0, 100, seed);
            let x3 = lie_bracket(&fields[0], &fields[1])?;
            let triple = [fields[0].clone(), fields[1].clone(), x3.clone()];
            checks.push(rank_everywhere(
                &triple,
                3,
                &pts,
                "for {X1, X2, [X1, X2]} at 100 points",
            )?);
            checks.push(Check::within(
                "bracket [X1, X2] = 2 d/dz",
                field_gap(&x3, &field("0; 0; 2", vars), &probes)?,
                1e-12,
            ));
        }
    }
    Ok(Report { model, seed, checks })
}

fn feedback_equivalence(rng: &mut ChaCha8Rng) -> Result<Check> {
    let grid = TimeGrid::uniform(0.0, 1.0, 101)?;
    let controls = sincos(1.0);
    let mut worst: f64 = 0.0;
    for s0 in random_starts(Model::CarRaw, rng, 5) {
        let raw = Model::CarRaw.solve_oracle(&controls, &s0, &grid, 1e-11)?;
        let chained = Model::CarChained.solve_oracle(&controls, &car_to_chained(&s0)?, &grid, 1e-11)?;
        for (r, c) in raw.states().iter().zip(chained.states()) {
            for (a, b) in car_to_chained(r)?.iter().zip(c) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    Ok(Check::within(
        "raw car under feedback vs chained form, 5 starts on [0,1]",
        worst,
        1e-6,
    ))
}

fn feedback_identity(probes: &ProbeSet) -> Result<Check> {
    let names: Vec<String> = CAR_VARS.iter().map(|s| s.to_string()).collect();
    let x2 = parse_expr(CAR_X2, &names)?;
    let mut worst: f64 = 0.0;
    for (k, text) in CAR_FEEDBACK_FIELDS.iter().enumerate() {
        let d = field(text, &CAR_VARS).apply(&x2);
        let target = if k == 1 { 1.0 } else { 0.0 };
        for p in probes.points() {
            worst = worst.max((d.eval(p)? - target).abs());
        }
    }
    Ok(Check::within(
        "d/dt sec^3(theta) tan(phi) = b2 at 32 probes",
        worst,
        1e-8,
    ))
}
