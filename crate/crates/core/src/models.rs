//! The shipped control systems.
//!
//! - `rigid-body-2osc`: `ẋ1 = b1, ẋ2 = b2, θ̇ = x1² b2 - x2² b1` on `ℝ² × S¹`,
//!   solved through `G₄`.
//! - `brockett`: `ẋ = b1, ẏ = b2, ż = x b2 - y b1`, solved through `H(3)`.
//! - `car-chained`: `ẋ1 = b1, ẋ2 = b2, ẋ3 = b1 x2, ẋ4 = b1 x3`, solved through `Ḡ₄`.
//! - `car-raw`: the front-wheel driven car `(x, y, θ, φ)` with wheelbase 1,
//!   driven by the feedback that turns it into the chained form.
//!
//! Group paths use the closed-form actions with Wei–Norman coordinates;
//! oracle paths integrate the state equations directly.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::groups::{Chart, GroupElement, GroupModel, ModelKind};
use crate::integrate::{solve_ode, ControlSignal, TimeGrid, Trajectory, DEFAULT_ODE_TOL};
use crate::vfields::{parse_field, VectorFieldExpr};
use crate::weinorman::{solve_wn_with, WNSystem, WnOptions};

pub const RIGID_BODY_VARS: [&str; 3] = ["x1", "x2", "theta"];
pub const RIGID_BODY_FIELDS: [&str; 2] = ["1; 0; -(x2^2)", "0; 1; x1^2"];

pub const BROCKETT_VARS: [&str; 3] = ["x", "y", "z"];
pub const BROCKETT_FIELDS: [&str; 2] = ["1; 0; -y", "0; 1; x"];

pub const CHAINED_VARS: [&str; 4] = ["x1", "x2", "x3", "x4"];
pub const CHAINED_FIELDS: [&str; 2] = ["1; 0; x2; x3", "0; 1; 0; 0"];

pub const CAR_VARS: [&str; 4] = ["x", "y", "theta", "phi"];
pub const CAR_FIELDS: [&str; 2] = ["1; tan(theta); sec(theta)*tan(phi); 0", "0; 0; 0; 1"];
/// Input fields of the car after the feedback.
pub const CAR_FEEDBACK_FIELDS: [&str; 2] = [
    "1; tan(theta); sec(theta)*tan(phi); -3*sin(phi)^2*sec(theta)^2*sin(theta)",
    "0; 0; 0; cos(theta)^3*cos(phi)^2",
];
/// The chained coordinate `x2` as a function on the car's configuration space.
pub const CAR_X2: &str = "sec(theta)^3*tan(phi)";

/// Brockett coordinates from points `(y1, y2, y3)` of `G₄/Z` or `Ḡ₄/Z`.
pub fn brockett_from_quotient(y: &[f64]) -> Vec<f64> {
    vec![-y[0], -y[1], -2.0 * y[2]]
}

pub fn quotient_from_brockett(s: &[f64]) -> Vec<f64> {
    vec![-s[0], -s[1], -s[2] / 2.0]
}

/// Angle in `(-π, π]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let w = (theta + PI).rem_euclid(2.0 * PI) - PI;
    if w == -PI {
        PI
    } else {
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Model {
    RigidBody,
    Brockett,
    CarRaw,
    CarChained,
}

impl Model {
    pub const ALL: [Model; 4] = [Model::RigidBody, Model::Brockett, Model::CarRaw, Model::CarChained];

    pub fn name(self) -> &'static str {
        match self {
            Model::RigidBody => "rigid-body-2osc",
            Model::Brockett => "brockett",
            Model::CarRaw => "car-raw",
            Model::CarChained => "car-chained",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Model::ALL
            .into_iter()
            .find(|m| m.name() == name)
            .ok_or_else(|| Error::invalid(format!("unknown model `{name}`")))
    }

    pub fn variables(self) -> &'static [&'static str] {
        match self {
            Model::RigidBody => &RIGID_BODY_VARS,
            Model::Brockett => &BROCKETT_VARS,
            Model::CarRaw => &CAR_VARS,
            Model::CarChained => &CHAINED_VARS,
        }
    }

    pub fn dim(self) -> usize {
        self.variables().len()
    }

    /// Number of control channels.
    pub fn inputs(self) -> usize {
        2
    }

    /// The group whose action solves the model.
    pub fn group_kind(self) -> ModelKind {
        match self {
            Model::RigidBody => ModelKind::G4,
            Model::Brockett => ModelKind::H3,
            Model::CarRaw | Model::CarChained => ModelKind::G4Bar,
        }
    }

    /// Index of a coordinate living on `S¹`.
    pub fn angle_index(self) -> Option<usize> {
        match self {
            Model::RigidBody => Some(2),
            _ => None,
        }
    }

    /// Input vector fields; for `car-raw` these are the raw `Y1, Y2`.
    pub fn fields(self) -> Vec<VectorFieldExpr> {
        let texts = match self {
            Model::RigidBody => &RIGID_BODY_FIELDS,
            Model::Brockett => &BROCKETT_FIELDS,
            Model::CarRaw => &CAR_FIELDS,
            Model::CarChained => &CHAINED_FIELDS,
        };
        texts
            .iter()
            .map(|t| parse_field(t, self.variables()).expect("shipped field parses"))
            .collect()
    }

    pub fn check_state(self, s: &[f64]) -> Result<()> {
        if s.len() != self.dim() {
            return Err(Error::invalid(format!(
                "{} states have {} coordinates, got {}",
                self.name(),
                self.dim(),
                s.len()
            )));
        }
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("state must be finite"));
        }
        if self == Model::CarRaw {
            car_guard(s)?;
        }
        Ok(())
    }

    /// Right-hand side of the state equations for controls `b`.
    ///
    /// For `car-raw`, `b` are the controls after the feedback.
    pub fn rhs(self, s: &[f64], b: &[f64], out: &mut [f64]) -> Result<()> {
        match self {
            Model::RigidBody => {
                out[0] = b[0];
                out[1] = b[1];
                out[2] = s[0] * s[0] * b[1] - s[1] * s[1] * b[0];
            }
            Model::Brockett => {
                out[0] = b[0];
                out[1] = b[1];
                out[2] = s[0] * b[1] - s[1] * b[0];
            }
            Model::CarChained => {
                out[0] = b[0];
                out[1] = b[1];
                out[2] = b[0] * s[1];
                out[3] = b[0] * s[2];
            }
            Model::CarRaw => {
                let c = feedback(s, b)?;
                car_raw_rhs(s, &c, out)?;
            }
        }
        Ok(())
    }

    /// Direct integration of the state equations.
    pub fn solve_oracle(self, controls: &ControlSignal, s0: &[f64], grid: &TimeGrid, tol: f64) -> Result<Trajectory> {
        self.check_state(s0)?;
        check_controls(controls)?;
        let mut b = vec![0.0; 2];
        solve_ode(
            |t, s, out| {
                controls.eval_into(t, &mut b)?;
                self.rhs(s, &b, out).map_err(|e| e.at_time(t))
            },
            s0,
            grid,
            &controls.breakpoints(),
            tol,
        )
    }

    /// Solution through the group: Wei–Norman coordinates pushed through the action.
    pub fn solve_group(self, controls: &ControlSignal, s0: &[f64], grid: &TimeGrid) -> Result<Trajectory> {
        self.solve_group_with(controls, s0, grid, WnOptions::default())
    }

    pub fn solve_group_with(
        self,
        controls: &ControlSignal,
        s0: &[f64],
        grid: &TimeGrid,
        opts: WnOptions,
    ) -> Result<Trajectory> {
        match self {
            Model::RigidBody => rb_solution_with(controls, s0, grid, opts),
            Model::Brockett => brockett_solution_with(controls, s0, grid, opts),
            Model::CarChained => chained_solution_with(controls, s0, grid, opts),
            Model::CarRaw => car_solution_with(controls, s0, grid, opts),
        }
    }

    /// Sup-norm distance between states, measuring angles modulo `2π`.
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .enumerate()
            .map(|(i, (x, y))| {
                if Some(i) == self.angle_index() {
                    wrap_angle(x - y).abs()
                } else {
                    (x - y).abs()
                }
            })
            .fold(0.0, f64::max)
    }

    pub fn trajectory_distance(self, a: &Trajectory, b: &Trajectory) -> f64 {
        a.states()
            .iter()
            .zip(b.states())
            .map(|(x, y)| self.distance(x, y))
            .fold(0.0, f64::max)
    }
}

fn check_controls(controls: &ControlSignal) -> Result<()> {
    if controls.count() != 2 {
        return Err(Error::invalid(format!(
            "the shipped models take 2 controls, got {}",
            controls.count()
        )));
    }
    Ok(())
}

fn wn_coordinates(
    kind: ModelKind,
    controls: &ControlSignal,
    grid: &TimeGrid,
    opts: WnOptions,
) -> Result<(GroupModel, Vec<Vec<f64>>)> {
    check_controls(controls)?;
    let group = GroupModel::new(kind);
    let system = WNSystem::natural(group.algebra().clone(), controls.clone())?;
    let v = solve_wn_with(&system, grid, opts)?.v;
    Ok((group, v))
}

/// The action of `G₄` on `ℝ² × S¹`, from second-kind coordinates `(a, b, c, d)`.
pub fn rb_action(g: &GroupElement, s: &[f64]) -> Result<Vec<f64>> {
    Model::RigidBody.check_state(s)?;
    let g = GroupModel::new(ModelKind::G4).convert(g, Chart::SecondKind)?;
    let [a, b, c, d] = [g.coords[0], g.coords[1], g.coords[2], g.coords[3]];
    let (x1, x2, theta) = (s[0], s[1], s[2]);
    Ok(vec![
        x1 - a,
        x2 - b,
        theta + a * x2 * x2 - b * x1 * x1 - 2.0 * (a * b + c) * x2 - 2.0 * c * x1 + a * b * b - 2.0 * d,
    ])
}

pub fn rb_solution(controls: &ControlSignal, s0: &[f64], grid: &TimeGrid) -> Result<Trajectory> {
    rb_solution_with(controls, s0, grid, WnOptions::default())
}

fn rb_solution_with(controls: &ControlSignal, s0: &[f64], grid: &TimeGrid, opts: WnOptions) -> Result<Trajectory> {
    Model::RigidBody.check_state(s0)?;
    let (group, vs) = wn_coordinates(ModelKind::G4, controls, grid, opts)?;
    let states = vs
        .iter()
        .map(|v| rb_action(&group.from_wn(Chart::SecondKind, &[0, 1, 2, 3], v)?, s0))
        .collect::<Result<_>>()?;
    Ok(Trajectory::new(grid.clone(), states))
}

/// The action of `Ḡ₄` on `ℝ⁴`, from second-kind coordinates `(a, b, c, d)`.
pub fn chained_action(g: &GroupElement, s: &[f64]) -> Result<Vec<f64>> {
    Model::CarChained.check_state(s)?;
    let g = GroupModel::new(ModelKind::G4Bar).convert(g, Chart::SecondKind)?;
    let [a, b, c, d] = [g.coords[0], g.coords[1], g.coords[2], g.coords[3]];
    let (x1, x2, x3, x4) = (s[0], s[1], s[2], s[3]);
    Ok(vec![
        x1 - a,
        x2 - b,
        x3 - a * x2 + a * b + c,
        x4 - a * x3 + a * a * x2 / 2.0 - a * a * b / 2.0 - a * c - d,
    ])
}

pub fn chained_solution(controls: &ControlSignal, s0: &[f64], grid: &TimeGrid) -> Result<Trajectory> {
    chained_solution_with(controls, s0, grid, WnOptions::default())
}

fn chained_solution_with(controls: &ControlSignal, s0: &[f64], grid: &TimeGrid, opts: WnOptions) -> Result<Trajectory> {
    Model::CarChained.check_state(s0)?;
    let (group, vs) = wn_coordinates(ModelKind::G4Bar, controls, grid, opts)?;
    let states = vs
        .iter()
        .map(|v| chained_action(&group.from_wn(Chart::SecondKind, &[0, 1, 2, 3], v)?, s0))
        .collect::<Result<_>>()?;
    Ok(Trajectory::new(grid.clone(), states))
}

/// Brockett states through `H(3)` in first-kind coordinates, where the
/// action on `(y1, y2, y3)` is left multiplication.
pub fn brockett_solution(controls: &ControlSignal, s0: &[f64], grid: &TimeGrid) -> Result<Trajectory> {
    brockett_solution_with(controls, s0, grid, WnOptions::default())
}

fn brockett_solution_with(
    controls: &ControlSignal,
    s0: &[f64],
    grid: &TimeGrid,
    opts: WnOptions,
) -> Result<Trajectory> {
    Model::Brockett.check_state(s0)?;
    let (group, vs) = wn_coordinates(ModelKind::H3, controls, grid, opts)?;
    let y0 = group.element(Chart::FirstKind, quotient_from_brockett(s0))?;
    let states = vs
        .iter()
        .map(|v| {
            let g = group.from_wn(Chart::FirstKind, &[0, 1, 2], v)?;
            Ok(brockett_from_quotient(&group.compose(&g, &y0)?.coords))
        })
        .collect::<Result<_>>()?;
    Ok(Trajectory::new(grid.clone(), states))
}

/// Car trajectory under feedback controls `b`, through the chained form.
pub fn car_solution(controls: &ControlSignal, s0: &[f64], grid: &TimeGrid) -> Result<Trajectory> {
    car_solution_with(controls, s0, grid, WnOptions::default())
}

fn car_solution_with(controls: &ControlSignal, s0: &[f64], grid: &TimeGrid, opts: WnOptions) -> Result<Trajectory> {
    let chained = chained_solution_with(controls, &car_to_chained(s0)?, grid, opts)?;
    let states = chained
        .states()
        .iter()
        .zip(grid.nodes())
        .map(|(s, &t)| chained_to_car(s).map_err(|e| e.at_time(t)))
        .collect::<Result<_>>()?;
    Ok(Trajectory::new(grid.clone(), states))
}

fn car_guard(s: &[f64]) -> Result<()> {
    let (theta, phi) = (s[2], s[3]);
    if !(theta.abs() < FRAC_PI_2 && phi.abs() < FRAC_PI_2) {
        return Err(Error::domain(format!(
            "car state leaves |theta|, |phi| < pi/2: theta = {theta}, phi = {phi}"
        )));
    }
    Ok(())
}

/// `ẋ = c1, ẏ = c1 tan θ, θ̇ = c1 tan φ sec θ, φ̇ = c2` for state `(x, y, θ, φ)`.
pub fn car_raw_rhs(s: &[f64], c: &[f64], out: &mut [f64]) -> Result<()> {
    car_guard(s)?;
    let (theta, phi) = (s[2], s[3]);
    out[0] = c[0];
    out[1] = c[0] * theta.tan();
    out[2] = c[0] * phi.tan() / theta.cos();
    out[3] = c[1];
    Ok(())
}

/// Raw car controls `(c1, c2)` realising chained-form controls `b`.
pub fn feedback(s: &[f64], b: &[f64]) -> Result<[f64; 2]> {
    car_guard(s)?;
    let (theta, phi) = (s[2], s[3]);
    let c2 = -3.0 * phi.sin().powi(2) * theta.sin() / theta.cos().powi(2) * b[0]
        + theta.cos().powi(3) * phi.cos().powi(2) * b[1];
    Ok([b[0], c2])
}

/// `(x, y, θ, φ) ↦ (x, sec³θ tan φ, tan θ, y)`.
pub fn car_to_chained(s: &[f64]) -> Result<Vec<f64>> {
    Model::CarRaw.check_state(s)?;
    let (theta, phi) = (s[2], s[3]);
    Ok(vec![s[0], phi.tan() / theta.cos().powi(3), theta.tan(), s[1]])
}

/// Inverse of [`car_to_chained`]: `φ = arctan(x2 / (1 + x3²)^{3/2})`.
pub fn chained_to_car(s: &[f64]) -> Result<Vec<f64>> {
    Model::CarChained.check_state(s)?;
    let (x2, x3) = (s[1], s[2]);
    Ok(vec![s[0], s[3], x3.atan(), (x2 / (1.0 + x3 * x3).powf(1.5)).atan()])
}

/// Both paths on one grid and their sup-norm deviation.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub group: Trajectory,
    pub oracle: Trajectory,
    pub deviation: f64,
}

pub fn compare_paths(
    model: Model,
    controls: &ControlSignal,
    s0: &[f64],
    grid: &TimeGrid,
    tol: Option<f64>,
) -> Result<Comparison> {
    let group = model.solve_group(controls, s0, grid)?;
    let oracle = model.solve_oracle(controls, s0, grid, tol.unwrap_or(DEFAULT_ODE_TOL))?;
    let deviation = model.trajectory_distance(&group, &oracle);
    Ok(Comparison {
        group,
        oracle,
        deviation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vfields::{lie_bracket, parse_expr, ProbeSet};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    fn g4(chart: Chart, c: [f64; 4]) -> GroupElement {
        GroupModel::new(ModelKind::G4).element(chart, c.to_vec()).unwrap()
    }

    fn unit(t1: f64) -> ControlSignal {
        ControlSignal::constant(0.0, t1, &[1.0, 1.0]).unwrap()
    }

    fn sincos(t1: f64) -> ControlSignal {
        ControlSignal::from_exprs(0.0, t1, &["sin(t)", "cos(t)"]).unwrap()
    }

    #[test]
    fn names_round_trip() {
        for m in Model::ALL {
            assert_eq!(Model::from_name(m.name()).unwrap(), m);
            assert_eq!(m.fields().len(), m.inputs());
            assert_eq!(m.fields()[0].dim(), m.dim());
        }
        assert!(Model::from_name("bicycle").is_err());
    }

    #[test]
    fn rigid_body_action_examples() {
        let s = [0.3, -1.2, 2.0];
        assert_eq!(rb_action(&g4(Chart::SecondKind, [0.0; 4]), &s).unwrap(), s.to_vec());
        let a = 0.7;
        let out = rb_action(&g4(Chart::SecondKind, [a, 0.0, 0.0, 0.0]), &s).unwrap();
        assert!(close(&out, &[s[0] - a, s[1], s[2] + a * s[1] * s[1]], 1e-15));
    }

    #[test]
    fn rigid_body_action_is_an_action() {
        let group = GroupModel::new(ModelKind::G4);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..200 {
            let mut draw = |n: usize| (0..n).map(|_| rng.gen_range(-1.5..1.5)).collect::<Vec<f64>>();
            let g = group.element(Chart::SecondKind, draw(4)).unwrap();
            let h = group.element(Chart::SecondKind, draw(4)).unwrap();
            let s = draw(3);
            let lhs = rb_action(&group.compose(&g, &h).unwrap(), &s).unwrap();
            let rhs = rb_action(&g, &rb_action(&h, &s).unwrap()).unwrap();
            assert!(close(&lhs, &rhs, 1e-10));
            let first = group.convert(&g, Chart::FirstKind).unwrap();
            assert!(close(
                &rb_action(&first, &s).unwrap(),
                &rb_action(&g, &s).unwrap(),
                1e-12
            ));
        }
    }

    #[test]
    fn rigid_body_action_generates_the_input_fields() {
        let fields = Model::RigidBody.fields();
        let s = [0.4, -0.9, 1.3];
        let h = 1e-6;
        for (alpha, field) in fields.iter().enumerate() {
            let mut c = [0.0; 4];
            c[alpha] = -h;
            let plus = rb_action(&g4(Chart::SecondKind, c), &s).unwrap();
            c[alpha] = h;
            let minus = rb_action(&g4(Chart::SecondKind, c), &s).unwrap();
            let fd: Vec<f64> = plus.iter().zip(&minus).map(|(p, m)| (p - m) / (2.0 * h)).collect();
            assert!(close(&fd, &field.eval(&s).unwrap(), 1e-8));
        }
    }

    #[test]
    fn rigid_body_solution_examples() {
        let grid = TimeGrid::uniform(0.0, 1.0, 11).unwrap();
        let zero = ControlSignal::constant(0.0, 1.0, &[0.0, 0.0]).unwrap();
        let s0 = [0.2, 0.1, -0.4];
        assert!(rb_solution(&zero, &s0, &grid)
            .unwrap()
            .states()
            .iter()
            .all(|s| s == &s0));

        let end = rb_solution(&unit(1.0), &[0.0; 3], &grid).unwrap();
        assert!(close(end.last(), &[1.0, 1.0, 0.0], 1e-10));

        let b = ControlSignal::constant(0.0, 1.0, &[1.0, 0.0]).unwrap();
        let end = rb_solution(&b, &[0.0, 1.0, 0.0], &grid).unwrap();
        assert!(close(end.last(), &[1.0, 1.0, -1.0], 1e-10));
        let oracle = Model::RigidBody
            .solve_oracle(&b, &[0.0, 1.0, 0.0], &grid, 1e-10)
            .unwrap();
        assert!(close(oracle.last(), &[1.0, 1.0, -1.0], 1e-9));
    }

    #[test]
    fn printed_general_solution_agrees_with_the_action() {
        let group = GroupModel::new(ModelKind::G4);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let v: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let s: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let (x10, x20, th) = (s[0], s[1], s[2]);
            let printed = [
                x10 + v[0],
                x20 + v[1],
                th - v[0] * x20 * x20 + v[1] * x10 * x10 - 2.0 * (v[0] * v[1] - v[2]) * x20 + 2.0 * v[2] * x10
                    - v[0] * v[1] * v[1]
                    + 2.0 * v[3],
            ];
            let g = group.from_wn(Chart::SecondKind, &[0, 1, 2, 3], &v).unwrap();
            assert!(close(&rb_action(&g, &s).unwrap(), &printed, 1e-12));
        }
    }

    #[test]
    fn chained_action_is_an_action_and_matches_the_printed_solution() {
        let group = GroupModel::new(ModelKind::G4Bar);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let mut draw = |n: usize| (0..n).map(|_| rng.gen_range(-1.5..1.5)).collect::<Vec<f64>>();
            let g = group.element(Chart::SecondKind, draw(4)).unwrap();
            let h = group.element(Chart::SecondKind, draw(4)).unwrap();
            let s = draw(4);
            let lhs = chained_action(&group.compose(&g, &h).unwrap(), &s).unwrap();
            let rhs = chained_action(&g, &chained_action(&h, &s).unwrap()).unwrap();
            assert!(close(&lhs, &rhs, 1e-10));

            let v = draw(4);
            let printed = [
                s[0] + v[0],
                s[1] + v[1],
                s[2] + v[0] * s[1] + v[0] * v[1] - v[2],
                s[3] + v[0] * s[2] + v[0] * v[0] * s[1] / 2.0 + v[0] * v[0] * v[1] / 2.0 - v[0] * v[2] + v[3],
            ];
            let g = group.from_wn(Chart::SecondKind, &[0, 1, 2, 3], &v).unwrap();
            assert!(close(&chained_action(&g, &s).unwrap(), &printed, 1e-12));
        }
    }

    #[test]
    fn chained_solution_examples() {
        let grid = TimeGrid::uniform(0.0, 1.0, 11).unwrap();
        let end = chained_solution(&unit(1.0), &[0.0; 4], &grid).unwrap();
        assert!(close(end.last(), &[1.0, 1.0, 0.5, 1.0 / 6.0], 1e-10));
        let zero = ControlSignal::constant(0.0, 1.0, &[0.0, 0.0]).unwrap();
        let s0 = [0.1, 0.2, 0.3, 0.4];
        assert!(chained_solution(&zero, &s0, &grid)
            .unwrap()
            .states()
            .iter()
            .all(|s| s == &s0));
    }

    #[test]
    fn brockett_matches_the_quotient_system() {
        let grid = TimeGrid::uniform(0.0, 1.0, 11).unwrap();
        let end = brockett_solution(&unit(1.0), &[0.0; 3], &grid).unwrap();
        assert!(close(end.last(), &[1.0, 1.0, 0.0], 1e-12));

        let s0 = [0.3, -0.2, 0.5];
        let space = crate::reduction::HomogeneousSpace::center_quotient(ModelKind::G4).unwrap();
        let controls = sincos(1.0);
        let system = crate::reduction::project_system(&space, &controls).unwrap();
        let y0 = quotient_from_brockett(&s0);
        let projected = solve_ode(|t, y, out| system.rhs(t, y, out), &y0, &grid, &[], 1e-12).unwrap();
        let brockett = Model::Brockett.solve_oracle(&controls, &s0, &grid, 1e-12).unwrap();
        for (y, s) in projected.states().iter().zip(brockett.states()) {
            assert!(close(&brockett_from_quotient(y), s, 1e-9));
        }
        assert!(close(&quotient_from_brockett(&brockett_from_quotient(&y0)), &y0, 0.0));
    }

    #[test]
    fn group_and_oracle_paths_agree() {
        let grid = TimeGrid::uniform(0.0, 2.0, 41).unwrap();
        let controls = sincos(2.0);
        let starts: [(Model, Vec<f64>); 4] = [
            (Model::RigidBody, vec![0.3, -0.4, 0.2]),
            (Model::Brockett, vec![-0.1, 0.45, 0.3]),
            (Model::CarChained, vec![0.2, -0.3, 0.1, 0.4]),
            (Model::CarRaw, vec![0.1, -0.2, 0.3, -0.25]),
        ];
        for (model, s0) in starts {
            let cmp = compare_paths(model, &controls, &s0, &grid, None).unwrap();
            assert!(cmp.deviation <= 1e-6, "{}: {}", model.name(), cmp.deviation);
        }
    }

    #[test]
    fn car_raw_rhs_examples() {
        let mut out = [0.0; 4];
        car_raw_rhs(&[0.0, 0.0, 0.4, 0.3], &[0.0, 2.0], &mut out).unwrap();
        assert_eq!(out, [0.0, 0.0, 0.0, 2.0]);

        let grid = TimeGrid::uniform(0.0, 1.0, 11).unwrap();
        let line = solve_ode(
            |_, s, out| car_raw_rhs(s, &[1.0, 0.0], out),
            &[0.0; 4],
            &grid,
            &[],
            1e-10,
        )
        .unwrap();
        assert!(close(line.last(), &[1.0, 0.0, 0.0, 0.0], 1e-12));

        // θ̇ = tan φ₀ sec θ separates to sin θ(t) = t tan φ₀.
        let phi0: f64 = 0.3;
        let turn = solve_ode(
            |_, s, out| car_raw_rhs(s, &[1.0, 0.0], out),
            &[0.0, 0.0, 0.0, phi0],
            &grid,
            &[],
            1e-12,
        )
        .unwrap();
        for (&t, s) in grid.nodes().iter().zip(turn.states()) {
            assert!((s[2].sin() - t * phi0.tan()).abs() < 1e-10);
            // ẏ = tan θ integrates to (1 - cos θ) / tan φ₀.
            assert!((s[1] - (1.0 - s[2].cos()) / phi0.tan()).abs() < 1e-9);
        }
    }

    #[test]
    fn car_leaving_the_domain_is_a_domain_error() {
        let grid = TimeGrid::uniform(0.0, 5.0, 6).unwrap();
        let err = solve_ode(
            |_, s, out| car_raw_rhs(s, &[0.0, 1.0], out),
            &[0.0, 0.0, 0.0, 0.0],
            &grid,
            &[],
            1e-10,
        )
        .unwrap_err();
        match err {
            // φ reaches π/2 at t ≈ 1.571; a trial stage may overshoot it.
            Error::Domain { t: Some(t), .. } => assert!(t > 1.4 && t < 2.0, "{t}"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(car_to_chained(&[0.0, 0.0, 2.0, 0.0]).unwrap_err().is_domain());
    }

    #[test]
    fn feedback_examples() {
        assert_eq!(feedback(&[0.0; 4], &[0.7, -0.3]).unwrap(), [0.7, -0.3]);
        let s = [0.0, 0.0, PI / 6.0, PI / 6.0];
        let c = feedback(&s, &[1.0, 0.0]).unwrap();
        assert!((c[1] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn coordinate_change_examples() {
        assert_eq!(car_to_chained(&[0.0; 4]).unwrap(), vec![0.0; 4]);
        let q = PI / 4.0;
        let x = car_to_chained(&[0.0, 0.0, q, q]).unwrap();
        assert!((x[1] - 2.0f64.powf(1.5)).abs() < 1e-12 && (x[2] - 1.0).abs() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..500 {
            let s = [
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-1.5..1.5),
                rng.gen_range(-1.5..1.5),
            ];
            let back = chained_to_car(&car_to_chained(&s).unwrap()).unwrap();
            assert!(close(&back, &s, 1e-12), "{s:?} -> {back:?}");
        }
        // The sign-flipped inverse fails the round trip.
        let s = [0.0, 0.0, 0.4, 0.6];
        let x = car_to_chained(&s).unwrap();
        let flipped = -(x[1] / (1.0 + x[2] * x[2]).powf(1.5)).atan();
        assert!((flipped - s[3]).abs() > 1.0);
    }

    #[test]
    fn feedback_closes_on_the_chained_coordinate() {
        let names: Vec<String> = CAR_VARS.iter().map(|s| s.to_string()).collect();
        let f = parse_expr(CAR_X2, &names).unwrap();
        let fields: Vec<_> = CAR_FEEDBACK_FIELDS
            .iter()
            .map(|t| parse_field(t, &CAR_VARS).unwrap())
            .collect();
        let d1 = fields[0].apply(&f);
        let d2 = fields[1].apply(&f);
        let probes = ProbeSet::in_box(&[(-2.0, 2.0), (-2.0, 2.0), (-1.2, 1.2), (-1.2, 1.2)], 32, 3);
        assert!(probes.max_abs(&d1).unwrap() < 1e-8);
        assert!(probes.max_abs(&d2.sub(&crate::vfields::Expr::one())).unwrap() < 1e-8);

        // The feedback fields are X1 = Y1 + f1 Y2 and X2 = f2 Y2.
        for p in probes.points() {
            let c1 = feedback(p, &[1.0, 0.0]).unwrap();
            let c2 = feedback(p, &[0.0, 1.0]).unwrap();
            let mut r1 = [0.0; 4];
            let mut r2 = [0.0; 4];
            car_raw_rhs(p, &c1, &mut r1).unwrap();
            car_raw_rhs(p, &c2, &mut r2).unwrap();
            assert!(close(&r1, &fields[0].eval(p).unwrap(), 1e-12));
            assert!(close(&r2, &fields[1].eval(p).unwrap(), 1e-12));
        }
    }

    #[test]
    fn feedback_equivalence_along_trajectories() {
        let grid = TimeGrid::uniform(0.0, 1.0, 21).unwrap();
        let controls = ControlSignal::from_exprs(0.0, 1.0, &["cos(2*t)", "0.5 - t"]).unwrap();
        let s0 = [0.1, -0.2, 0.25, -0.3];
        let raw = Model::CarRaw.solve_oracle(&controls, &s0, &grid, 1e-11).unwrap();
        let chained = Model::CarChained
            .solve_oracle(&controls, &car_to_chained(&s0).unwrap(), &grid, 1e-11)
            .unwrap();
        for (r, c) in raw.states().iter().zip(chained.states()) {
            assert!(close(&car_to_chained(r).unwrap(), c, 1e-6));
        }
    }

    #[test]
    fn chained_fields_are_the_car_fields_in_new_coordinates() {
        // Push the feedback fields forward by the coordinate change at random points.
        let names: Vec<String> = CAR_VARS.iter().map(|s| s.to_string()).collect();
        let chart: Vec<_> = ["x", CAR_X2, "tan(theta)", "y"]
            .iter()
            .map(|t| parse_expr(t, &names).unwrap())
            .collect();
        let feedback_fields: Vec<_> = CAR_FEEDBACK_FIELDS
            .iter()
            .map(|t| parse_field(t, &CAR_VARS).unwrap())
            .collect();
        let chained = Model::CarChained.fields();
        let probes = ProbeSet::in_box(&[(-2.0, 2.0), (-2.0, 2.0), (-1.2, 1.2), (-1.2, 1.2)], 32, 9);
        for p in probes.points() {
            let x = car_to_chained(p).unwrap();
            for (fb, ch) in feedback_fields.iter().zip(&chained) {
                let pushed: Vec<f64> = chart.iter().map(|c| fb.apply(c).eval(p).unwrap()).collect();
                assert!(close(&pushed, &ch.eval(&x).unwrap(), 1e-9));
            }
        }
        // Lie brackets are preserved by the change of coordinates.
        let b = lie_bracket(&feedback_fields[0], &feedback_fields[1]).unwrap();
        let p = [0.1, 0.2, 0.3, 0.4];
        let pushed: Vec<f64> = chart.iter().map(|c| b.apply(c).eval(&p).unwrap()).collect();
        assert!(close(&pushed, &[0.0, 0.0, -1.0, 0.0], 1e-9));
    }

    #[test]
    fn angles_compare_modulo_two_pi() {
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-15);
        assert!((wrap_angle(-0.5) + 0.5).abs() < 1e-15);
        let d = Model::RigidBody.distance(&[0.0, 0.0, 0.1], &[0.0, 0.0, 0.1 + 2.0 * PI]);
        assert!(d < 1e-14);
        assert!((Model::Brockett.distance(&[0.0, 0.0, 0.1], &[0.0, 0.0, 0.1 + 2.0 * PI]) - 2.0 * PI).abs() < 1e-14);
    }
}
