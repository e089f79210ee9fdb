//! Scenario runner behind the `driftfree` binary.

pub mod config;
mod csv;

use driftfree::algebra::LieAlgebra;
use driftfree::groups::{Chart, GroupModel};
use driftfree::models::{wrap_angle, Model};
use driftfree::reduction::{project_system, reduce_and_solve, reduced_equation_text, HomogeneousSpace};
use driftfree::verify::{verify_model, DEFAULT_VERIFY_SEED};
use driftfree::vfields::{closes_algebra, lie_bracket, parse_field_owned, rank_at, Closure, ProbeSet, VectorFieldExpr};
use driftfree::weinorman::{solve_wn_with, WNSystem, WnOptions};

pub use config::{Scenario, Task};
use csv::Table;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Core(#[from] driftfree::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// Process exit status: 2 for configuration, 3 for domain, 4 for numeric errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_domain() => 3,
            CliError::Core(e) if e.is_numeric() => 4,
            CliError::Core(_) | CliError::Config(_) | CliError::Io(_) => 2,
        }
    }
}

/// Command-line settings that override the scenario.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<String>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
}

/// Result of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// CSV for trajectory tasks, the report otherwise.
    pub body: String,
    /// Short summary printed when `body` goes to a file.
    pub summary: Vec<String>,
    /// False when a verification check failed.
    pub passed: bool,
    pub out: Option<String>,
}

pub fn run(task: Task, mut scenario: Scenario, overrides: &Overrides) -> Result<Outcome, CliError> {
    if let Some(t) = scenario.task {
        if t != task {
            return Err(CliError::Config(format!(
                "scenario is for `{t}` but `{task}` was requested"
            )));
        }
    }
    if let Some(tol) = overrides.tol {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(CliError::Config(format!("tolerance must be positive, got {tol}")));
        }
        scenario.tolerances.ode = tol;
        scenario.tolerances.quad = tol;
    }
    if overrides.seed.is_some() {
        scenario.seed = overrides.seed;
    }
    let out = overrides
        .out
        .clone()
        .or_else(|| scenario.output.as_ref().and_then(|o| o.path.clone()));
    let (body, summary, passed) = match task {
        Task::Simulate => table_outcome(simulate(&scenario)?),
        Task::Wn => table_outcome(wn(&scenario)?),
        Task::Reduce => table_outcome(reduce(&scenario)?),
        Task::Rank => (rank(&scenario)?, Vec::new(), true),
        Task::Close => (close(&scenario)?, Vec::new(), true),
        Task::Verify => {
            let model = Model::from_name(scenario.require_model()?)?;
            let report = verify_model(model, scenario.seed.unwrap_or(DEFAULT_VERIFY_SEED))?;
            (format!("{report}\n"), Vec::new(), report.passed())
        }
    };
    Ok(Outcome {
        body,
        summary,
        passed,
        out,
    })
}

fn table_outcome(t: Table) -> (String, Vec<String>, bool) {
    let summary = t.notes().to_vec();
    (t.render(), summary, true)
}

fn wn_options(s: &Scenario) -> Result<WnOptions, CliError> {
    Ok(WnOptions {
        method: s.method()?,
        quad_tol: s.tolerances.quad,
        ode_tol: s.tolerances.ode,
    })
}

fn tolerance_note(s: &Scenario) -> String {
    format!("tolerances: ode={:e}, quad={:e}", s.tolerances.ode, s.tolerances.quad)
}

fn simulate(s: &Scenario) -> Result<Table, CliError> {
    let model = Model::from_name(s.require_model()?)?;
    let grid = s.grid()?;
    let controls = s.controls(&grid)?;
    let s0 = if s.initial.is_empty() {
        vec![0.0; model.dim()]
    } else {
        s.initial.clone()
    };
    let group = model.solve_group_with(&controls, &s0, &grid, wn_options(s)?)?;
    let oracle = model.solve_oracle(&controls, &s0, &grid, s.tolerances.ode)?;

    let names = model.variables();
    let mut columns = vec!["t".to_string()];
    columns.extend(names.iter().map(|n| n.to_string()));
    columns.extend(names.iter().map(|n| format!("oracle_{n}")));
    columns.push("deviation".into());
    let mut table = Table::new(columns);
    let wrap = |state: &[f64]| -> Vec<f64> {
        let mut v = state.to_vec();
        if let Some(i) = model.angle_index() {
            v[i] = wrap_angle(v[i]);
        }
        v
    };
    let mut worst: f64 = 0.0;
    for ((&t, g), o) in grid.nodes().iter().zip(group.states()).zip(oracle.states()) {
        let d = model.distance(g, o);
        worst = worst.max(d);
        let mut row = vec![t];
        row.extend(wrap(g));
        row.extend(wrap(o));
        row.push(d);
        table.push(row);
    }
    table.note(format!("model: {}", model.name()));
    table.note(format!("max deviation: {worst:e}"));
    table.note(tolerance_note(s));
    Ok(table)
}

fn algebra_for(s: &Scenario) -> Result<(String, LieAlgebra), CliError> {
    match (&s.algebra, &s.model) {
        (Some(spec), _) => Ok((spec.name(), spec.build()?)),
        (None, Some(m)) => {
            let kind = Model::from_name(m)?.group_kind();
            Ok((
                kind.name().to_string(),
                GroupModel::new(kind).algebra().as_ref().clone(),
            ))
        }
        (None, None) => Err(CliError::Config("missing `algebra` or `model`".into())),
    }
}

fn wn(s: &Scenario) -> Result<Table, CliError> {
    let (name, algebra) = algebra_for(s)?;
    let r = algebra.dim();
    let grid = s.grid()?;
    let controls = s.controls(&grid)?;
    let ordering = match &s.ordering {
        Some(o) => o
            .iter()
            .map(|&k| {
                k.checked_sub(1)
                    .ok_or_else(|| CliError::Config("ordering is one-based".into()))
            })
            .collect::<Result<Vec<_>, _>>()?,
        None => (0..r).collect(),
    };
    let system = WNSystem::new(std::sync::Arc::new(algebra), ordering, controls)?;
    let sol = solve_wn_with(&system, &grid, wn_options(s)?)?;

    let mut columns = vec!["t".to_string()];
    columns.extend((1..=r).map(|k| format!("v{k}")));
    let mut table = Table::new(columns);
    for (&t, v) in grid.nodes().iter().zip(&sol.v) {
        let mut row = vec![t];
        row.extend(v);
        table.push(row);
    }
    table.note(format!("algebra: {name}"));
    table.note(format!("plan: {}", sol.plan));
    let method = if sol.solvable_by_quadratures {
        "quadrature"
    } else {
        "ode"
    };
    table.note(format!("method: {method}"));
    if let Some(eqs) = system.equations() {
        for e in eqs {
            table.note(e);
        }
    }
    table.note(tolerance_note(s));
    Ok(table)
}

fn space_for(s: &Scenario) -> Result<HomogeneousSpace, CliError> {
    match (&s.algebra, &s.model) {
        (Some(spec), _) => Ok(HomogeneousSpace::by_name(&spec.name())?),
        (None, Some(m)) => Ok(HomogeneousSpace::center_quotient(Model::from_name(m)?.group_kind())?),
        (None, None) => Err(CliError::Config("missing `algebra` or `model`".into())),
    }
}

fn reduce(s: &Scenario) -> Result<Table, CliError> {
    let space = space_for(s)?;
    let group = space.group();
    let grid = s.grid()?;
    let controls = s.controls(&grid)?;
    let red = reduce_and_solve(&space, &controls, &grid, s.tolerances.ode, s.tolerances.quad)?;

    let system = WNSystem::natural(group.algebra().clone(), controls.clone())?;
    let wn = solve_wn_with(&system, &grid, wn_options(s)?)?;
    let order: Vec<usize> = (0..group.dim()).collect();

    let mut columns = vec!["t".to_string()];
    columns.extend(space.variable_names());
    columns.push("d".into());
    columns.extend((1..=group.dim()).map(|k| format!("g{k}")));
    columns.push("deviation".into());
    let mut table = Table::new(columns);
    let mut worst: f64 = 0.0;
    for (k, &t) in grid.nodes().iter().enumerate() {
        let direct = group.convert(&group.from_wn(Chart::SecondKind, &order, &wn.v[k])?, Chart::FirstKind)?;
        let g = &red.recombined[k];
        let d = g
            .coords
            .iter()
            .zip(&direct.coords)
            .fold(0.0, |m: f64, (a, b)| m.max((a - b).abs()));
        worst = worst.max(d);
        let mut row = vec![t];
        row.extend(&red.base.states()[k]);
        row.extend(&red.subgroup.states()[k]);
        row.extend(&g.coords);
        row.push(d);
        table.push(row);
    }
    table.note(format!("group: {}", group.name()));
    for e in project_system(&space, &controls)?.equations()? {
        table.note(e);
    }
    for e in reduced_equation_text(&space)? {
        table.note(e);
    }
    table.note(format!("support residual: {:e}", red.residual));
    table.note(format!("max deviation from wei-norman: {worst:e}"));
    table.note(tolerance_note(s));
    Ok(table)
}

/// Fields named by the scenario, with their labels and variables.
fn field_family(s: &Scenario, default_count: usize) -> Result<(Vec<String>, Vec<VectorFieldExpr>, usize), CliError> {
    if let Some(vars) = &s.variables {
        let texts = s
            .fields
            .as_ref()
            .ok_or_else(|| CliError::Config("`variables` given without `fields`".into()))?;
        let fields = texts
            .iter()
            .map(|t| parse_field_owned(t, vars.clone()))
            .collect::<driftfree::Result<Vec<_>>>()?;
        return Ok((texts.clone(), fields, vars.len()));
    }
    let model = Model::from_name(s.require_model()?)?;
    let inputs = model.fields();
    let x3 = lie_bracket(&inputs[0], &inputs[1])?;
    let x4 = lie_bracket(&inputs[0], &x3)?;
    let x5 = lie_bracket(&inputs[1], &x3)?;
    let family = [inputs[0].clone(), inputs[1].clone(), x3, x4, x5];
    let labels: Vec<String> = match &s.fields {
        Some(l) => l.clone(),
        None => (1..=default_count).map(|k| format!("X{k}")).collect(),
    };
    let fields = labels
        .iter()
        .map(|l| {
            let idx = l
                .strip_prefix('X')
                .or_else(|| l.strip_prefix('Y'))
                .and_then(|n| n.parse::<usize>().ok())
                .filter(|&n| (1..=family.len()).contains(&n))
                .ok_or_else(|| CliError::Config(format!("unknown field label `{l}`; use X1..X5")))?;
            Ok(family[idx - 1].clone())
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok((labels, fields, model.dim()))
}

fn fmt_point(p: &[f64]) -> String {
    let items: Vec<String> = p.iter().map(|x| format!("{x}")).collect();
    format!("({})", items.join(", "))
}

fn rank(s: &Scenario) -> Result<String, CliError> {
    let (labels, fields, dim) = field_family(s, 4)?;
    let points = match &s.points {
        Some(p) => p.clone(),
        None => {
            let bounds: Vec<[f64; 2]> = s.bounds.clone().unwrap_or_else(|| vec![[-1.0, 1.0]; dim]);
            if bounds.len() != dim {
                return Err(CliError::Config(format!("`bounds` needs {dim} intervals")));
            }
            let boxed: Vec<(f64, f64)> = bounds.iter().map(|b| (b[0], b[1])).collect();
            let seed = s.seed.unwrap_or(DEFAULT_VERIFY_SEED);
            ProbeSet::in_box(&boxed, s.samples.unwrap_or(100), seed)
                .points()
                .to_vec()
        }
    };
    let mut out = format!("fields: {}\n", labels.join(", "));
    let mut ranks = Vec::new();
    for p in &points {
        if p.len() != dim {
            return Err(CliError::Config(format!(
                "point {} needs {dim} coordinates",
                fmt_point(p)
            )));
        }
        let k = rank_at(&fields, p)?;
        out.push_str(&format!("rank at {} = {k}\n", fmt_point(p)));
        ranks.push(k);
    }
    let lo = ranks.iter().min().copied().unwrap_or(0);
    let hi = ranks.iter().max().copied().unwrap_or(0);
    out.push_str(&format!("points: {}\nmin rank: {lo}\nmax rank: {hi}\n", ranks.len()));
    Ok(out)
}

fn close(s: &Scenario) -> Result<String, CliError> {
    let (labels, fields, dim) = field_family(s, 2)?;
    let probes = ProbeSet::uniform(dim, -1.0, 1.0, 32, s.seed.unwrap_or(DEFAULT_VERIFY_SEED));
    let budget = s.budget.unwrap_or(8);
    let mut out = format!("fields: {}\nbudget: {budget}\n", labels.join(", "));
    match closes_algebra(&fields, budget, &probes)? {
        Closure::Closed {
            algebra,
            fields,
            dependent_margin,
            independent_margin,
        } => {
            out.push_str(&format!("closed: yes\ndimension: {}\n", fields.len()));
            let r = algebra.dim();
            for i in 0..r {
                for j in i + 1..r {
                    let terms: Vec<String> = (0..r)
                        .filter(|&k| algebra.c(i, j, k) != 0.0)
                        .map(|k| format!("{} X{}", algebra.c(i, j, k), k + 1))
                        .collect();
                    if !terms.is_empty() {
                        out.push_str(&format!("[X{}, X{}] = {}\n", i + 1, j + 1, terms.join(" + ")));
                    }
                }
            }
            for (k, f) in fields.iter().enumerate() {
                out.push_str(&format!("X{} = {f}\n", k + 1));
            }
            out.push_str(&format!(
                "dependent margin: {dependent_margin:e}\nindependent margin: {independent_margin:e}\n"
            ));
        }
        Closure::NotClosed {
            fields,
            added,
            independent_margin,
        } => {
            out.push_str(&format!(
                "closed: no\nfields generated: {}\nbrackets added: {added}\nindependent margin: {independent_margin:e}\n",
                fields.len()
            ));
        }
    }
    Ok(out)
}
