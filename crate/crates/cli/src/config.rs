//! Scenario files.
//!
//! A scenario is a TOML document. Controls are written per channel as a
//! number, an expression in `t`, or a table:
//!
//! ```toml
//! model = "rigid-body-2osc"
//! controls = ["sin(t)", { breaks = [0.5], values = [1.0, -1.0] }]
//! initial = [0.0, 0.0, 0.0]
//!
//! [grid]
//! t0 = 0.0
//! t1 = 2.0
//! nodes = 201
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Deserialize;

use driftfree::algebra::{Bracket, LieAlgebra};
use driftfree::integrate::{Channel, ControlSignal, TimeGrid, DEFAULT_ODE_TOL, DEFAULT_QUAD_TOL};
use driftfree::weinorman::Method;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Simulate,
    Wn,
    Reduce,
    Rank,
    Close,
    Verify,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Simulate => "simulate",
            Task::Wn => "wn",
            Task::Reduce => "reduce",
            Task::Rank => "rank",
            Task::Close => "close",
            Task::Verify => "verify",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum ChannelSpec {
    Constant(f64),
    Expr(String),
    Piecewise { breaks: Vec<f64>, values: Vec<f64> },
    Sampled { times: Vec<f64>, values: Vec<f64> },
}

impl ChannelSpec {
    fn build(&self) -> driftfree::Result<Channel> {
        match self {
            ChannelSpec::Constant(c) => Ok(Channel::Constant(*c)),
            ChannelSpec::Expr(text) => Channel::expr(text),
            ChannelSpec::Piecewise { breaks, values } => Channel::piecewise(breaks.clone(), values.clone()),
            ChannelSpec::Sampled { times, values } => Channel::sampled(times.clone(), values.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BracketSpec {
    pub left: String,
    pub right: String,
    /// Basis name to coefficient.
    pub terms: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum AlgebraSpec {
    Named(String),
    Custom {
        names: Vec<String>,
        #[serde(default)]
        brackets: Vec<BracketSpec>,
    },
}

impl AlgebraSpec {
    pub fn build(&self) -> Result<LieAlgebra, CliError> {
        match self {
            AlgebraSpec::Named(name) => Ok(LieAlgebra::by_name(name)?),
            AlgebraSpec::Custom { names, brackets } => {
                let index = |n: &str| {
                    names
                        .iter()
                        .position(|m| m == n)
                        .ok_or_else(|| CliError::Config(format!("bracket refers to unknown basis element `{n}`")))
                };
                let list = brackets
                    .iter()
                    .map(|b| {
                        let terms = b
                            .terms
                            .iter()
                            .map(|(n, &c)| Ok((index(n)?, c)))
                            .collect::<Result<_, CliError>>()?;
                        Ok(Bracket::new(index(&b.left)?, index(&b.right)?, terms))
                    })
                    .collect::<Result<Vec<_>, CliError>>()?;
                Ok(LieAlgebra::from_brackets(names.clone(), &list)?)
            }
        }
    }

    pub fn name(&self) -> String {
        match self {
            AlgebraSpec::Named(n) => n.clone(),
            AlgebraSpec::Custom { names, .. } => format!("custom({})", names.join(", ")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub t0: f64,
    pub t1: f64,
    pub nodes: usize,
}

impl GridSpec {
    pub fn build(&self) -> driftfree::Result<TimeGrid> {
        TimeGrid::uniform(self.t0, self.t1, self.nodes)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub ode: f64,
    pub quad: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            ode: DEFAULT_ODE_TOL,
            quad: DEFAULT_QUAD_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub path: Option<String>,
    #[serde(default = "default_format")]
    pub format: String,
}

fn default_format() -> String {
    "csv".to_string()
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub task: Option<Task>,
    pub model: Option<String>,
    pub algebra: Option<AlgebraSpec>,
    #[serde(default)]
    pub controls: Vec<ChannelSpec>,
    #[serde(default)]
    pub initial: Vec<f64>,
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub tolerances: Tolerances,
    pub seed: Option<u64>,
    /// Wei–Norman factor ordering, one-based.
    pub ordering: Option<Vec<usize>>,
    /// `auto`, `quadrature` or `ode`.
    pub method: Option<String>,
    /// Fields for `rank` and `close`: labels `X1`, `X2`, ... of the model's
    /// bracket family, or component lists over `variables`.
    pub fields: Option<Vec<String>>,
    pub variables: Option<Vec<String>>,
    pub points: Option<Vec<Vec<f64>>>,
    /// Number of random points for `rank`, drawn from `bounds`.
    pub samples: Option<usize>,
    pub bounds: Option<Vec<[f64; 2]>>,
    /// Bracket budget for `close`.
    pub budget: Option<usize>,
    pub output: Option<OutputSpec>,
}

impl FromStr for Scenario {
    type Err = CliError;

    fn from_str(text: &str) -> Result<Self, CliError> {
        let s: Scenario = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        if let Some(out) = &s.output {
            if out.format != "csv" {
                return Err(CliError::Config(format!("unsupported output format `{}`", out.format)));
            }
        }
        Ok(s)
    }
}

impl Scenario {
    pub fn grid(&self) -> Result<TimeGrid, CliError> {
        let g = self
            .grid
            .ok_or_else(|| CliError::Config("missing [grid] section".into()))?;
        Ok(g.build()?)
    }

    pub fn controls(&self, grid: &TimeGrid) -> Result<ControlSignal, CliError> {
        if self.controls.is_empty() {
            return Err(CliError::Config("missing `controls`".into()));
        }
        let channels = self
            .controls
            .iter()
            .map(ChannelSpec::build)
            .collect::<driftfree::Result<_>>()?;
        Ok(ControlSignal::new(grid.t0(), grid.t1(), channels)?)
    }

    pub fn method(&self) -> Result<Method, CliError> {
        match self.method.as_deref() {
            None | Some("auto") => Ok(Method::Auto),
            Some("quadrature") => Ok(Method::Quadrature),
            Some("ode") => Ok(Method::Ode),
            Some(other) => Err(CliError::Config(format!("unknown method `{other}`"))),
        }
    }

    pub fn require_model(&self) -> Result<&str, CliError> {
        self.model
            .as_deref()
            .ok_or_else(|| CliError::Config("missing `model`".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_full_scenario() {
        let s: Scenario = r#"
            task = "wn"
            controls = [1.0, "sin(t)", { breaks = [0.5], values = [1.0, -1.0] }, { times = [0.0, 1.0], values = [0.0, 2.0] }]
            ordering = [2, 1, 3, 4]
            seed = 3
            [algebra]
            names = ["e", "f", "h"]
            brackets = [{ left = "e", right = "f", terms = { h = 1.0 } }]
            [grid]
            t0 = 0.0
            t1 = 1.0
            nodes = 11
            [tolerances]
            ode = 1e-9
        "#
        .parse()
        .unwrap();
        assert_eq!(s.task, Some(Task::Wn));
        assert_eq!(s.controls[0], ChannelSpec::Constant(1.0));
        assert_eq!(s.controls[1], ChannelSpec::Expr("sin(t)".into()));
        assert!(matches!(s.controls[2], ChannelSpec::Piecewise { .. }));
        assert!(matches!(s.controls[3], ChannelSpec::Sampled { .. }));
        assert_eq!(s.tolerances.ode, 1e-9);
        assert_eq!(s.tolerances.quad, DEFAULT_QUAD_TOL);
        let alg = s.algebra.unwrap().build().unwrap();
        assert_eq!(alg.structure(), LieAlgebra::h3().structure());
        let grid = s.grid.unwrap().build().unwrap();
        assert_eq!(grid.len(), 11);
    }

    #[test]
    fn rejects_bad_documents() {
        assert!("task = \"fly\"".parse::<Scenario>().is_err());
        assert!("colour = 3".parse::<Scenario>().is_err());
        assert!("[output]\nformat = \"json\"".parse::<Scenario>().is_err());
        let s: Scenario = "algebra = { names = [\"a\"], brackets = [{ left = \"a\", right = \"b\", terms = {} }] }"
            .parse()
            .unwrap();
        assert!(matches!(s.algebra.unwrap().build(), Err(CliError::Config(_))));
    }
}
