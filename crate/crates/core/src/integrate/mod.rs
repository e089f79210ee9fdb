//! Control signals, time grids, quadrature and ODE integration.

mod ode;
mod quad;
mod signal;

pub use ode::{solve_dense, solve_ode, OdeSolution, DEFAULT_ODE_TOL};
pub use quad::{quad, quad_with_breaks, DEFAULT_QUAD_TOL};
pub use signal::{Channel, ControlSignal};

use crate::error::{Error, Result};

/// Strictly increasing output times.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    nodes: Vec<f64>,
}

impl TimeGrid {
    /// `n` equally spaced nodes including both ends.
    pub fn uniform(t0: f64, t1: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid("a time grid needs at least two nodes"));
        }
        if !(t0.is_finite() && t1.is_finite() && t1 > t0) {
            return Err(Error::invalid(format!("invalid time interval [{t0}, {t1}]")));
        }
        let dt = (t1 - t0) / (n - 1) as f64;
        let mut nodes: Vec<f64> = (0..n).map(|k| t0 + dt * k as f64).collect();
        nodes[n - 1] = t1;
        Ok(Self { nodes })
    }

    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::invalid("a time grid needs at least two nodes"));
        }
        if nodes.iter().any(|t| !t.is_finite()) || nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("time grid nodes must be finite and strictly increasing"));
        }
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn t0(&self) -> f64 {
        self.nodes[0]
    }

    pub fn t1(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }
}

/// States sampled on a [`TimeGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    grid: TimeGrid,
    states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn new(grid: TimeGrid, states: Vec<Vec<f64>>) -> Self {
        assert_eq!(grid.len(), states.len(), "one state per grid node");
        Self { grid, states }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn times(&self) -> &[f64] {
        self.grid.nodes()
    }

    pub fn states(&self) -> &[Vec<f64>] {
        &self.states
    }

    pub fn last(&self) -> &[f64] {
        &self.states[self.states.len() - 1]
    }

    pub fn map_states(&self, mut f: impl FnMut(f64, &[f64]) -> Vec<f64>) -> Self {
        let states = self.times().iter().zip(&self.states).map(|(&t, x)| f(t, x)).collect();
        Self::new(self.grid.clone(), states)
    }

    /// Largest componentwise difference to `other`, over common nodes.
    pub fn max_distance(&self, other: &Trajectory) -> f64 {
        self.states
            .iter()
            .zip(&other.states)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }
}
