//! Least fixed points, branch-and-bound ILP, policy iteration and LP-file interchange.

mod bnb;
mod lpfile;
mod monotone;
mod pi;
mod program;
mod simplex;

pub use bnb::solve_ilp;
pub use lpfile::{export_lp, parse_solution};
pub use monotone::solve_monotone;
pub use pi::{policy_iterate, PolicyOutcome};
pub use simplex::{DenseSimplex, ExactSimplex, FloatSimplex, LpScalar, LpStatus};

use serde::{Deserialize, Serialize};

use crate::constraints::{ConstraintSystem, IntVar, VarKind};
use crate::frontend::ControlPoint;

/// Which min-argument a carry variable takes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum XiChoice {
    /// `max(args[0], 0)`
    First,
    /// `max(args[1], 0)`
    Second,
    /// The constant 1.
    One,
}

impl XiChoice {
    pub fn index(self) -> usize {
        match self {
            XiChoice::First => 0,
            XiChoice::Second => 1,
            XiChoice::One => 2,
        }
    }

    pub fn from_index(i: usize) -> Self {
        [XiChoice::First, XiChoice::Second, XiChoice::One][i]
    }
}

/// One choice per carry definition, in the order of `ConstraintSystem::xi_defs`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Policy {
    pub choices: Vec<XiChoice>,
}

impl Policy {
    pub fn constant_one(s: &ConstraintSystem) -> Self {
        Policy {
            choices: vec![XiChoice::One; s.xi_defs.len()],
        }
    }
}

/// Integer values for every variable of a system.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NsbAssignment {
    pub vars: Vec<IntVar>,
    pub values: Vec<i64>,
    /// The solver proved the objective minimal.
    pub optimal: bool,
}

impl NsbAssignment {
    pub fn value(&self, v: IntVar) -> Option<i64> {
        self.vars.iter().position(|x| *x == v).map(|i| self.values[i])
    }

    /// Σ nsb, the objective.
    pub fn total(&self) -> i64 {
        self.vars
            .iter()
            .zip(&self.values)
            .filter(|(v, _)| v.kind() == VarKind::Nsb)
            .map(|(_, x)| x)
            .sum()
    }

    /// nsb per control point (0 where the system has no variable).
    pub fn nsb_by_point(&self, num_points: usize) -> Vec<i64> {
        let mut out = vec![0; num_points];
        for (v, x) in self.vars.iter().zip(&self.values) {
            if let IntVar::Nsb(p) = v {
                if p.index() < num_points {
                    out[p.index()] = *x;
                }
            }
        }
        out
    }

    /// Execution width per point: the nsb, at least one bit.
    pub fn point_widths(&self, num_points: usize) -> Vec<u32> {
        self.nsb_by_point(num_points)
            .into_iter()
            .map(|n| n.max(1) as u32)
            .collect()
    }

    pub fn nsb(&self, p: ControlPoint) -> i64 {
        self.value(IntVar::Nsb(p)).unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Branch-and-bound nodes before giving up.
    pub node_limit: usize,
    /// Policy-iteration rounds before giving up.
    pub pi_cap: usize,
    /// Systems with at most this many variables use exact rational relaxations.
    pub exact_max_vars: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            node_limit: 100_000,
            pi_cap: 100,
            exact_max_vars: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SolveError {
    #[error("system is not monotone (negative coefficient or carry definitions)")]
    NotMonotone,
    #[error("infeasible: widths exceed their bound along\n  {}", .0.join("\n  "))]
    Cycle(Vec<String>),
    #[error("infeasible")]
    Infeasible,
    #[error("branch-and-bound node limit of {0} reached")]
    NodeLimit(usize),
    #[error("policy has {got} choices for {expected} carry definitions")]
    PolicyMismatch { got: usize, expected: usize },
    #[error("LP relaxation failed: {0}")]
    Relaxation(String),
    #[error("cannot read solution: {0}")]
    Import(String),
    #[error("solution violates {0}")]
    Verification(String),
}
