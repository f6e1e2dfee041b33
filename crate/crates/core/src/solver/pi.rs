use serde::{Deserialize, Serialize};

use crate::constraints::ConstraintSystem;

use super::program::LinearProgram;
use super::{solve_ilp, NsbAssignment, Policy, SolveError, SolverConfig, XiChoice};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyOutcome {
    pub assignment: NsbAssignment,
    pub policy: Policy,
    pub iterations: usize,
    pub converged: bool,
    /// Σ nsb after each round.
    pub totals: Vec<i64>,
}

/// Carry variables and free error widths set to the least values the policy allows, so the
/// min-arguments are evaluated at a canonical point.
fn normalize(s: &ConstraintSystem, pol: &Policy, a: &mut NsbAssignment) -> Result<(), SolveError> {
    let lp = LinearProgram::new(s, pol)?;
    let lo = vec![0; lp.num_vars()];
    if !lp.complete(&mut a.values, &lo, &lp.upper, &lp.dependents()) {
        return Err(SolveError::Verification("normalized solution".into()));
    }
    Ok(())
}

/// Min-policy iteration on the carry definitions, starting from the all-ones policy.
///
/// A definition switches only when another argument is strictly smaller at the current
/// solution, which keeps that solution feasible, so totals never increase.
pub fn policy_iterate(s: &ConstraintSystem, cfg: &SolverConfig) -> Result<PolicyOutcome, SolveError> {
    let mut policy = Policy::constant_one(s);
    let mut totals = Vec::new();
    let mut best: Option<(NsbAssignment, Policy)> = None;
    for round in 1..=cfg.pi_cap.max(1) {
        let mut a = solve_ilp(s, &policy, cfg)?;
        normalize(s, &policy, &mut a)?;
        totals.push(a.total());
        let mut next = policy.clone();
        for (k, d) in s.xi_defs.iter().enumerate() {
            let args = d.arguments(&a.values);
            let current = args[policy.choices[k].index()];
            let (i, m) = args
                .iter()
                .enumerate()
                .min_by_key(|(i, v)| (**v, *i))
                .map(|(i, v)| (i, *v))
                .unwrap();
            if m < current {
                next.choices[k] = XiChoice::from_index(i);
            }
        }
        let changed = next != policy;
        best = Some((a, policy));
        if !changed {
            let (assignment, policy) = best.unwrap();
            return Ok(PolicyOutcome {
                assignment,
                policy,
                iterations: round,
                converged: true,
                totals,
            });
        }
        policy = next;
    }
    let (assignment, policy) = best.expect("at least one round");
    Ok(PolicyOutcome {
        assignment,
        policy,
        iterations: cfg.pi_cap.max(1),
        converged: false,
        totals,
    })
}
