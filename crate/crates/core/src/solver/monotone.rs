use crate::constraints::ConstraintSystem;

use super::{NsbAssignment, SolveError};

/// Cap for variables without an upper bound.
const UNBOUNDED_CAP: i64 = 1 << 24;

/// Least solution of a system whose constraints all have unit positive coefficients.
///
/// Worklist iteration from zero: every raise is forced, so the fixed point is below every
/// feasible point and minimises any objective with non-negative weights.
pub fn solve_monotone(s: &ConstraintSystem) -> Result<NsbAssignment, SolveError> {
    if !s.is_monotone() {
        return Err(SolveError::NotMonotone);
    }
    let n = s.num_vars();
    let mut dep = vec![Vec::new(); n];
    for (i, c) in s.constraints.iter().enumerate() {
        for (_, v) in &c.rhs.terms {
            dep[*v].push(i);
        }
    }
    let mut x = vec![0i64; n];
    let mut reason: Vec<Option<usize>> = vec![None; n];
    let mut queued = vec![true; s.constraints.len()];
    let mut work: std::collections::VecDeque<usize> = (0..s.constraints.len()).collect();
    while let Some(i) = work.pop_front() {
        queued[i] = false;
        let c = &s.constraints[i];
        let v = c.rhs.eval(&x);
        if v <= x[c.lhs] {
            continue;
        }
        reason[c.lhs] = Some(i);
        if v > s.upper[c.lhs].unwrap_or(UNBOUNDED_CAP) {
            return Err(SolveError::Cycle(explain(s, &x, &reason, c.lhs)));
        }
        x[c.lhs] = v;
        for &k in &dep[c.lhs] {
            if !queued[k] {
                queued[k] = true;
                work.push_back(k);
            }
        }
    }
    Ok(NsbAssignment {
        vars: s.vars.clone(),
        values: x,
        optimal: true,
    })
}

/// Walks the chain of constraints that last raised each variable, back from `start`,
/// until it closes a cycle or reaches a constant.
fn explain(s: &ConstraintSystem, x: &[i64], reason: &[Option<usize>], start: usize) -> Vec<String> {
    let mut chain = Vec::new();
    let mut seen = vec![false; s.num_vars()];
    let mut v = start;
    while let Some(i) = reason[v] {
        if seen[v] {
            // keep only the cycle itself
            let first = chain.iter().position(|&(w, _)| w == v).unwrap_or(0);
            chain.drain(..first);
            break;
        }
        seen[v] = true;
        chain.push((v, i));
        let c = &s.constraints[i];
        // follow the rhs variable that carries the largest value
        match c.rhs.terms.iter().map(|t| t.1).max_by_key(|&w| (reason[w].is_some(), x[w])) {
            Some(w) => v = w,
            None => break,
        }
    }
    chain
        .into_iter()
        .map(|(_, i)| s.format_constraint(&s.constraints[i]))
        .collect()
}
