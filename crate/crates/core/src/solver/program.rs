use crate::constraints::{ConstraintSystem, LinearConstraint, VarKind};

use super::{Policy, SolveError, XiChoice};

const RUNAWAY: i64 = 1 << 24;

/// `x[lhs] ≥ Σ c·x + constant`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Row {
    pub lhs: usize,
    pub terms: Vec<(i64, usize)>,
    pub constant: i64,
}

impl Row {
    fn from_constraint(c: &LinearConstraint) -> Self {
        Row {
            lhs: c.lhs,
            terms: c.rhs.terms.clone(),
            constant: c.rhs.constant(),
        }
    }

    pub fn eval(&self, x: &[i64]) -> i64 {
        self.constant + self.terms.iter().map(|(c, v)| c * x[*v]).sum::<i64>()
    }

    pub fn holds(&self, x: &[i64]) -> bool {
        x[self.lhs] >= self.eval(x)
    }
}

/// A system with its carry definitions resolved: linear rows over integers in a box,
/// minimising Σ nsb.
#[derive(Debug, Clone)]
pub(crate) struct LinearProgram {
    pub objective: Vec<i64>,
    pub rows: Vec<Row>,
    pub upper: Vec<Option<i64>>,
}

impl LinearProgram {
    pub fn new(s: &ConstraintSystem, pol: &Policy) -> Result<Self, SolveError> {
        if pol.choices.len() != s.xi_defs.len() {
            return Err(SolveError::PolicyMismatch {
                got: pol.choices.len(),
                expected: s.xi_defs.len(),
            });
        }
        let mut rows: Vec<Row> = s.constraints.iter().map(Row::from_constraint).collect();
        for (d, choice) in s.xi_defs.iter().zip(&pol.choices) {
            rows.push(match choice {
                XiChoice::One => Row {
                    lhs: d.xi,
                    terms: vec![],
                    constant: 1,
                },
                XiChoice::First | XiChoice::Second => {
                    let e = &d.args[choice.index()];
                    Row {
                        lhs: d.xi,
                        terms: e.terms.clone(),
                        constant: e.constant(),
                    }
                }
            });
        }
        let objective = s
            .vars
            .iter()
            .map(|v| (v.kind() == VarKind::Nsb) as i64)
            .collect();
        Ok(LinearProgram {
            objective,
            rows,
            upper: s.upper.clone(),
        })
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn cost(&self, x: &[i64]) -> i64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    pub fn feasible_in(&self, x: &[i64], lo: &[i64], hi: &[Option<i64>]) -> bool {
        x.iter()
            .enumerate()
            .all(|(j, v)| *v >= lo[j] && hi[j].is_none_or(|h| *v <= h))
            && self.rows.iter().all(|r| r.holds(x))
    }

    /// Rows indexed by the variables on their right-hand side.
    pub fn dependents(&self) -> Vec<Vec<usize>> {
        let mut dep = vec![Vec::new(); self.num_vars()];
        for (i, r) in self.rows.iter().enumerate() {
            for (_, v) in &r.terms {
                dep[*v].push(i);
            }
        }
        dep
    }

    /// Keeps the objective variables of `x`, resets the rest to `lo` and raises them to the
    /// least values the rows force. Returns whether the result is feasible.
    pub fn complete(&self, x: &mut [i64], lo: &[i64], hi: &[Option<i64>], dep: &[Vec<usize>]) -> bool {
        let free = |j: usize| self.objective[j] == 0;
        for j in 0..x.len() {
            if free(j) {
                x[j] = lo[j];
            }
        }
        let mut queued = vec![true; self.rows.len()];
        let mut work: Vec<usize> = (0..self.rows.len()).collect();
        while let Some(i) = work.pop() {
            queued[i] = false;
            let r = &self.rows[i];
            if !free(r.lhs) {
                continue;
            }
            let v = r.eval(x);
            if v > x[r.lhs] {
                // a free variable running away means a cycle with positive gain
                if hi[r.lhs].is_some_and(|h| v > h) || v > RUNAWAY {
                    return false;
                }
                x[r.lhs] = v;
                for &k in &dep[r.lhs] {
                    if !queued[k] {
                        queued[k] = true;
                        work.push(k);
                    }
                }
            }
        }
        self.feasible_in(x, lo, hi)
    }
}
