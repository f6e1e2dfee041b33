use num_rational::BigRational;

use crate::constraints::ConstraintSystem;

use super::program::LinearProgram;
use super::simplex::{DenseSimplex, LpScalar, LpStatus};
use super::{NsbAssignment, Policy, SolveError, SolverConfig};

/// Solution of one node relaxation.
struct Relaxed {
    /// Smallest integer objective the node can reach.
    bound: i64,
    floor: Vec<i64>,
    frac: Vec<f64>,
}

fn relax_dense<T: LpScalar>(lp: &LinearProgram, lo: &[i64], hi: &[Option<i64>]) -> Option<Relaxed> {
    // shift to y = x − lo so every variable starts at zero
    let n = lp.num_vars();
    let mut d = DenseSimplex::<T>::new(n);
    for j in 0..n {
        d.set_cost(j, T::from_i64(lp.objective[j]));
    }
    for r in &lp.rows {
        let mut g = vec![0i64; n];
        g[r.lhs] += 1;
        let mut h = r.constant - lo[r.lhs];
        for (c, v) in &r.terms {
            g[*v] -= c;
            h += c * lo[*v];
        }
        d.add_ge(g.into_iter().map(T::from_i64).collect(), T::from_i64(h));
    }
    for j in 0..n {
        if let Some(u) = hi[j] {
            let mut g = vec![T::zero(); n];
            g[j] = -T::one();
            d.add_ge(g, T::from_i64(lo[j] - u));
        }
    }
    match d.solve() {
        LpStatus::Optimal { x, objective } => {
            let base: i64 = (0..n).map(|j| lp.objective[j] * lo[j]).sum();
            let (f, fr) = objective.split();
            let bound = base + f + (fr > 0.0) as i64;
            let (floor, frac) = x
                .iter()
                .enumerate()
                .map(|(j, v)| {
                    let (f, fr) = v.split();
                    (f + lo[j], fr)
                })
                .unzip();
            Some(Relaxed { bound, floor, frac })
        }
        LpStatus::Infeasible | LpStatus::Unbounded => None,
    }
}

fn relax_sparse(lp: &LinearProgram, lo: &[i64], hi: &[Option<i64>]) -> Result<Option<Relaxed>, SolveError> {
    use minilp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem};
    let mut p = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = (0..lp.num_vars())
        .map(|j| {
            let upper = hi[j].map_or(f64::INFINITY, |u| u as f64);
            p.add_var(lp.objective[j] as f64, (lo[j] as f64, upper))
        })
        .collect();
    for r in &lp.rows {
        let mut e = LinearExpr::empty();
        let mut coef = std::collections::BTreeMap::new();
        *coef.entry(r.lhs).or_insert(0i64) += 1;
        for (c, v) in &r.terms {
            *coef.entry(*v).or_insert(0) -= c;
        }
        for (v, c) in coef {
            if c != 0 {
                e.add(vars[v], c as f64);
            }
        }
        p.add_constraint(e, ComparisonOp::Ge, r.constant as f64);
    }
    match p.solve() {
        Ok(sol) => {
            let bound = (sol.objective() - 1e-6).ceil() as i64;
            let (floor, frac) = vars.iter().map(|v| sol.var_value(*v).split()).unzip();
            Ok(Some(Relaxed { bound, floor, frac }))
        }
        Err(minilp::Error::Infeasible) => Ok(None),
        Err(e) => Err(SolveError::Relaxation(e.to_string())),
    }
}

struct Search<'a> {
    lp: &'a LinearProgram,
    exact: bool,
    dep: Vec<Vec<usize>>,
    best: Option<(i64, Vec<i64>)>,
    nodes: usize,
}

impl Search<'_> {
    fn relax(&self, lo: &[i64], hi: &[Option<i64>]) -> Result<Option<Relaxed>, SolveError> {
        if lo.iter().zip(hi).any(|(l, h)| h.is_some_and(|h| h < *l)) {
            return Ok(None);
        }
        if self.exact {
            Ok(relax_dense::<BigRational>(self.lp, lo, hi))
        } else {
            relax_sparse(self.lp, lo, hi)
        }
    }

    fn offer(&mut self, x: Vec<i64>) {
        let cost = self.lp.cost(&x);
        if self.best.as_ref().is_none_or(|(b, _)| cost < *b) {
            self.best = Some((cost, x));
        }
    }

    /// Integer completion of the relaxation with objective variables rounded up.
    fn round_up(&self, r: &Relaxed, lo: &[i64], hi: &[Option<i64>]) -> Option<Vec<i64>> {
        let mut x: Vec<i64> = (0..r.floor.len())
            .map(|j| {
                let v = r.floor[j] + (r.frac[j] > 0.0) as i64;
                hi[j].map_or(v, |h| v.min(h))
            })
            .collect();
        self.lp.complete(&mut x, lo, hi, &self.dep).then_some(x)
    }

    fn run(&mut self, lo: Vec<i64>, hi: Vec<Option<i64>>, limit: usize) -> Result<(), SolveError> {
        let mut stack = vec![(lo, hi)];
        while let Some((lo, hi)) = stack.pop() {
            self.nodes += 1;
            if self.nodes > limit {
                return Err(SolveError::NodeLimit(limit));
            }
            let Some(r) = self.relax(&lo, &hi)? else { continue };
            if self.best.as_ref().is_some_and(|(b, _)| r.bound >= *b) {
                continue;
            }
            if let Some(x) = self.round_up(&r, &lo, &hi) {
                let done = self.lp.cost(&x) == r.bound;
                self.offer(x);
                if done {
                    continue;
                }
            }
            // branch on the most fractional objective variable, then on any other
            let pick = |want_obj: bool| {
                (0..r.frac.len())
                    .filter(|&j| (self.lp.objective[j] != 0) == want_obj && r.frac[j] > 0.0)
                    .max_by(|&a, &b| {
                        let da = 0.5 - (r.frac[a] - 0.5).abs();
                        let db = 0.5 - (r.frac[b] - 0.5).abs();
                        da.total_cmp(&db).then(b.cmp(&a))
                    })
            };
            let Some(j) = pick(true).or_else(|| pick(false)) else {
                // integral relaxation that failed the exact check: numerical trouble
                let x: Vec<i64> = r.floor.clone();
                if self.lp.feasible_in(&x, &lo, &hi) {
                    self.offer(x);
                    continue;
                }
                return Err(SolveError::Relaxation("integral relaxation is not feasible".into()));
            };
            let (mut lo_up, mut hi_down) = (lo.clone(), hi.clone());
            lo_up[j] = r.floor[j] + 1;
            hi_down[j] = Some(r.floor[j]);
            // depth first, rounding down explored first
            stack.push((lo_up, hi));
            stack.push((lo, hi_down));
        }
        Ok(())
    }
}

/// Optimal integer solution of `s` with carry definitions resolved by `pol`.
///
/// Branch and bound over LP relaxations: exact rationals up to `cfg.exact_max_vars` variables,
/// a floating-point sparse simplex above. Every returned point is checked in integers.
pub fn solve_ilp(s: &ConstraintSystem, pol: &Policy, cfg: &SolverConfig) -> Result<NsbAssignment, SolveError> {
    let lp = LinearProgram::new(s, pol)?;
    let mut search = Search {
        lp: &lp,
        exact: lp.num_vars() <= cfg.exact_max_vars,
        dep: lp.dependents(),
        best: None,
        nodes: 0,
    };
    search.run(vec![0; lp.num_vars()], lp.upper.clone(), cfg.node_limit)?;
    let (_, values) = search.best.ok_or(SolveError::Infeasible)?;
    if let Some(r) = lp.rows.iter().find(|r| !r.holds(&values)) {
        let c = s.constraints.iter().find(|c| c.lhs == r.lhs).map(|c| s.format_constraint(c));
        return Err(SolveError::Verification(c.unwrap_or_else(|| format!("row on {}", s.vars[r.lhs]))));
    }
    Ok(NsbAssignment {
        vars: s.vars.clone(),
        values,
        optimal: true,
    })
}
