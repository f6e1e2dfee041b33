//! Weights of def-use links that cross loop boundaries.

use std::collections::HashMap;

use crate::evaluator::UfpMap;
use crate::frontend::{ControlPoint, DefUseLinks, LinkKind, LoopId};

use super::system::{ConstraintSystem, IntVar, VarKind};
use super::LoopModel;

pub(super) struct LoopAdjust {
    shifts: HashMap<(ControlPoint, ControlPoint), i64>,
}

fn ceil_log2(n: u64) -> i64 {
    if n <= 1 {
        0
    } else {
        (64 - (n - 1).leading_zeros()) as i64
    }
}

impl LoopAdjust {
    /// `s` must already hold every statement constraint; def-use links come from `links`.
    pub(super) fn compute(s: &ConstraintSystem, u: &UfpMap, links: &DefUseLinks, model: LoopModel) -> Self {
        let mut shifts = HashMap::new();
        if model == LoopModel::Plain {
            return LoopAdjust { shifts };
        }
        let growth = |l: LoopId| {
            let cond = links.loop_condition(l);
            ceil_log2(u.get(cond).map_or(0, |e| e.visits))
        };
        // loops in which each def point's variable is carried around the back edge
        let mut carried_in: HashMap<ControlPoint, Vec<LoopId>> = HashMap::new();
        for read in links.reads() {
            for (def, kind) in links.defs_of(read) {
                if let LinkKind::Carried(l) = kind {
                    let v = carried_in.entry(def).or_default();
                    if !v.contains(&l) {
                        v.push(l);
                    }
                }
            }
        }
        for read in links.reads() {
            for (def, kind) in links.defs_of(read) {
                let mut k: i64 = links.exited_loops(def, read).into_iter().map(growth).sum();
                if model == LoopModel::CarriedSkew && kind == LinkKind::Forward {
                    if let Some(ls) = carried_in.get(&def) {
                        let inner = links.loops_of(read);
                        k += ls.iter().filter(|l| inner.contains(l)).map(|&l| growth(l)).sum::<i64>();
                    }
                }
                if k != 0 {
                    shifts.insert((def, read), k);
                }
            }
        }

        // Back-edge links: the demand a read places on its carried def, minus the heaviest
        // demand the def already places on the read within one iteration.
        let g = Graph::build(s, links, &shifts);
        for read in links.reads() {
            for (def, kind) in links.defs_of(read) {
                if let LinkKind::Carried(_) = kind {
                    let (Some(d), Some(r)) = (s.lookup(IntVar::Nsb(def)), s.lookup(IntVar::Nsb(read))) else {
                        continue;
                    };
                    if let Some(w) = g.longest(d, r) {
                        if w > 0 {
                            *shifts.entry((def, read)).or_insert(0) -= w;
                        }
                    }
                }
            }
        }
        LoopAdjust { shifts }
    }

    pub(super) fn shift(&self, def: ControlPoint, read: ControlPoint) -> i64 {
        self.shifts.get(&(def, read)).copied().unwrap_or(0)
    }
}

/// Demand graph without back edges: an edge `a → b` of weight `w` means `nsb(b) ≥ nsb(a) + w`
/// with carry bits taken as 1.
struct Graph {
    adj: Vec<Vec<(usize, i64)>>,
    order: Vec<usize>,
}

impl Graph {
    fn build(s: &ConstraintSystem, links: &DefUseLinks, shifts: &HashMap<(ControlPoint, ControlPoint), i64>) -> Self {
        let n = s.num_vars();
        let mut adj = vec![Vec::new(); n];
        for c in &s.constraints {
            if s.vars[c.lhs].kind() != VarKind::Nsb || !c.is_monotone() {
                continue;
            }
            let carries = c.rhs.terms.iter().filter(|(_, v)| s.vars[*v].kind() == VarKind::Xi).count() as i64;
            for (_, v) in &c.rhs.terms {
                if s.vars[*v].kind() == VarKind::Nsb {
                    adj[*v].push((c.lhs, c.rhs.constant() + carries));
                }
            }
        }
        for read in links.reads() {
            for (def, kind) in links.defs_of(read) {
                if kind != LinkKind::Forward {
                    continue;
                }
                if let (Some(d), Some(r)) = (s.lookup(IntVar::Nsb(def)), s.lookup(IntVar::Nsb(read))) {
                    adj[r].push((d, shifts.get(&(def, read)).copied().unwrap_or(0)));
                }
            }
        }
        // Kahn's algorithm; nodes on a cycle (none for well-formed programs) are left out.
        let mut indeg = vec![0usize; n];
        for es in &adj {
            for (b, _) in es {
                indeg[*b] += 1;
            }
        }
        let mut order: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut head = 0;
        while head < order.len() {
            let a = order[head];
            head += 1;
            for (b, _) in &adj[a] {
                indeg[*b] -= 1;
                if indeg[*b] == 0 {
                    order.push(*b);
                }
            }
        }
        Graph { adj, order }
    }

    fn longest(&self, from: usize, to: usize) -> Option<i64> {
        let mut dist: Vec<Option<i64>> = vec![None; self.adj.len()];
        dist[from] = Some(0);
        for &a in &self.order {
            let Some(da) = dist[a] else { continue };
            for &(b, w) in &self.adj[a] {
                if dist[b].is_none_or(|db| db < da + w) {
                    dist[b] = Some(da + w);
                }
            }
        }
        dist[to]
    }
}
