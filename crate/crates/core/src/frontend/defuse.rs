//! Reaching definitions over the structured AST.

use std::collections::{BTreeMap, BTreeSet};

use super::ast::*;

/// How a definition reaches a read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LinkKind {
    /// Within one pass over the code (no back edge traversed).
    Forward,
    /// Only through the back edge of the given loop.
    Carried(LoopId),
}

/// Reaching-definition sets for every read point, plus loop nesting.
#[derive(Debug, Clone, PartialEq)]
pub struct DefUseLinks {
    reads: BTreeMap<ControlPoint, BTreeMap<ControlPoint, LinkKind>>,
    point_loops: Vec<Vec<LoopId>>,
    loop_conds: Vec<ControlPoint>,
}

impl DefUseLinks {
    /// Every read point (including `require_nsb` points), in label order.
    pub fn reads(&self) -> impl Iterator<Item = ControlPoint> + '_ {
        self.reads.keys().copied()
    }

    pub fn defs_of(&self, read: ControlPoint) -> impl Iterator<Item = (ControlPoint, LinkKind)> + '_ {
        self.reads
            .get(&read)
            .into_iter()
            .flat_map(|m| m.iter().map(|(d, k)| (*d, *k)))
    }

    pub fn def_set(&self, read: ControlPoint) -> BTreeSet<ControlPoint> {
        self.defs_of(read).map(|(d, _)| d).collect()
    }

    pub fn unreached_reads(&self) -> Vec<ControlPoint> {
        self.reads
            .iter()
            .filter(|(_, defs)| defs.is_empty())
            .map(|(r, _)| *r)
            .collect()
    }

    pub fn num_links(&self) -> usize {
        self.reads.values().map(BTreeMap::len).sum()
    }

    /// Loops enclosing `p`, outermost first.
    pub fn loops_of(&self, p: ControlPoint) -> &[LoopId] {
        &self.point_loops[p.index()]
    }

    /// Loops left when control flows from `def` to `read`.
    pub fn exited_loops(&self, def: ControlPoint, read: ControlPoint) -> Vec<LoopId> {
        let inner = self.loops_of(read);
        self.loops_of(def)
            .iter()
            .filter(|l| !inner.contains(l))
            .copied()
            .collect()
    }

    pub fn loop_condition(&self, id: LoopId) -> ControlPoint {
        self.loop_conds[id.0 as usize]
    }

    pub fn loop_count(&self) -> usize {
        self.loop_conds.len()
    }
}

pub fn compute_def_use(p: &LabeledProgram) -> DefUseLinks {
    let mut a = Analysis {
        reads: BTreeMap::new(),
        stack: Vec::new(),
        point_loops: vec![Vec::new(); p.num_points()],
        loop_conds: vec![ControlPoint(0); p.loop_count as usize],
    };
    let mut state: State = vec![BTreeSet::new(); p.var_names.len()];
    for input in &p.inputs {
        state[input.var.index()].insert(input.point);
    }
    a.block(&p.body, state);
    DefUseLinks {
        reads: a.reads,
        point_loops: a.point_loops,
        loop_conds: a.loop_conds,
    }
}

type State = Vec<BTreeSet<ControlPoint>>;

struct Analysis {
    reads: BTreeMap<ControlPoint, BTreeMap<ControlPoint, LinkKind>>,
    /// Enclosing loops with their current fixpoint pass.
    stack: Vec<(LoopId, u32)>,
    point_loops: Vec<Vec<LoopId>>,
    loop_conds: Vec<ControlPoint>,
}

impl Analysis {
    fn enclose(&mut self, p: ControlPoint) {
        self.point_loops[p.index()] = self.stack.iter().map(|(l, _)| *l).collect();
    }

    fn record(&mut self, read: ControlPoint, defs: &BTreeSet<ControlPoint>) {
        let kind = self
            .stack
            .iter()
            .rev()
            .find(|(_, pass)| *pass > 0)
            .map_or(LinkKind::Forward, |(l, _)| LinkKind::Carried(*l));
        let entry = self.reads.entry(read).or_default();
        for d in defs {
            entry.entry(*d).or_insert(kind);
        }
    }

    fn expr(&mut self, e: &Expr, state: &State) {
        e.visit(&mut |n| {
            self.enclose(n.point);
            if let ExprKind::Var(v) = n.kind {
                self.record(n.point, &state[v.index()]);
            }
        });
    }

    fn cond(&mut self, c: &Cond, state: &State) {
        self.enclose(c.point);
        self.expr(&c.lhs, state);
        self.expr(&c.rhs, state);
    }

    fn block(&mut self, stmts: &[Stmt], mut state: State) -> State {
        for s in stmts {
            state = self.stmt(s, state);
        }
        state
    }

    fn stmt(&mut self, s: &Stmt, mut state: State) -> State {
        match s {
            Stmt::Assign { var, point, value } => {
                self.expr(value, &state);
                self.enclose(*point);
                let set = &mut state[var.index()];
                set.clear();
                set.insert(*point);
                state
            }
            Stmt::Require { var, point, .. } => {
                self.enclose(*point);
                self.record(*point, &state[var.index()]);
                state
            }
            Stmt::If {
                cond,
                then_branch,
                else_branch,
            } => {
                self.cond(cond, &state);
                let a = self.block(then_branch, state.clone());
                let b = self.block(else_branch, state);
                join(a, &b)
            }
            Stmt::While { id, cond, body } => {
                self.loop_conds[id.0 as usize] = cond.point;
                let entry = state;
                let mut head = entry.clone();
                let mut pass = 0;
                loop {
                    self.stack.push((*id, pass));
                    self.cond(cond, &head);
                    let out = self.block(body, head.clone());
                    self.stack.pop();
                    let next = join(entry.clone(), &out);
                    if next == head {
                        break head;
                    }
                    head = next;
                    pass += 1;
                }
            }
        }
    }
}

fn join(mut a: State, b: &State) -> State {
    for (x, y) in a.iter_mut().zip(b) {
        x.extend(y.iter().copied());
    }
    a
}
