use crate::evaluator::UfpMap;
use crate::frontend::*;

use super::loops::LoopAdjust;
use super::system::*;
use super::{ConstraintError, GenConfig};

/// Builds the carry-bit-one system.
pub fn gen_ilp(
    p: &LabeledProgram,
    u: &UfpMap,
    links: &DefUseLinks,
    cfg: &GenConfig,
) -> Result<ConstraintSystem, ConstraintError> {
    Gen::new(p, u, links, cfg, SystemKind::Ilp).run()
}

/// Builds the refined system with error widths and min/max carry definitions.
pub fn gen_refined(
    p: &LabeledProgram,
    u: &UfpMap,
    links: &DefUseLinks,
    cfg: &GenConfig,
) -> Result<ConstraintSystem, ConstraintError> {
    Gen::new(p, u, links, cfg, SystemKind::Refined).run()
}

struct Gen<'a> {
    p: &'a LabeledProgram,
    u: &'a UfpMap,
    links: &'a DefUseLinks,
    cfg: &'a GenConfig,
    s: ConstraintSystem,
    refined: bool,
    stmt_index: usize,
}

impl<'a> Gen<'a> {
    fn new(
        p: &'a LabeledProgram,
        u: &'a UfpMap,
        links: &'a DefUseLinks,
        cfg: &'a GenConfig,
        kind: SystemKind,
    ) -> Self {
        Gen {
            p,
            u,
            links,
            cfg,
            s: ConstraintSystem::new(kind),
            refined: kind == SystemKind::Refined,
            stmt_index: 0,
        }
    }

    fn run(mut self) -> Result<ConstraintSystem, ConstraintError> {
        let p_max = Some(self.cfg.p_max as i64);
        for i in 0..self.p.num_points() {
            self.s.var(IntVar::Nsb(ControlPoint(i as u32)), p_max);
        }
        for decl in &self.p.inputs {
            self.seed(decl.point);
        }
        let body = &self.p.body;
        self.block(body)?;
        self.def_use();
        self.check_unvisited()?;
        Ok(self.s)
    }

    fn nsb(&mut self, cp: ControlPoint) -> usize {
        self.s.var(IntVar::Nsb(cp), Some(self.cfg.p_max as i64))
    }

    /// Error widths are bounded below only.
    fn nsbe(&mut self, cp: ControlPoint) -> usize {
        self.s.var(IntVar::Nsbe(cp), None)
    }

    fn ufp(&self, cp: ControlPoint) -> Result<i64, ConstraintError> {
        self.u.ufp(cp).ok_or(ConstraintError::NoRange(cp))
    }

    fn seed(&mut self, cp: ControlPoint) {
        if self.refined {
            let e = self.nsbe(cp);
            self.s.push(e, vec![], vec![1], Origin::Seed);
        }
    }

    fn block(&mut self, stmts: &[Stmt]) -> Result<(), ConstraintError> {
        for s in stmts {
            self.stmt(s)?;
        }
        Ok(())
    }

    fn stmt(&mut self, st: &Stmt) -> Result<(), ConstraintError> {
        let here = self.stmt_index;
        self.stmt_index += 1;
        let root = match st {
            Stmt::Assign { value, .. } => value.point,
            Stmt::While { cond, .. } | Stmt::If { cond, .. } => cond.point,
            Stmt::Require { point, .. } => *point,
        };
        if self.u.get(root).is_none() && !matches!(st, Stmt::Require { .. }) {
            // never executed: nothing to size, nested statements included
            self.unvisited_stmt(st);
            return Ok(());
        }
        match st {
            Stmt::Assign { point, value, .. } => {
                self.expr(value, here)?;
                // the stored value needs what the expression provides
                let (root, def) = (self.nsb(value.point), self.nsb(*point));
                self.s.push(root, vec![(1, def)], vec![], Origin::Statement(here));
                if self.refined {
                    let (re, de) = (self.nsbe(value.point), self.nsbe(*point));
                    self.s.push(de, vec![(1, re)], vec![], Origin::Statement(here));
                }
            }
            Stmt::Require { point, nsb, .. } => {
                let v = self.nsb(*point);
                self.s.push(v, vec![], vec![*nsb as i64], Origin::Requirement);
            }
            Stmt::While { cond, body, .. } => {
                self.cond(cond, here)?;
                self.block(body)?;
            }
            Stmt::If {
                cond,
                then_branch,
                else_branch,
            } => {
                self.cond(cond, here)?;
                self.block(then_branch)?;
                self.block(else_branch)?;
            }
        }
        Ok(())
    }

    fn cond(&mut self, c: &Cond, stmt: usize) -> Result<(), ConstraintError> {
        let cp = self.nsb(c.point);
        self.s
            .push(cp, vec![], vec![self.cfg.cond_nsb as i64], Origin::Condition);
        for side in [&c.lhs, &c.rhs] {
            self.expr(side, stmt)?;
            let v = self.nsb(side.point);
            self.s.push(v, vec![(1, cp)], vec![], Origin::Condition);
            if self.refined {
                // comparison operands carry no error width of their own
                self.nsbe(side.point);
            }
        }
        Ok(())
    }

    /// ufp of an operation result; a result that was always zero borrows the
    /// magnitude its operands imply.
    fn result_ufp(&mut self, e: &Expr) -> Result<i64, ConstraintError> {
        let u = self.ufp(e.point)?;
        let zero = self.u.get(e.point).is_some_and(|x| x.max_abs.is_zero());
        if !zero {
            return Ok(u);
        }
        let implied = match &e.kind {
            ExprKind::Binary(op, a, b) => {
                let (ua, ub) = (self.ufp(a.point)?, self.ufp(b.point)?);
                match op {
                    BinOp::Add | BinOp::Sub => ua.max(ub),
                    BinOp::Mul => ua + ub,
                    BinOp::Div => ua - ub,
                }
            }
            ExprKind::Sqrt(a) => self.ufp(a.point)?.div_euclid(2),
            ExprKind::Neg(a) => self.ufp(a.point)?,
            _ => return Ok(u),
        };
        if !self.s.zero_range_points.contains(&e.point) {
            self.s.zero_range_points.push(e.point);
        }
        Ok(implied.max(u))
    }

    fn expr(&mut self, e: &Expr, stmt: usize) -> Result<(), ConstraintError> {
        let o = Origin::Statement(stmt);
        let r = self.nsb(e.point);
        match &e.kind {
            ExprKind::Literal(_) => {
                self.ufp(e.point)?;
                self.seed(e.point);
            }
            ExprKind::Var(_) => {
                self.ufp(e.point)?;
                if self.refined {
                    self.nsbe(e.point);
                }
            }
            ExprKind::Neg(a) => {
                self.expr(a, stmt)?;
                let av = self.nsb(a.point);
                self.s.push(av, vec![(1, r)], vec![], o);
                if self.refined {
                    let (re, ae) = (self.nsbe(e.point), self.nsbe(a.point));
                    self.s.push(re, vec![(1, ae)], vec![], o);
                }
            }
            ExprKind::Sqrt(a) => {
                self.expr(a, stmt)?;
                let ur = self.result_ufp(e)?;
                let ua = self.ufp(a.point)?;
                let av = self.nsb(a.point);
                self.s.push(av, vec![(1, r)], vec![ua, -2 * ur, -2], o);
                if self.refined {
                    let (re, ae) = (self.nsbe(e.point), self.nsbe(a.point));
                    self.s.push(re, vec![(1, ae)], vec![], o);
                }
            }
            ExprKind::Binary(op, a, b) => {
                self.expr(a, stmt)?;
                self.expr(b, stmt)?;
                let ur = self.result_ufp(e)?;
                let (ua, ub) = (self.ufp(a.point)?, self.ufp(b.point)?);
                let xi = self.s.var(
                    IntVar::Xi {
                        at: e.point,
                        lhs: a.point,
                        rhs: b.point,
                    },
                    None,
                );
                let (av, bv) = (self.nsb(a.point), self.nsb(b.point));
                let (pa, pb) = match op {
                    BinOp::Add | BinOp::Sub => (vec![ua, -ur], vec![ub, -ur]),
                    BinOp::Mul => (vec![ua, ub, -ur], vec![ua, ub, -ur]),
                    BinOp::Div => (vec![ua, -ub, -ur], vec![ua, -ub, -ur]),
                };
                self.s.push(av, vec![(1, r), (1, xi)], pa, o);
                self.s.push(bv, vec![(1, r), (1, xi)], pb, o);
                let additive = matches!(op, BinOp::Add | BinOp::Sub);
                if !self.refined || !additive {
                    self.s.push(xi, vec![], vec![1], o);
                }
                if self.refined {
                    self.refine(*op, e.point, (a.point, ua), (b.point, ub), xi, o);
                }
            }
        }
        Ok(())
    }

    fn refine(
        &mut self,
        op: BinOp,
        r: ControlPoint,
        (a, ua): (ControlPoint, i64),
        (b, ub): (ControlPoint, i64),
        xi: usize,
        o: Origin,
    ) {
        let (re, ae, be) = (self.nsbe(r), self.nsbe(a), self.nsbe(b));
        let (an, bn) = (self.nsb(a), self.nsb(b));
        match op {
            BinOp::Add | BinOp::Sub => {
                self.s.push(re, vec![(1, ae)], vec![], o);
                self.s.push(re, vec![(1, be)], vec![], o);
                self.s
                    .push(re, vec![(1, bn), (-1, an), (1, be), (1, xi)], vec![ua, -ub], o);
                self.s
                    .push(re, vec![(1, an), (-1, bn), (1, ae), (1, xi)], vec![ub, -ua], o);
                self.s.xi_defs.push(XiDef {
                    xi,
                    args: [
                        LinExpr {
                            terms: vec![(1, an), (1, ae)],
                            pieces: vec![ub, -ua],
                        },
                        LinExpr {
                            terms: vec![(1, bn), (1, be)],
                            pieces: vec![ua, -ub],
                        },
                    ],
                });
            }
            BinOp::Mul | BinOp::Div => {
                self.s.push(re, vec![(1, an), (1, ae), (1, be)], vec![-2], o);
                self.s.push(re, vec![(1, bn), (1, be), (1, ae)], vec![-2], o);
            }
        }
    }

    /// Keeps statement numbering aligned when a subtree is skipped.
    fn unvisited_stmt(&mut self, st: &Stmt) {
        let mut n = 0;
        walk_stmts(std::slice::from_ref(st), &mut |_| n += 1);
        self.stmt_index += n - 1;
    }

    /// A requirement whose demand reaches a point that never ran cannot be sized.
    fn check_unvisited(&self) -> Result<(), ConstraintError> {
        let n = self.s.num_vars();
        let mut out = vec![Vec::new(); n];
        for c in &self.s.constraints {
            for (_, v) in &c.rhs.terms {
                out[*v].push(c.lhs);
            }
        }
        for c in self.s.constraints_from(Origin::Requirement) {
            let requirement = self.s.vars[c.lhs].point();
            let mut seen = vec![false; n];
            let mut stack = vec![c.lhs];
            seen[c.lhs] = true;
            while let Some(a) = stack.pop() {
                let var = self.s.vars[a];
                if var.kind() == VarKind::Nsb && self.u.get(var.point()).is_none() {
                    return Err(ConstraintError::Unvisited {
                        point: var.point(),
                        requirement,
                    });
                }
                for &b in &out[a] {
                    if !seen[b] {
                        seen[b] = true;
                        stack.push(b);
                    }
                }
            }
        }
        Ok(())
    }

    fn def_use(&mut self) {
        let adjust = LoopAdjust::compute(&self.s, self.u, self.links, self.cfg.loop_model);
        let reads: Vec<ControlPoint> = self.links.reads().collect();
        for read in reads {
            let defs: Vec<_> = self.links.defs_of(read).collect();
            for (def, kind) in defs {
                // a definition that never ran supplied no value in the analyzed runs
                if self.u.get(def).is_none() {
                    continue;
                }
                let (dv, uv) = (self.nsb(def), self.nsb(read));
                let shift = adjust.shift(def, read);
                let pieces = if shift == 0 { vec![] } else { vec![shift] };
                self.s.push(dv, vec![(1, uv)], pieces, Origin::DefUse);
                if self.refined && kind == LinkKind::Forward {
                    let (de, ue) = (self.nsbe(def), self.nsbe(read));
                    self.s.push(ue, vec![(1, de)], vec![], Origin::DefUse);
                }
            }
        }
    }
}
