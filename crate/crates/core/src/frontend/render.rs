//! Source rendering, optionally with `|nsb|` annotations after every labeled token.

use std::fmt::Write;

use super::ast::*;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("no width assigned to control point {0}")]
pub struct MissingWidth(pub ControlPoint);

/// Renders `p` with each variable, literal and operator suffixed by `|n|`.
pub fn emit_annotated(
    p: &LabeledProgram,
    width: impl Fn(ControlPoint) -> Option<u32>,
) -> Result<String, MissingWidth> {
    let mut r = Renderer {
        p,
        width: &|cp| width(cp).map(Some).ok_or(MissingWidth(cp)),
        out: String::new(),
    };
    r.block(&p.body, 0)?;
    Ok(r.out)
}

/// Renders `p` as plain source.
pub fn render(p: &LabeledProgram) -> String {
    let mut r = Renderer {
        p,
        width: &|_| Ok(None),
        out: String::new(),
    };
    r.block(&p.body, 0).expect("plain rendering cannot fail");
    r.out
}

/// Removes `|n|` annotations, giving back parseable source.
pub fn strip_annotations(text: &str) -> String {
    let b = text.as_bytes();
    let mut out = String::with_capacity(text.len());
    let mut i = 0;
    while i < b.len() {
        if b[i] == b'|' {
            let mut j = i + 1;
            while j < b.len() && b[j].is_ascii_digit() {
                j += 1;
            }
            if j > i + 1 && j < b.len() && b[j] == b'|' {
                i = j + 1;
                continue;
            }
        }
        let ch = text[i..].chars().next().unwrap();
        out.push(ch);
        i += ch.len_utf8();
    }
    out
}

type WidthFn<'a> = &'a dyn Fn(ControlPoint) -> Result<Option<u32>, MissingWidth>;

struct Renderer<'a> {
    p: &'a LabeledProgram,
    width: WidthFn<'a>,
    out: String,
}

fn prec(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Binary(BinOp::Add | BinOp::Sub, ..) => 1,
        ExprKind::Binary(BinOp::Mul | BinOp::Div, ..) => 2,
        _ => 3,
    }
}

impl Renderer<'_> {
    fn tag(&mut self, cp: ControlPoint) -> Result<String, MissingWidth> {
        Ok(match (self.width)(cp)? {
            Some(n) => format!("|{n}|"),
            None => String::new(),
        })
    }

    fn block(&mut self, stmts: &[Stmt], depth: usize) -> Result<(), MissingWidth> {
        for s in stmts {
            self.stmt(s, depth)?;
        }
        Ok(())
    }

    fn indent(&mut self, depth: usize) {
        for _ in 0..depth {
            self.out.push_str("  ");
        }
    }

    fn stmt(&mut self, s: &Stmt, depth: usize) -> Result<(), MissingWidth> {
        self.indent(depth);
        match s {
            Stmt::Assign { var, point, value } => {
                let t = self.tag(*point)?;
                let e = self.expr(value)?;
                writeln!(self.out, "{}{t} = {e};", self.p.var_name(*var)).unwrap();
            }
            Stmt::Require { var, point, nsb } => {
                let t = self.tag(*point)?;
                writeln!(self.out, "require_nsb({}{t}, {nsb});", self.p.var_name(*var)).unwrap();
            }
            Stmt::While { cond, body, .. } => {
                let c = self.cond(cond)?;
                writeln!(self.out, "while ({c}) {{").unwrap();
                self.block(body, depth + 1)?;
                self.indent(depth);
                self.out.push_str("}\n");
            }
            Stmt::If {
                cond,
                then_branch,
                else_branch,
            } => {
                let c = self.cond(cond)?;
                writeln!(self.out, "if ({c}) {{").unwrap();
                self.block(then_branch, depth + 1)?;
                self.indent(depth);
                if else_branch.is_empty() {
                    self.out.push_str("}\n");
                } else {
                    self.out.push_str("} else {\n");
                    self.block(else_branch, depth + 1)?;
                    self.indent(depth);
                    self.out.push_str("}\n");
                }
            }
        }
        Ok(())
    }

    fn cond(&mut self, c: &Cond) -> Result<String, MissingWidth> {
        let t = self.tag(c.point)?;
        let l = self.expr(&c.lhs)?;
        let r = self.expr(&c.rhs)?;
        Ok(format!("{l} {}{t} {r}", c.op.symbol()))
    }

    fn expr(&mut self, e: &Expr) -> Result<String, MissingWidth> {
        let t = self.tag(e.point)?;
        Ok(match &e.kind {
            ExprKind::Literal(s) => format!("{s}{t}"),
            ExprKind::Var(v) => format!("{}{t}", self.p.var_name(*v)),
            ExprKind::Binary(op, a, b) => {
                let mine = prec(e);
                let mut l = self.expr(a)?;
                if prec(a) < mine {
                    l = format!("({l})");
                }
                let mut r = self.expr(b)?;
                if prec(b) <= mine {
                    r = format!("({r})");
                }
                format!("{l} {}{t} {r}", op.symbol())
            }
            ExprKind::Neg(a) => format!("-{t}({})", self.expr(a)?),
            ExprKind::Sqrt(a) => format!("sqrt{t}({})", self.expr(a)?),
        })
    }
}
