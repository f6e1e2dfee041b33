use std::fmt;

use serde::{Deserialize, Serialize};

/// Unique label of one syntactic node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ControlPoint(pub u32);

impl ControlPoint {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ControlPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "l{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VarId(pub u32);

impl VarId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LoopId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
        }
    }

    pub fn holds(self, ord: std::cmp::Ordering) -> bool {
        use std::cmp::Ordering::*;
        match self {
            CmpOp::Lt => ord == Less,
            CmpOp::Le => ord != Greater,
            CmpOp::Gt => ord == Greater,
            CmpOp::Ge => ord != Less,
            CmpOp::Eq => ord == Equal,
            CmpOp::Ne => ord != Equal,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub point: ControlPoint,
    pub kind: ExprKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    /// Literal kept exactly as written.
    Literal(String),
    Var(VarId),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Sqrt(Box<Expr>),
}

impl Expr {
    /// Pre-order walk.
    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        match &self.kind {
            ExprKind::Literal(_) | ExprKind::Var(_) => {}
            ExprKind::Binary(_, a, b) => {
                a.visit(f);
                b.visit(f);
            }
            ExprKind::Neg(a) | ExprKind::Sqrt(a) => a.visit(f),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cond {
    pub point: ControlPoint,
    pub op: CmpOp,
    pub lhs: Expr,
    pub rhs: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stmt {
    Assign {
        var: VarId,
        point: ControlPoint,
        value: Expr,
    },
    While {
        id: LoopId,
        cond: Cond,
        body: Vec<Stmt>,
    },
    If {
        cond: Cond,
        then_branch: Vec<Stmt>,
        else_branch: Vec<Stmt>,
    },
    /// `require_nsb(var, nsb)`; the point doubles as a read of `var`.
    Require {
        var: VarId,
        point: ControlPoint,
        nsb: u32,
    },
}

/// What a control point labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PointKind {
    Input(VarId),
    Def(VarId),
    Read(VarId),
    Literal,
    Binary(BinOp),
    Neg,
    Sqrt,
    Compare(CmpOp),
    Require(VarId),
}

impl PointKind {
    pub fn is_definition(self) -> bool {
        matches!(self, PointKind::Input(_) | PointKind::Def(_))
    }

    pub fn read_var(self) -> Option<VarId> {
        match self {
            PointKind::Read(v) | PointKind::Require(v) => Some(v),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InputDecl {
    pub var: VarId,
    pub point: ControlPoint,
}

/// A parsed program with a control point on every value-carrying node.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledProgram {
    pub inputs: Vec<InputDecl>,
    pub body: Vec<Stmt>,
    pub var_names: Vec<String>,
    pub points: Vec<PointKind>,
    /// 1-based (line, column) of each point's token.
    pub spans: Vec<(u32, u32)>,
    pub loop_count: u32,
}

impl LabeledProgram {
    pub fn num_points(&self) -> usize {
        self.points.len()
    }

    pub fn var_name(&self, v: VarId) -> &str {
        &self.var_names[v.index()]
    }

    pub fn var_id(&self, name: &str) -> Option<VarId> {
        self.var_names
            .iter()
            .position(|n| n == name)
            .map(|i| VarId(i as u32))
    }

    pub fn kind(&self, p: ControlPoint) -> PointKind {
        self.points[p.index()]
    }

    /// Every `require_nsb` in program order: (point, variable, bits).
    pub fn requirements(&self) -> Vec<(ControlPoint, VarId, u32)> {
        let mut out = Vec::new();
        walk_stmts(&self.body, &mut |s| {
            if let Stmt::Require { var, point, nsb } = s {
                out.push((*point, *var, *nsb));
            }
        });
        out
    }

    /// Variables assigned anywhere, in first-assignment order.
    pub fn assigned_vars(&self) -> Vec<VarId> {
        let mut seen = vec![false; self.var_names.len()];
        let mut out = Vec::new();
        walk_stmts(&self.body, &mut |s| {
            if let Stmt::Assign { var, .. } = s {
                if !seen[var.index()] {
                    seen[var.index()] = true;
                    out.push(*var);
                }
            }
        });
        out
    }

    pub fn statement_count(&self) -> usize {
        let mut n = 0;
        walk_stmts(&self.body, &mut |_| n += 1);
        n
    }
}

/// Pre-order walk over statements, including nested bodies.
pub fn walk_stmts<'a>(stmts: &'a [Stmt], f: &mut impl FnMut(&'a Stmt)) {
    for s in stmts {
        f(s);
        match s {
            Stmt::While { body, .. } => walk_stmts(body, f),
            Stmt::If {
                then_branch,
                else_branch,
                ..
            } => {
                walk_stmts(then_branch, f);
                walk_stmts(else_branch, f);
            }
            _ => {}
        }
    }
}
