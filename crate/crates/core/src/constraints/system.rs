use std::collections::HashMap;
use std::fmt::{self, Write};

use serde::{Deserialize, Serialize};

use crate::frontend::ControlPoint;

/// Integer unknown of a constraint system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum IntVar {
    Nsb(ControlPoint),
    Nsbe(ControlPoint),
    /// Carry bit of the operation at `at` with operand points `lhs`, `rhs`.
    Xi {
        at: ControlPoint,
        lhs: ControlPoint,
        rhs: ControlPoint,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VarKind {
    Nsb,
    Nsbe,
    Xi,
}

impl IntVar {
    pub fn kind(self) -> VarKind {
        match self {
            IntVar::Nsb(_) => VarKind::Nsb,
            IntVar::Nsbe(_) => VarKind::Nsbe,
            IntVar::Xi { .. } => VarKind::Xi,
        }
    }

    pub fn point(self) -> ControlPoint {
        match self {
            IntVar::Nsb(p) | IntVar::Nsbe(p) | IntVar::Xi { at: p, .. } => p,
        }
    }

    /// Identifier usable in LP files.
    pub fn lp_name(self) -> String {
        match self {
            IntVar::Nsb(p) => format!("nsb_{}", p.0),
            IntVar::Nsbe(p) => format!("nsbe_{}", p.0),
            IntVar::Xi { at, .. } => format!("xi_{}", at.0),
        }
    }
}

impl fmt::Display for IntVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IntVar::Nsb(p) => write!(f, "nsb({p})"),
            IntVar::Nsbe(p) => write!(f, "nsbe({p})"),
            IntVar::Xi { at, lhs, rhs } => write!(f, "xi({at})({lhs}, {rhs})"),
        }
    }
}

/// Why a constraint exists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Origin {
    /// Generated for the statement with this pre-order index.
    Statement(usize),
    /// Definition feeding a read.
    DefUse,
    Requirement,
    /// Comparison operand widths.
    Condition,
    /// Refined-system seeds (literal and input error widths).
    Seed,
}

/// `Σ coef·var + Σ pieces`. The constant is kept as the list of terms it was built
/// from so dumps can show where each part came from.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LinExpr {
    pub terms: Vec<(i64, usize)>,
    pub pieces: Vec<i64>,
}

impl LinExpr {
    pub fn constant(&self) -> i64 {
        self.pieces.iter().sum()
    }

    pub fn eval(&self, values: &[i64]) -> i64 {
        self.constant() + self.terms.iter().map(|(c, v)| c * values[*v]).sum::<i64>()
    }
}

/// `vars[lhs] ≥ rhs`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearConstraint {
    pub lhs: usize,
    pub rhs: LinExpr,
    pub origin: Origin,
}

impl LinearConstraint {
    pub fn holds(&self, values: &[i64]) -> bool {
        values[self.lhs] >= self.rhs.eval(values)
    }

    /// Only `+1` coefficients on the right.
    pub fn is_monotone(&self) -> bool {
        self.rhs.terms.iter().all(|(c, _)| *c == 1)
    }
}

/// `xi = min(max(args[0], 0), max(args[1], 0), 1)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct XiDef {
    pub xi: usize,
    pub args: [LinExpr; 2],
}

impl XiDef {
    /// Values of the three min-arguments at `values`.
    pub fn arguments(&self, values: &[i64]) -> [i64; 3] {
        [
            self.args[0].eval(values).max(0),
            self.args[1].eval(values).max(0),
            1,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SystemKind {
    /// Carry bits fixed to one.
    Ilp,
    /// Error widths and min/max carry definitions.
    Refined,
}

/// Integer constraints over bit widths; the objective is to minimise Σ nsb.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSystem {
    pub kind: SystemKind,
    pub vars: Vec<IntVar>,
    /// Inclusive upper bound per variable (`None`: unbounded). All lower bounds are 0.
    pub upper: Vec<Option<i64>>,
    pub constraints: Vec<LinearConstraint>,
    pub xi_defs: Vec<XiDef>,
    /// Operations whose result was observed to be zero everywhere; their ufp was substituted.
    pub zero_range_points: Vec<ControlPoint>,
    index: HashMap<IntVar, usize>,
}

impl ConstraintSystem {
    pub fn new(kind: SystemKind) -> Self {
        ConstraintSystem {
            kind,
            vars: Vec::new(),
            upper: Vec::new(),
            constraints: Vec::new(),
            xi_defs: Vec::new(),
            zero_range_points: Vec::new(),
            index: HashMap::new(),
        }
    }

    /// Index of `v`, declaring it with the given upper bound if new.
    pub fn var(&mut self, v: IntVar, upper: Option<i64>) -> usize {
        if let Some(&i) = self.index.get(&v) {
            return i;
        }
        let i = self.vars.len();
        self.vars.push(v);
        self.upper.push(upper);
        self.index.insert(v, i);
        i
    }

    pub fn lookup(&self, v: IntVar) -> Option<usize> {
        self.index.get(&v).copied()
    }

    pub fn push(&mut self, lhs: usize, terms: Vec<(i64, usize)>, pieces: Vec<i64>, origin: Origin) {
        self.constraints.push(LinearConstraint {
            lhs,
            rhs: LinExpr { terms, pieces },
            origin,
        });
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn is_monotone(&self) -> bool {
        self.xi_defs.is_empty() && self.constraints.iter().all(LinearConstraint::is_monotone)
    }

    pub fn constraints_from(&self, origin: Origin) -> impl Iterator<Item = &LinearConstraint> {
        self.constraints.iter().filter(move |c| c.origin == origin)
    }

    /// Every constraint and bound satisfied. Carry definitions are checked as lower bounds.
    pub fn is_feasible(&self, values: &[i64]) -> bool {
        values.len() == self.vars.len()
            && values
                .iter()
                .zip(&self.upper)
                .all(|(v, u)| *v >= 0 && u.is_none_or(|u| *v <= u))
            && self.constraints.iter().all(|c| c.holds(values))
            && self.xi_defs.iter().all(|d| {
                let a = d.arguments(values);
                values[d.xi] >= *a.iter().min().unwrap()
            })
    }

    pub fn first_violation(&self, values: &[i64]) -> Option<&LinearConstraint> {
        self.constraints.iter().find(|c| !c.holds(values))
    }

    fn write_expr(&self, out: &mut String, e: &LinExpr) {
        let mut first = true;
        for (c, v) in &e.terms {
            let name = self.vars[*v];
            match (*c, first) {
                (1, true) => write!(out, "{name}"),
                (1, false) => write!(out, " + {name}"),
                (-1, true) => write!(out, "-{name}"),
                (-1, false) => write!(out, " - {name}"),
                (c, true) => write!(out, "{c}*{name}"),
                (c, false) if c < 0 => write!(out, " - {}*{name}", -c),
                (c, false) => write!(out, " + {c}*{name}"),
            }
            .unwrap();
            first = false;
        }
        for k in &e.pieces {
            match (*k, first) {
                (k, true) => write!(out, "{k}"),
                (k, false) if k < 0 => write!(out, " - {}", -k),
                (k, false) => write!(out, " + {k}"),
            }
            .unwrap();
            first = false;
        }
        if first {
            out.push('0');
        }
    }

    /// `lhs >= rhs`, constants shown term by term.
    pub fn format_constraint(&self, c: &LinearConstraint) -> String {
        let mut out = format!("{} >= ", self.vars[c.lhs]);
        self.write_expr(&mut out, &c.rhs);
        out
    }

    /// One line per constraint, then one per carry definition.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for c in &self.constraints {
            out.push_str(&self.format_constraint(c));
            out.push('\n');
        }
        for d in &self.xi_defs {
            write!(out, "{} = min(max(", self.vars[d.xi]).unwrap();
            self.write_expr(&mut out, &d.args[0]);
            out.push_str(", 0), max(");
            self.write_expr(&mut out, &d.args[1]);
            out.push_str(", 0), 1)\n");
        }
        out
    }
}

/// Sizes of a system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemStats {
    pub num_vars: usize,
    pub num_constraints: usize,
    pub num_xi_defs: usize,
}

pub fn system_stats(s: &ConstraintSystem) -> SystemStats {
    SystemStats {
        num_vars: s.vars.len(),
        num_constraints: s.constraints.len(),
        num_xi_defs: s.xi_defs.len(),
    }
}
