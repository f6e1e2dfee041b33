//! Executable multi-precision output.
//!
//! The dialect is the input language plus two forms:
//!
//! - `mp(e, n)` evaluates `e` and rounds the result to `n` significant bits, to nearest with
//!   ties to even. When `e` is a literal or a single operation (`a + b`, `a - b`, `a * b`,
//!   `a / b`, `-a`, `sqrt(a)`) it is computed exactly and rounded once.
//! - `input(x, n);` binds the free variable `x` to its supplied decimal value rounded to `n` bits.
//!
//! A literal or operation outside `mp` is rejected. Variables hold their values exactly;
//! comparisons compare exact values; `require_nsb` is a no-op.
//!
//! With gmpy2, `mp(a op b, n)` is `a op b` evaluated under `gmpy2.local_context(precision=n)`,
//! and `mp(x, n)` for a plain value is `gmpy2.mpfr(x, n)`. Any MPFR binding works the same way.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::evaluator::Bindings;
use crate::frontend::*;
use crate::numerics::{arith, cmp_values, ArithOp, MpFloat, NumericError};
use crate::solver::NsbAssignment;

use super::TuneError;

/// Renders `p` in the `mp(expr, nsb)` dialect with the widths of `a`.
pub fn emit_mp_code(p: &LabeledProgram, a: &NsbAssignment) -> Result<String, TuneError> {
    let w = a.point_widths(p.num_points());
    let mut e = Emitter { p, w: &w, out: String::new() };
    e.out.push_str("# mp(e, n): e rounded to n significant bits, nearest-even\n");
    for d in &p.inputs {
        writeln!(e.out, "input({}, {});", p.var_name(d.var), w[d.point.index()]).unwrap();
    }
    e.block(&p.body, 0);
    Ok(e.out)
}

struct Emitter<'a> {
    p: &'a LabeledProgram,
    w: &'a [u32],
    out: String,
}

impl Emitter<'_> {
    fn block(&mut self, stmts: &[Stmt], depth: usize) {
        for s in stmts {
            self.stmt(s, depth);
        }
    }

    fn stmt(&mut self, s: &Stmt, depth: usize) {
        let pad = "  ".repeat(depth);
        match s {
            Stmt::Assign { var, point, value } => {
                let e = self.expr(value);
                let (inner, wd) = (self.w[value.point.index()], self.w[point.index()]);
                let name = self.p.var_name(*var);
                if inner == wd {
                    writeln!(self.out, "{pad}{name} = {e};").unwrap();
                } else {
                    writeln!(self.out, "{pad}{name} = mp({e}, {wd});").unwrap();
                }
            }
            Stmt::Require { var, nsb, .. } => {
                writeln!(self.out, "{pad}require_nsb({}, {nsb});", self.p.var_name(*var)).unwrap();
            }
            Stmt::While { cond, body, .. } => {
                let c = self.cond(cond);
                writeln!(self.out, "{pad}while ({c}) {{").unwrap();
                self.block(body, depth + 1);
                writeln!(self.out, "{pad}}}").unwrap();
            }
            Stmt::If {
                cond,
                then_branch,
                else_branch,
            } => {
                let c = self.cond(cond);
                writeln!(self.out, "{pad}if ({c}) {{").unwrap();
                self.block(then_branch, depth + 1);
                writeln!(self.out, "{pad}}} else {{").unwrap();
                self.block(else_branch, depth + 1);
                writeln!(self.out, "{pad}}}").unwrap();
            }
        }
    }

    fn cond(&self, c: &Cond) -> String {
        format!("{} {} {}", self.expr(&c.lhs), c.op.symbol(), self.expr(&c.rhs))
    }

    fn expr(&self, e: &Expr) -> String {
        let n = self.w[e.point.index()];
        let body = match &e.kind {
            ExprKind::Literal(t) => t.clone(),
            ExprKind::Var(v) => self.p.var_name(*v).to_string(),
            ExprKind::Binary(op, a, b) => format!("{} {} {}", self.expr(a), op.symbol(), self.expr(b)),
            ExprKind::Neg(a) => format!("-{}", self.expr(a)),
            ExprKind::Sqrt(a) => format!("sqrt({})", self.expr(a)),
        };
        format!("mp({body}, {n})")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MpCodeError {
    #[error("{line}:{col}: {msg}")]
    Syntax { line: u32, col: u32, msg: String },
    #[error("{0}")]
    Lex(#[from] ParseError),
    #[error("`{0}` used before assignment")]
    Unbound(String),
    #[error("no value supplied for input `{0}`")]
    MissingInput(String),
    #[error("literal or operation outside mp(): {0}")]
    Unrounded(String),
    #[error(transparent)]
    Numeric(#[from] NumericError),
    #[error("more than {0} loop iterations")]
    IterationCap(u64),
}

#[derive(Debug, Clone)]
enum E {
    Num(String),
    Var(String),
    Bin(BinOp, Box<E>, Box<E>),
    Neg(Box<E>),
    Sqrt(Box<E>),
    Mp(Box<E>, u32),
}

#[derive(Debug, Clone)]
enum S {
    Assign(String, E),
    Input(String, u32),
    Require,
    While(E, CmpOp, E, Vec<S>),
    If(E, CmpOp, E, Vec<S>, Vec<S>),
}

struct Parser {
    toks: Vec<(Tok, u32, u32)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, MpCodeError> {
        let (_, line, col) = self.toks[self.pos];
        Err(MpCodeError::Syntax {
            line,
            col,
            msg: msg.into(),
        })
    }

    fn eat(&mut self, t: Tok) -> Result<(), MpCodeError> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected {t:?}, found {:?}", self.peek()))
        }
    }

    fn ident(&mut self) -> Result<String, MpCodeError> {
        match self.bump() {
            Tok::Ident(s) => Ok(s),
            t => self.err(format!("expected a name, found {t:?}")),
        }
    }

    fn int(&mut self) -> Result<u32, MpCodeError> {
        match self.bump() {
            Tok::Number(s) => match s.parse() {
                Ok(n) if n > 0 => Ok(n),
                _ => self.err(format!("`{s}` is not a positive width")),
            },
            t => self.err(format!("expected a width, found {t:?}")),
        }
    }

    fn block(&mut self) -> Result<Vec<S>, MpCodeError> {
        self.eat(Tok::LBrace)?;
        let mut out = Vec::new();
        while *self.peek() != Tok::RBrace {
            if *self.peek() == Tok::Eof {
                return self.err("unclosed `{`");
            }
            out.push(self.stmt()?);
        }
        self.bump();
        Ok(out)
    }

    fn cond(&mut self) -> Result<(E, CmpOp, E), MpCodeError> {
        self.eat(Tok::LParen)?;
        let a = self.expr()?;
        let op = match self.bump() {
            Tok::Cmp(op) => op,
            t => return self.err(format!("expected a comparison, found {t:?}")),
        };
        let b = self.expr()?;
        self.eat(Tok::RParen)?;
        Ok((a, op, b))
    }

    fn stmt(&mut self) -> Result<S, MpCodeError> {
        let name = self.ident()?;
        match name.as_str() {
            "while" => {
                let (a, op, b) = self.cond()?;
                Ok(S::While(a, op, b, self.block()?))
            }
            "if" => {
                let (a, op, b) = self.cond()?;
                let then = self.block()?;
                let els = if *self.peek() == Tok::Ident("else".into()) {
                    self.bump();
                    self.block()?
                } else {
                    Vec::new()
                };
                Ok(S::If(a, op, b, then, els))
            }
            "input" | "require_nsb" => {
                self.eat(Tok::LParen)?;
                let v = self.ident()?;
                self.eat(Tok::Comma)?;
                let n = self.int()?;
                self.eat(Tok::RParen)?;
                self.eat(Tok::Semi)?;
                Ok(if name == "input" { S::Input(v, n) } else { S::Require })
            }
            _ => {
                self.eat(Tok::Assign)?;
                let e = self.expr()?;
                self.eat(Tok::Semi)?;
                Ok(S::Assign(name, e))
            }
        }
    }

    fn expr(&mut self) -> Result<E, MpCodeError> {
        let mut e = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(e),
            };
            self.bump();
            e = E::Bin(op, Box::new(e), Box::new(self.term()?));
        }
    }

    fn term(&mut self) -> Result<E, MpCodeError> {
        let mut e = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(e),
            };
            self.bump();
            e = E::Bin(op, Box::new(e), Box::new(self.unary()?));
        }
    }

    fn unary(&mut self) -> Result<E, MpCodeError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            if let Tok::Number(n) = self.peek().clone() {
                self.bump();
                return Ok(E::Num(format!("-{n}")));
            }
            return Ok(E::Neg(Box::new(self.unary()?)));
        }
        match self.bump() {
            Tok::Number(n) => Ok(E::Num(n)),
            Tok::LParen => {
                let e = self.expr()?;
                self.eat(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(f) if f == "sqrt" || f == "mp" => {
                self.eat(Tok::LParen)?;
                let e = self.expr()?;
                if f == "sqrt" {
                    self.eat(Tok::RParen)?;
                    return Ok(E::Sqrt(Box::new(e)));
                }
                self.eat(Tok::Comma)?;
                let n = self.int()?;
                self.eat(Tok::RParen)?;
                Ok(E::Mp(Box::new(e), n))
            }
            Tok::Ident(v) => Ok(E::Var(v)),
            t => self.err(format!("expected an expression, found {t:?}")),
        }
    }
}

struct Exec<'a> {
    env: BTreeMap<String, MpFloat>,
    inputs: &'a Bindings,
    iterations: u64,
    cap: u64,
}

impl Exec<'_> {
    fn var(&self, v: &str) -> Result<&MpFloat, MpCodeError> {
        self.env.get(v).ok_or_else(|| MpCodeError::Unbound(v.into()))
    }

    fn eval(&self, e: &E) -> Result<MpFloat, MpCodeError> {
        match e {
            E::Var(v) => Ok(self.var(v)?.clone()),
            E::Neg(a) => Ok(self.eval(a)?.neg()),
            E::Mp(inner, n) => self.rounded(inner, *n),
            other => Err(MpCodeError::Unrounded(format!("{other:?}"))),
        }
    }

    fn rounded(&self, e: &E, n: u32) -> Result<MpFloat, MpCodeError> {
        let op = |op: BinOp| match op {
            BinOp::Add => ArithOp::Add,
            BinOp::Sub => ArithOp::Sub,
            BinOp::Mul => ArithOp::Mul,
            BinOp::Div => ArithOp::Div,
        };
        Ok(match e {
            E::Num(t) => MpFloat::from_decimal(t, n)?,
            E::Var(v) => self.var(v)?.round_to(n),
            E::Bin(o, a, b) => arith(op(*o), &[&self.eval(a)?, &self.eval(b)?], n)?,
            E::Sqrt(a) => arith(ArithOp::Sqrt, &[&self.eval(a)?], n)?,
            E::Neg(a) => self.eval(a)?.neg().round_to(n),
            E::Mp(..) => self.eval(e)?.round_to(n),
        })
    }

    fn holds(&self, a: &E, op: CmpOp, b: &E) -> Result<bool, MpCodeError> {
        Ok(op.holds(cmp_values(&self.eval(a)?, &self.eval(b)?)))
    }

    fn block(&mut self, stmts: &[S]) -> Result<(), MpCodeError> {
        for s in stmts {
            match s {
                S::Assign(v, e) => {
                    let x = self.eval(e)?;
                    self.env.insert(v.clone(), x);
                }
                S::Input(v, n) => {
                    let text = self.inputs.get(v).ok_or_else(|| MpCodeError::MissingInput(v.clone()))?;
                    let x = MpFloat::from_decimal(text, *n)?;
                    self.env.insert(v.clone(), x);
                }
                S::Require => {}
                S::If(a, op, b, t, e) => {
                    if self.holds(a, *op, b)? {
                        self.block(t)?;
                    } else {
                        self.block(e)?;
                    }
                }
                S::While(a, op, b, body) => {
                    while self.holds(a, *op, b)? {
                        self.iterations += 1;
                        if self.iterations > self.cap {
                            return Err(MpCodeError::IterationCap(self.cap));
                        }
                        self.block(body)?;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Executes dialect code and returns the final value of every variable.
pub fn run_mp_code(code: &str, inputs: &Bindings, iteration_cap: u64) -> Result<BTreeMap<String, MpFloat>, MpCodeError> {
    let toks = tokenize(code)?.into_iter().map(|t| (t.tok, t.line, t.col)).collect();
    let mut p = Parser { toks, pos: 0 };
    let mut prog = Vec::new();
    while *p.peek() != Tok::Eof {
        prog.push(p.stmt()?);
    }
    let mut x = Exec {
        env: BTreeMap::new(),
        inputs,
        iterations: 0,
        cap: iteration_cap,
    };
    x.block(&prog)?;
    Ok(x.env)
}
