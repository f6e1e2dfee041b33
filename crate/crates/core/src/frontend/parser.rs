use std::collections::HashMap;

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::{compute_def_use, ParseError, ParseErrorKind};
use crate::numerics::DEFAULT_P_MAX;

/// Options for [`parse_with`].
#[derive(Debug, Clone)]
pub struct ParseOptions {
    /// Free variables bound at run time; each gets a definition point.
    pub inputs: Vec<String>,
    pub p_max: u32,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            inputs: Vec::new(),
            p_max: DEFAULT_P_MAX,
        }
    }
}

pub fn parse(source: &str) -> Result<LabeledProgram, ParseError> {
    parse_with(source, &ParseOptions::default())
}

pub fn parse_with(source: &str, opts: &ParseOptions) -> Result<LabeledProgram, ParseError> {
    let tokens = tokenize(source)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        p_max: opts.p_max,
    };
    let mut raw = Vec::new();
    while !p.at(&Tok::Eof) {
        raw.push(p.statement()?);
    }

    let mut lb = Labeler::default();
    for name in &opts.inputs {
        let var = lb.var(name);
        let point = lb.point(PointKind::Input(var), (0, 0));
        lb.inputs.push(InputDecl { var, point });
    }
    // a read of a name never assigned nor declared is an unknown identifier
    let mut assigned: Vec<&str> = opts.inputs.iter().map(String::as_str).collect();
    collect_assigned(&raw, &mut assigned);
    check_reads_known(&raw, &assigned)?;

    let body = raw.iter().map(|s| lb.stmt(s)).collect();
    let program = LabeledProgram {
        inputs: lb.inputs,
        body,
        var_names: lb.names,
        points: lb.points,
        spans: lb.spans,
        loop_count: lb.loops,
    };
    let links = compute_def_use(&program);
    if let Some(&read) = links.unreached_reads().first() {
        let (line, col) = program.spans[read.index()];
        let var = program.kind(read).read_var().expect("read point");
        return Err(ParseError::new(
            ParseErrorKind::UseBeforeDef(program.var_name(var).to_string()),
            line,
            col,
        ));
    }
    Ok(program)
}

#[derive(Debug)]
enum RawExpr {
    Number(String, u32, u32),
    Ident(String, u32, u32),
    Binary(BinOp, Box<RawExpr>, Box<RawExpr>, u32, u32),
    Neg(Box<RawExpr>, u32, u32),
    Sqrt(Box<RawExpr>, u32, u32),
}

#[derive(Debug)]
struct RawCond {
    op: CmpOp,
    lhs: RawExpr,
    rhs: RawExpr,
    line: u32,
    col: u32,
}

#[derive(Debug)]
enum RawStmt {
    Assign(String, RawExpr, u32, u32),
    While(RawCond, Vec<RawStmt>),
    If(RawCond, Vec<RawStmt>, Vec<RawStmt>),
    Require(String, u32, u32, u32),
}

const KEYWORDS: [&str; 5] = ["while", "if", "else", "require_nsb", "sqrt"];

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    p_max: u32,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn at(&self, t: &Tok) -> bool {
        &self.peek().tok == t
    }

    fn at_ident(&self, name: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(n) if n == name)
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        let t = self.peek();
        Err(ParseError::new(ParseErrorKind::Syntax(msg.into()), t.line, t.col))
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<Token, ParseError> {
        if self.at(&t) {
            Ok(self.bump())
        } else {
            self.err(format!("expected {what}, found {}", describe(&self.peek().tok)))
        }
    }

    fn ident(&mut self) -> Result<(String, u32, u32), ParseError> {
        let t = self.peek().clone();
        match t.tok {
            Tok::Ident(name) if !KEYWORDS.contains(&name.as_str()) => {
                self.bump();
                Ok((name, t.line, t.col))
            }
            other => self.err(format!("expected identifier, found {}", describe(&other))),
        }
    }

    fn statement(&mut self) -> Result<RawStmt, ParseError> {
        if self.at_ident("while") {
            self.bump();
            let cond = self.paren_cond()?;
            let body = self.block()?;
            self.skip_semi();
            return Ok(RawStmt::While(cond, body));
        }
        if self.at_ident("if") {
            self.bump();
            let cond = self.paren_cond()?;
            let then_branch = self.block()?;
            let else_branch = if self.at_ident("else") {
                self.bump();
                self.block()?
            } else {
                Vec::new()
            };
            self.skip_semi();
            return Ok(RawStmt::If(cond, then_branch, else_branch));
        }
        if self.at_ident("require_nsb") {
            return self.require();
        }
        let (name, line, col) = self.ident()?;
        self.expect(Tok::Assign, "`=`")?;
        let value = self.expr()?;
        self.expect(Tok::Semi, "`;`")?;
        Ok(RawStmt::Assign(name, value, line, col))
    }

    fn require(&mut self) -> Result<RawStmt, ParseError> {
        let kw = self.bump();
        let malformed = |msg: &str, t: &Token| {
            Err(ParseError::new(
                ParseErrorKind::MalformedRequire(msg.to_string()),
                t.line,
                t.col,
            ))
        };
        if !self.at(&Tok::LParen) {
            return malformed("expected `(`", self.peek());
        }
        self.bump();
        let (name, _, _) = match self.ident() {
            Ok(v) => v,
            Err(_) => return malformed("expected a variable name", self.peek()),
        };
        if !self.at(&Tok::Comma) {
            return malformed("expected `,`", self.peek());
        }
        self.bump();
        let t = self.peek().clone();
        let n = match &t.tok {
            Tok::Number(s) if s.bytes().all(|b| b.is_ascii_digit()) => s.parse::<u32>().ok(),
            _ => None,
        };
        let Some(n) = n else {
            return malformed("bit count must be a positive integer", &t);
        };
        if n == 0 || n > self.p_max {
            return malformed(&format!("bit count {n} outside [1, {}]", self.p_max), &t);
        }
        self.bump();
        if !self.at(&Tok::RParen) {
            return malformed("expected `)`", self.peek());
        }
        self.bump();
        self.expect(Tok::Semi, "`;`")?;
        Ok(RawStmt::Require(name, n, kw.line, kw.col))
    }

    fn skip_semi(&mut self) {
        if self.at(&Tok::Semi) {
            self.bump();
        }
    }

    fn block(&mut self) -> Result<Vec<RawStmt>, ParseError> {
        self.expect(Tok::LBrace, "`{`")?;
        let mut out = Vec::new();
        while !self.at(&Tok::RBrace) {
            if self.at(&Tok::Eof) {
                return self.err("unterminated block");
            }
            out.push(self.statement()?);
        }
        self.bump();
        Ok(out)
    }

    fn paren_cond(&mut self) -> Result<RawCond, ParseError> {
        self.expect(Tok::LParen, "`(`")?;
        let lhs = self.expr()?;
        let t = self.peek().clone();
        let Tok::Cmp(op) = t.tok else {
            return self.err(format!("expected comparison, found {}", describe(&t.tok)));
        };
        self.bump();
        let rhs = self.expr()?;
        self.expect(Tok::RParen, "`)`")?;
        Ok(RawCond {
            op,
            lhs,
            rhs,
            line: t.line,
            col: t.col,
        })
    }

    fn expr(&mut self) -> Result<RawExpr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let t = self.peek().clone();
            let op = match t.tok {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = RawExpr::Binary(op, Box::new(lhs), Box::new(rhs), t.line, t.col);
        }
    }

    fn term(&mut self) -> Result<RawExpr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let t = self.peek().clone();
            let op = match t.tok {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = RawExpr::Binary(op, Box::new(lhs), Box::new(rhs), t.line, t.col);
        }
    }

    fn unary(&mut self) -> Result<RawExpr, ParseError> {
        if self.at(&Tok::Minus) {
            let t = self.bump();
            // `-<number>` is a negative literal
            if let Tok::Number(n) = &self.peek().tok {
                let n = n.clone();
                self.bump();
                return Ok(RawExpr::Number(format!("-{n}"), t.line, t.col));
            }
            let inner = self.unary()?;
            return Ok(RawExpr::Neg(Box::new(inner), t.line, t.col));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<RawExpr, ParseError> {
        let t = self.peek().clone();
        match t.tok {
            Tok::Number(n) => {
                self.bump();
                Ok(RawExpr::Number(n, t.line, t.col))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(ref name) if name == "sqrt" => {
                self.bump();
                self.expect(Tok::LParen, "`(` after sqrt")?;
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(RawExpr::Sqrt(Box::new(e), t.line, t.col))
            }
            Tok::Ident(_) => {
                let (name, line, col) = self.ident()?;
                Ok(RawExpr::Ident(name, line, col))
            }
            other => self.err(format!("expected expression, found {}", describe(&other))),
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Number(s) => format!("`{s}`"),
        Tok::Eof => "end of input".to_string(),
        Tok::Cmp(op) => format!("`{}`", op.symbol()),
        other => format!("{other:?}"),
    }
}

fn collect_assigned<'a>(stmts: &'a [RawStmt], out: &mut Vec<&'a str>) {
    for s in stmts {
        match s {
            RawStmt::Assign(name, ..) => out.push(name),
            RawStmt::While(_, b) => collect_assigned(b, out),
            RawStmt::If(_, a, b) => {
                collect_assigned(a, out);
                collect_assigned(b, out);
            }
            RawStmt::Require(..) => {}
        }
    }
}

fn check_reads_known(stmts: &[RawStmt], known: &[&str]) -> Result<(), ParseError> {
    fn expr(e: &RawExpr, known: &[&str]) -> Result<(), ParseError> {
        match e {
            RawExpr::Number(..) => Ok(()),
            RawExpr::Ident(name, line, col) => {
                if known.contains(&name.as_str()) {
                    Ok(())
                } else {
                    Err(ParseError::new(
                        ParseErrorKind::UnknownIdentifier(name.clone()),
                        *line,
                        *col,
                    ))
                }
            }
            RawExpr::Binary(_, a, b, ..) => {
                expr(a, known)?;
                expr(b, known)
            }
            RawExpr::Neg(a, ..) | RawExpr::Sqrt(a, ..) => expr(a, known),
        }
    }
    for s in stmts {
        match s {
            RawStmt::Assign(_, e, ..) => expr(e, known)?,
            RawStmt::While(c, b) => {
                expr(&c.lhs, known)?;
                expr(&c.rhs, known)?;
                check_reads_known(b, known)?;
            }
            RawStmt::If(c, a, b) => {
                expr(&c.lhs, known)?;
                expr(&c.rhs, known)?;
                check_reads_known(a, known)?;
                check_reads_known(b, known)?;
            }
            RawStmt::Require(name, _, line, col) => {
                if !known.contains(&name.as_str()) {
                    return Err(ParseError::new(
                        ParseErrorKind::UnknownIdentifier(name.clone()),
                        *line,
                        *col,
                    ));
                }
            }
        }
    }
    Ok(())
}

/// Assigns control points in pre-order.
#[derive(Default)]
struct Labeler {
    names: Vec<String>,
    index: HashMap<String, VarId>,
    points: Vec<PointKind>,
    spans: Vec<(u32, u32)>,
    inputs: Vec<InputDecl>,
    loops: u32,
}

impl Labeler {
    fn var(&mut self, name: &str) -> VarId {
        if let Some(&v) = self.index.get(name) {
            return v;
        }
        let v = VarId(self.names.len() as u32);
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), v);
        v
    }

    fn point(&mut self, kind: PointKind, span: (u32, u32)) -> ControlPoint {
        let p = ControlPoint(self.points.len() as u32);
        self.points.push(kind);
        self.spans.push(span);
        p
    }

    fn stmt(&mut self, s: &RawStmt) -> Stmt {
        match s {
            RawStmt::Assign(name, e, line, col) => {
                let var = self.var(name);
                let point = self.point(PointKind::Def(var), (*line, *col));
                let value = self.expr(e);
                Stmt::Assign { var, point, value }
            }
            RawStmt::While(c, body) => {
                let id = LoopId(self.loops);
                self.loops += 1;
                let cond = self.cond(c);
                let body = body.iter().map(|s| self.stmt(s)).collect();
                Stmt::While { id, cond, body }
            }
            RawStmt::If(c, a, b) => {
                let cond = self.cond(c);
                let then_branch = a.iter().map(|s| self.stmt(s)).collect();
                let else_branch = b.iter().map(|s| self.stmt(s)).collect();
                Stmt::If {
                    cond,
                    then_branch,
                    else_branch,
                }
            }
            RawStmt::Require(name, nsb, line, col) => {
                let var = self.var(name);
                let point = self.point(PointKind::Require(var), (*line, *col));
                Stmt::Require {
                    var,
                    point,
                    nsb: *nsb,
                }
            }
        }
    }

    fn cond(&mut self, c: &RawCond) -> Cond {
        let point = self.point(PointKind::Compare(c.op), (c.line, c.col));
        let lhs = self.expr(&c.lhs);
        let rhs = self.expr(&c.rhs);
        Cond {
            point,
            op: c.op,
            lhs,
            rhs,
        }
    }

    fn expr(&mut self, e: &RawExpr) -> Expr {
        match e {
            RawExpr::Number(text, l, c) => Expr {
                point: self.point(PointKind::Literal, (*l, *c)),
                kind: ExprKind::Literal(text.clone()),
            },
            RawExpr::Ident(name, l, c) => {
                let var = self.var(name);
                Expr {
                    point: self.point(PointKind::Read(var), (*l, *c)),
                    kind: ExprKind::Var(var),
                }
            }
            RawExpr::Binary(op, a, b, l, c) => {
                let point = self.point(PointKind::Binary(*op), (*l, *c));
                let a = self.expr(a);
                let b = self.expr(b);
                Expr {
                    point,
                    kind: ExprKind::Binary(*op, Box::new(a), Box::new(b)),
                }
            }
            RawExpr::Neg(a, l, c) => {
                let point = self.point(PointKind::Neg, (*l, *c));
                Expr {
                    point,
                    kind: ExprKind::Neg(Box::new(self.expr(a))),
                }
            }
            RawExpr::Sqrt(a, l, c) => {
                let point = self.point(PointKind::Sqrt, (*l, *c));
                Expr {
                    point,
                    kind: ExprKind::Sqrt(Box::new(self.expr(a))),
                }
            }
        }
    }
}
