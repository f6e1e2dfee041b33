use std::collections::BTreeMap;

use crate::frontend::*;
use crate::numerics::Scalar;

use super::{EvalError, EvalErrorKind};

/// Free-variable values, as decimal text.
pub type Bindings = BTreeMap<String, String>;

#[derive(Debug, Clone)]
pub struct EvalConfig {
    /// Total loop iterations allowed across all loops.
    pub iteration_cap: u64,
    /// Loop whose iterations drive sampling (defaults to the first loop).
    pub sample_loop: Option<LoopId>,
    /// Variables sampled after iterations of the sample loop.
    pub sample_vars: Vec<String>,
    /// Sample after every n-th iteration.
    pub sample_every: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            iteration_cap: 10_000_000,
            sample_loop: None,
            sample_vars: Vec::new(),
            sample_every: 1,
        }
    }
}

/// Per-iteration values of the sampled variables.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SampleSeries {
    pub vars: Vec<String>,
    /// Iteration number (from 1) of each row.
    pub steps: Vec<u64>,
    /// One row per sampled iteration, one column per variable.
    pub rows: Vec<Vec<f64>>,
}

impl SampleSeries {
    /// CSV with columns `step,variable,value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,variable,value\n");
        for (step, row) in self.steps.iter().zip(&self.rows) {
            for (name, v) in self.vars.iter().zip(row) {
                out.push_str(&format!("{step},{name},{v:e}\n"));
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct Trace<S> {
    /// Final value of every variable that was ever bound, by name.
    pub env: BTreeMap<String, S>,
    pub samples: SampleSeries,
    /// How often each control point was evaluated.
    pub visits: Vec<u64>,
    /// How often each comparison point evaluated to true.
    pub taken: Vec<u64>,
    pub iterations: u64,
    /// Variable value at the last execution of each `require_nsb`.
    pub at_require: BTreeMap<ControlPoint, S>,
}

impl<S> Trace<S> {
    /// Comparison points whose outcome counts differ between two runs of one program.
    pub fn divergence(&self, other: &Trace<S>) -> Vec<ControlPoint> {
        (0..self.visits.len())
            .filter(|&i| self.visits[i] != other.visits[i] || self.taken[i] != other.taken[i])
            .map(|i| ControlPoint(i as u32))
            .collect()
    }
}

/// Observed magnitudes, kept in the execution scalar.
#[derive(Debug, Clone)]
pub struct RangeRecorder<S> {
    pub max_abs: Vec<Option<S>>,
    pub min_abs: Vec<Option<S>>,
}

impl<S: Scalar> RangeRecorder<S> {
    pub fn new(points: usize) -> Self {
        RangeRecorder {
            max_abs: vec![None; points],
            min_abs: vec![None; points],
        }
    }

    fn record(&mut self, p: ControlPoint, v: &S) {
        let a = v.abs();
        let i = p.index();
        match &self.max_abs[i] {
            Some(m) if *m >= a => {}
            _ => self.max_abs[i] = Some(a.clone()),
        }
        match &self.min_abs[i] {
            Some(m) if *m <= a => {}
            _ => self.min_abs[i] = Some(a),
        }
    }
}

/// Runs `p` with every point computed at `widths[point]` bits.
pub fn execute<S: Scalar>(
    p: &LabeledProgram,
    widths: &[u32],
    inputs: &Bindings,
    cfg: &EvalConfig,
    recorder: Option<&mut RangeRecorder<S>>,
) -> Result<Trace<S>, EvalError> {
    assert_eq!(widths.len(), p.num_points(), "one width per control point");
    let sample_vars = cfg
        .sample_vars
        .iter()
        .map(|n| {
            p.var_id(n).ok_or_else(|| EvalError {
                point: None,
                kind: EvalErrorKind::UnknownSample(n.clone()),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut m = Machine {
        p,
        w: widths,
        env: vec![None; p.var_names.len()],
        visits: vec![0; p.num_points()],
        taken: vec![0; p.num_points()],
        iterations: 0,
        cap: cfg.iteration_cap,
        sample_loop: cfg.sample_loop.unwrap_or(LoopId(0)),
        sample_vars,
        sample_every: cfg.sample_every.max(1),
        sampled_loop_passes: 0,
        steps: Vec::new(),
        rows: Vec::new(),
        rec: recorder,
        at_require: BTreeMap::new(),
    };
    for decl in &p.inputs {
        let name = p.var_name(decl.var);
        let text = inputs.get(name).ok_or_else(|| EvalError {
            point: Some(decl.point),
            kind: EvalErrorKind::MissingInput(name.to_string()),
        })?;
        let v = S::from_literal(text, m.w[decl.point.index()]).map_err(|e| m.numeric(decl.point, e))?;
        m.observe(decl.point, &v);
        m.env[decl.var.index()] = Some(v);
    }
    m.block(&p.body)?;
    let env = m
        .env
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.clone().map(|v| (p.var_names[i].clone(), v)))
        .collect();
    Ok(Trace {
        env,
        samples: SampleSeries {
            vars: cfg.sample_vars.clone(),
            steps: m.steps,
            rows: m.rows,
        },
        visits: m.visits,
        taken: m.taken,
        iterations: m.iterations,
        at_require: m.at_require,
    })
}

struct Machine<'a, S> {
    p: &'a LabeledProgram,
    w: &'a [u32],
    env: Vec<Option<S>>,
    visits: Vec<u64>,
    taken: Vec<u64>,
    iterations: u64,
    cap: u64,
    sample_loop: LoopId,
    sample_vars: Vec<VarId>,
    sample_every: u64,
    sampled_loop_passes: u64,
    steps: Vec<u64>,
    rows: Vec<Vec<f64>>,
    rec: Option<&'a mut RangeRecorder<S>>,
    at_require: BTreeMap<ControlPoint, S>,
}

impl<S: Scalar> Machine<'_, S> {
    fn numeric(&self, point: ControlPoint, e: crate::numerics::NumericError) -> EvalError {
        EvalError {
            point: Some(point),
            kind: EvalErrorKind::Numeric(e),
        }
    }

    #[inline]
    fn observe(&mut self, p: ControlPoint, v: &S) {
        self.visits[p.index()] += 1;
        if let Some(rec) = self.rec.as_deref_mut() {
            rec.record(p, v);
        }
    }

    fn read(&self, var: VarId, point: ControlPoint) -> Result<S, EvalError> {
        match &self.env[var.index()] {
            Some(v) => Ok(v.round(self.w[point.index()])),
            None => Err(EvalError {
                point: Some(point),
                kind: EvalErrorKind::UndefinedRead(self.p.var_name(var).to_string()),
            }),
        }
    }

    fn block(&mut self, stmts: &[Stmt]) -> Result<(), EvalError> {
        for s in stmts {
            self.stmt(s)?;
        }
        Ok(())
    }

    fn stmt(&mut self, s: &Stmt) -> Result<(), EvalError> {
        match s {
            Stmt::Assign { var, point, value } => {
                let v = self.expr(value)?.round(self.w[point.index()]);
                self.observe(*point, &v);
                self.env[var.index()] = Some(v);
            }
            Stmt::Require { var, point, .. } => {
                let v = self.read(*var, *point)?;
                self.observe(*point, &v);
                let held = self.env[var.index()].clone().expect("read succeeded");
                self.at_require.insert(*point, held);
            }
            Stmt::If {
                cond,
                then_branch,
                else_branch,
            } => {
                if self.cond(cond)? {
                    self.block(then_branch)?;
                } else {
                    self.block(else_branch)?;
                }
            }
            Stmt::While { id, cond, body } => {
                while self.cond(cond)? {
                    self.iterations += 1;
                    if self.iterations > self.cap {
                        return Err(EvalError {
                            point: Some(cond.point),
                            kind: EvalErrorKind::IterationCap(self.cap),
                        });
                    }
                    self.block(body)?;
                    if *id == self.sample_loop {
                        self.sampled_loop_passes += 1;
                    }
                    if *id == self.sample_loop
                        && !self.sample_vars.is_empty()
                        && self.sampled_loop_passes % self.sample_every == 0
                    {
                        let row = self
                            .sample_vars
                            .iter()
                            .map(|v| self.env[v.index()].as_ref().map_or(f64::NAN, S::to_f64))
                            .collect();
                        self.rows.push(row);
                        self.steps.push(self.sampled_loop_passes);
                    }
                }
            }
        }
        Ok(())
    }

    fn cond(&mut self, c: &Cond) -> Result<bool, EvalError> {
        let a = self.expr(&c.lhs)?;
        let b = self.expr(&c.rhs)?;
        let holds = match a.partial_cmp(&b) {
            Some(ord) => c.op.holds(ord),
            None => {
                return Err(self.numeric(c.point, crate::numerics::NumericError::NonFinite));
            }
        };
        let big = if a.abs() >= b.abs() { a } else { b };
        self.observe(c.point, &big);
        if holds {
            self.taken[c.point.index()] += 1;
        }
        Ok(holds)
    }

    fn expr(&mut self, e: &Expr) -> Result<S, EvalError> {
        let w = self.w[e.point.index()];
        let v = match &e.kind {
            ExprKind::Literal(text) => S::from_literal(text, w).map_err(|err| self.numeric(e.point, err))?,
            ExprKind::Var(var) => self.read(*var, e.point)?,
            ExprKind::Binary(op, a, b) => {
                let x = self.expr(a)?;
                let y = self.expr(b)?;
                match op {
                    BinOp::Add => x.add(&y, w),
                    BinOp::Sub => x.sub(&y, w),
                    BinOp::Mul => x.mul(&y, w),
                    BinOp::Div => x.div(&y, w).map_err(|err| self.numeric(e.point, err))?,
                }
            }
            ExprKind::Neg(a) => self.expr(a)?.neg(w),
            ExprKind::Sqrt(a) => self.expr(a)?.sqrt(w).map_err(|err| self.numeric(e.point, err))?,
        };
        if let Some(bad) = non_finite(&v) {
            return Err(self.numeric(e.point, bad));
        }
        self.observe(e.point, &v);
        Ok(v)
    }
}

fn non_finite<S: Scalar>(v: &S) -> Option<crate::numerics::NumericError> {
    if S::WIDTH_FAITHFUL || v.to_f64().is_finite() {
        None
    } else {
        Some(crate::numerics::NumericError::NonFinite)
    }
}
