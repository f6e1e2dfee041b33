//! The whole pipeline: parse, ranges, constraints, solve, emit, verify.

mod mpcode;
mod report;
mod verify;

pub use mpcode::{emit_mp_code, run_mp_code, MpCodeError};
pub use report::{PointReport, ReportError, TuningReport};
pub use verify::{verify, verify_against, VerificationRow, VerificationTable};

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::constraints::{gen_ilp, gen_refined, ConstraintError, ConstraintSystem, GenConfig, LoopModel};
use crate::evaluator::{analyze_ranges, reference_with_ranges, Bindings, EvalConfig, EvalError, Trace, UfpMap};
use crate::frontend::{compute_def_use, emit_annotated, parse_with, LabeledProgram, MissingWidth, ParseError, ParseOptions};
use crate::numerics::{MpFloat, DEFAULT_P_MAX};
use crate::solver::{policy_iterate, solve_monotone, NsbAssignment, SolveError, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Carry bits fixed to one, least fixed point.
    #[default]
    Ilp,
    /// Error widths and carry definitions, policy iteration.
    Pi,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TuningConfig {
    pub method: Method,
    /// Width of the reference and range-analysis runs.
    pub pref: u32,
    pub cond_nsb: u32,
    pub p_max: u32,
    pub iteration_cap: u64,
    pub solver: SolverConfig,
    pub loop_model: LoopModel,
    /// Run the tuned program against the reference after solving.
    pub verify: bool,
    /// Verification passes when the error is at most this many units of the required last place.
    pub tolerance: f64,
}

impl Default for TuningConfig {
    fn default() -> Self {
        TuningConfig {
            method: Method::Ilp,
            pref: 500,
            cond_nsb: 53,
            p_max: DEFAULT_P_MAX,
            iteration_cap: EvalConfig::default().iteration_cap,
            solver: SolverConfig::default(),
            loop_model: LoopModel::default(),
            verify: true,
            tolerance: 100.0,
        }
    }
}

impl TuningConfig {
    pub fn check(&self) -> Result<(), TuneError> {
        let bad = |m: String| Err(TuneError::Config(m));
        if self.p_max == 0 {
            return bad("P_max must be positive".into());
        }
        if self.cond_nsb == 0 || self.cond_nsb > self.p_max {
            return bad(format!("cond_nsb {} outside [1, {}]", self.cond_nsb, self.p_max));
        }
        if self.pref == 0 || self.pref > self.p_max {
            return bad(format!("pref {} outside [1, {}]", self.pref, self.p_max));
        }
        if !(self.tolerance >= 0.0) {
            return bad(format!("tolerance {} is not a non-negative number", self.tolerance));
        }
        Ok(())
    }

    fn gen(&self) -> GenConfig {
        GenConfig {
            cond_nsb: self.cond_nsb,
            p_max: self.p_max,
            loop_model: self.loop_model,
        }
    }

    pub fn eval(&self) -> EvalConfig {
        EvalConfig {
            iteration_cap: self.iteration_cap,
            ..Default::default()
        }
    }

    fn parse_options(&self, inputs: &[String]) -> ParseOptions {
        ParseOptions {
            inputs: inputs.to_vec(),
            p_max: self.p_max,
        }
    }
}

/// Pipeline error tagged with the stage that raised it.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TuneError {
    #[error("config: {0}")]
    Config(String),
    #[error("parse: {0}")]
    Parse(#[from] ParseError),
    #[error("ranges: {0}")]
    Ranges(EvalError),
    #[error("constraints: {0}")]
    Constraints(#[from] ConstraintError),
    #[error("solve: {0}")]
    Solve(#[from] SolveError),
    #[error("check: {0}")]
    Check(String),
    #[error("emit: {0}")]
    Emit(#[from] MissingWidth),
    #[error("verify: {0}")]
    Verify(EvalError),
}

impl TuneError {
    pub fn stage(&self) -> &'static str {
        match self {
            TuneError::Config(_) => "config",
            TuneError::Parse(_) => "parse",
            TuneError::Ranges(_) => "ranges",
            TuneError::Constraints(_) => "constraints",
            TuneError::Solve(_) => "solve",
            TuneError::Check(_) => "check",
            TuneError::Emit(_) => "emit",
            TuneError::Verify(_) => "verify",
        }
    }
}

/// Everything a tuning run produces.
#[derive(Debug, Clone)]
pub struct Tuned {
    pub program: LabeledProgram,
    pub assignment: NsbAssignment,
    pub report: TuningReport,
    /// Reference runs at `pref`, one per input binding set, when they were needed.
    pub references: Vec<Trace<MpFloat>>,
}

impl Tuned {
    pub fn widths(&self) -> Vec<u32> {
        self.assignment.point_widths(self.program.num_points())
    }

    /// Source with every token suffixed by its `|nsb|`.
    pub fn annotated(&self) -> Result<String, TuneError> {
        let nsb = self.assignment.nsb_by_point(self.program.num_points());
        Ok(emit_annotated(&self.program, |cp| nsb.get(cp.index()).map(|n| *n as u32))?)
    }

    pub fn mp_code(&self) -> Result<String, TuneError> {
        emit_mp_code(&self.program, &self.assignment)
    }
}

/// Solver outcome details that go into the report.
#[derive(Debug, Clone, Default)]
pub struct SolveInfo {
    pub ilp_total: Option<i64>,
    pub pi_total: Option<i64>,
    pub pi_iterations: Option<usize>,
    pub pi_converged: Option<bool>,
    pub system: Option<ConstraintSystem>,
}

/// Range analysis over all binding sets. A single set also yields its reference trace.
pub fn analyze(
    p: &LabeledProgram,
    runs: &[Bindings],
    cfg: &TuningConfig,
) -> Result<(UfpMap, Vec<Trace<MpFloat>>), TuneError> {
    let eval = cfg.eval();
    if runs.len() == 1 {
        let (trace, map) = reference_with_ranges(p, cfg.pref, &runs[0], &eval).map_err(TuneError::Ranges)?;
        return Ok((map, vec![trace]));
    }
    let map = analyze_ranges(p, cfg.pref, runs, &eval).map_err(TuneError::Ranges)?;
    Ok((map, Vec::new()))
}

/// Constraint generation and solving for an analyzed program. The result is checked by
/// substitution into the system it was solved on.
pub fn solve_program(
    p: &LabeledProgram,
    ranges: &UfpMap,
    cfg: &TuningConfig,
) -> Result<(NsbAssignment, SolveInfo), TuneError> {
    cfg.check()?;
    let links = compute_def_use(p);
    let gen = cfg.gen();
    let c1 = gen_ilp(p, ranges, &links, &gen)?;
    let ilp = solve_monotone(&c1)?;
    recheck(&c1, &ilp)?;
    let mut info = SolveInfo {
        ilp_total: Some(ilp.total()),
        ..Default::default()
    };
    match cfg.method {
        Method::Ilp => {
            info.system = Some(c1);
            Ok((ilp, info))
        }
        Method::Pi => {
            let c2 = gen_refined(p, ranges, &links, &gen)?;
            let out = policy_iterate(&c2, &cfg.solver)?;
            recheck(&c2, &out.assignment)?;
            info.pi_total = Some(out.assignment.total());
            info.pi_iterations = Some(out.iterations);
            info.pi_converged = Some(out.converged);
            info.system = Some(c2);
            Ok((out.assignment, info))
        }
    }
}

fn recheck(s: &ConstraintSystem, a: &NsbAssignment) -> Result<(), TuneError> {
    if a.vars != s.vars {
        return Err(TuneError::Check("assignment does not match the system's variables".into()));
    }
    if !s.is_feasible(&a.values) {
        let why = match s.first_violation(&a.values) {
            Some(c) => s.format_constraint(c),
            None => "a bound or carry definition".into(),
        };
        return Err(TuneError::Check(format!("solution violates {why}")));
    }
    Ok(())
}

/// Full pipeline on source text. `inputs` names the free variables; `runs` gives one binding
/// set per range-analysis run (one empty set for a closed program).
pub fn tune_source(source: &str, inputs: &[String], runs: &[Bindings], cfg: &TuningConfig) -> Result<Tuned, TuneError> {
    cfg.check()?;
    if runs.is_empty() {
        return Err(TuneError::Config("at least one input binding set is needed".into()));
    }
    let start = Instant::now();
    let p = parse_with(source, &cfg.parse_options(inputs))?;
    if p.requirements().is_empty() {
        return Err(TuneError::Config("the program has no require_nsb".into()));
    }
    let (ranges, mut references) = analyze(&p, runs, cfg)?;
    let (assignment, info) = solve_program(&p, &ranges, cfg)?;
    let seconds = start.elapsed().as_secs_f64();
    let mut report = TuningReport::new(&p, &assignment, cfg.method, &info, Some(seconds));
    if cfg.verify {
        let widths = assignment.point_widths(p.num_points());
        if references.is_empty() {
            references = runs
                .iter()
                .map(|r| crate::evaluator::run_reference(&p, cfg.pref, r, &cfg.eval()))
                .collect::<Result<_, _>>()
                .map_err(TuneError::Verify)?;
        }
        let mut rows = Vec::new();
        for (k, (r, reference)) in runs.iter().zip(&references).enumerate() {
            let t = verify_against(&p, &widths, r, reference, cfg)?;
            rows.extend(t.rows.into_iter().map(|mut row| {
                row.run = k;
                row
            }));
        }
        report.verification = rows;
    }
    Ok(Tuned {
        program: p,
        assignment,
        report,
        references,
    })
}

/// Tunes a closed program.
pub fn tune(source: &str, cfg: &TuningConfig) -> Result<(NsbAssignment, TuningReport), TuneError> {
    let t = tune_source(source, &[], &[Bindings::new()], cfg)?;
    Ok((t.assignment, t.report))
}
