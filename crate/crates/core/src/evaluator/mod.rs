//! One interpreter core for reference, range-recording and tuned executions.

mod interp;
mod ranges;

pub use interp::{execute, Bindings, EvalConfig, RangeRecorder, SampleSeries, Trace};
pub use ranges::{analyze_ranges, analyze_ranges_with, reference_with_ranges, UfpEntry, UfpMap};

use crate::frontend::{ControlPoint, LabeledProgram};
use crate::numerics::{MpFloat, NumericError};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalErrorKind {
    #[error(transparent)]
    Numeric(#[from] NumericError),
    #[error("iteration cap of {0} loop iterations exceeded")]
    IterationCap(u64),
    #[error("`{0}` read before any assignment")]
    UndefinedRead(String),
    #[error("no binding for input `{0}`")]
    MissingInput(String),
    #[error("cannot sample unknown variable `{0}`")]
    UnknownSample(String),
    #[error("width vector has {got} entries for {expected} control points")]
    WidthCount { got: usize, expected: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct EvalError {
    pub point: Option<ControlPoint>,
    pub kind: EvalErrorKind,
}

impl std::fmt::Display for EvalError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.point {
            Some(p) => write!(f, "at {p}: {}", self.kind),
            None => write!(f, "{}", self.kind),
        }
    }
}

/// Every operation at `pref` bits.
pub fn run_reference(
    p: &LabeledProgram,
    pref: u32,
    inputs: &Bindings,
    cfg: &EvalConfig,
) -> Result<Trace<MpFloat>, EvalError> {
    execute(p, &vec![pref; p.num_points()], inputs, cfg, None)
}

/// Literals, reads, operation results and stores rounded to their point's width.
pub fn run_tuned(
    p: &LabeledProgram,
    widths: &[u32],
    inputs: &Bindings,
    cfg: &EvalConfig,
) -> Result<Trace<MpFloat>, EvalError> {
    if widths.len() != p.num_points() {
        return Err(EvalError {
            point: None,
            kind: EvalErrorKind::WidthCount {
                got: widths.len(),
                expected: p.num_points(),
            },
        });
    }
    execute(p, widths, inputs, cfg, None)
}
