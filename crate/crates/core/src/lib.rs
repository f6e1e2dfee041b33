//! Bit-level precision tuning: every value of a numeric program gets the fewest significant
//! bits that still meet the accuracy required on its outputs.

pub mod constraints;
pub mod evaluator;
pub mod frontend;
pub mod nbody;
pub mod numerics;
pub mod solver;
pub mod tuner;

/// Multi-precision value used by reference and tuned runs.
pub type Value = numerics::MpFloat;
/// Execution trace in multi-precision arithmetic.
pub type MpTrace = evaluator::Trace<numerics::MpFloat>;
/// Execution trace in native double precision.
pub type F64Trace = evaluator::Trace<f64>;
/// Execution trace in native single precision.
pub type F32Trace = evaluator::Trace<f32>;
