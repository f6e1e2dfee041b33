//! Binary floating-point values with explicit widths and the ufp/ulp exponent algebra.

mod exponent;
mod mpfloat;
mod scalar;

pub use exponent::{ufp_or_sentinel, ExponentInfo};
pub use mpfloat::{cmp_values, MpFloat};
pub use scalar::Scalar;

use thiserror::Error;

/// Default cap on significand width, also the reference precision.
pub const DEFAULT_P_MAX: u32 = 500;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NumericError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("square root of a negative number")]
    NegativeSqrt,
    #[error("invalid numeric literal `{0}`")]
    InvalidLiteral(String),
    #[error("non-finite value")]
    NonFinite,
    #[error("precision {got} outside [1, {max}]")]
    PrecisionOutOfRange { got: u32, max: u32 },
}

/// Precision limits shared by every stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NumericConfig {
    pub p_max: u32,
    /// ufp reported for an exact zero.
    pub ufp_zero: i64,
}

impl NumericConfig {
    pub fn new(p_max: u32) -> Self {
        NumericConfig {
            p_max,
            ufp_zero: -(p_max as i64),
        }
    }

    pub fn check_precision(&self, p: u32) -> Result<u32, NumericError> {
        if p == 0 || p > self.p_max {
            Err(NumericError::PrecisionOutOfRange {
                got: p,
                max: self.p_max,
            })
        } else {
            Ok(p)
        }
    }
}

impl Default for NumericConfig {
    fn default() -> Self {
        NumericConfig::new(DEFAULT_P_MAX)
    }
}

/// The arithmetic operations the evaluator needs, at an explicit result width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
    Sqrt,
}

/// Correctly rounded `op` on `operands` at `prec` bits. `Sqrt` takes one operand,
/// the rest take two.
pub fn arith(op: ArithOp, operands: &[&MpFloat], prec: u32) -> Result<MpFloat, NumericError> {
    match (op, operands) {
        (ArithOp::Add, [a, b]) => Ok(a.add(b, prec)),
        (ArithOp::Sub, [a, b]) => Ok(a.sub(b, prec)),
        (ArithOp::Mul, [a, b]) => Ok(a.mul(b, prec)),
        (ArithOp::Div, [a, b]) => a.div(b, prec),
        (ArithOp::Sqrt, [a]) => a.sqrt(prec),
        _ => panic!("arity mismatch for {op:?}"),
    }
}
