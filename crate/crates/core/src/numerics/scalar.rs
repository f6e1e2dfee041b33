use std::fmt::Debug;
use std::str::FromStr;

use num_traits::Float;

use super::{MpFloat, NumericError};

/// Number type the interpreter can execute on.
///
/// Every operation receives the width of its result. Native floats ignore it
/// and compute in their own format; [`MpFloat`] rounds to it exactly.
pub trait Scalar: Clone + Debug + PartialOrd + Send + Sync + 'static {
    /// Whether `prec` arguments are honoured.
    const WIDTH_FAITHFUL: bool;

    fn from_literal(text: &str, prec: u32) -> Result<Self, NumericError>;
    fn from_mp(v: &MpFloat, prec: u32) -> Self;
    fn round(&self, prec: u32) -> Self;
    fn add(&self, rhs: &Self, prec: u32) -> Self;
    fn sub(&self, rhs: &Self, prec: u32) -> Self;
    fn mul(&self, rhs: &Self, prec: u32) -> Self;
    fn div(&self, rhs: &Self, prec: u32) -> Result<Self, NumericError>;
    fn sqrt(&self, prec: u32) -> Result<Self, NumericError>;
    fn neg(&self, prec: u32) -> Self;
    fn abs(&self) -> Self;
    fn ufp(&self) -> Option<i64>;
    fn to_f64(&self) -> f64;
    /// Exact conversion.
    fn to_mp(&self) -> MpFloat;
    fn decimal(&self) -> String;
}

impl Scalar for MpFloat {
    const WIDTH_FAITHFUL: bool = true;

    fn from_literal(text: &str, prec: u32) -> Result<Self, NumericError> {
        MpFloat::from_decimal(text, prec)
    }
    fn from_mp(v: &MpFloat, prec: u32) -> Self {
        v.round_to(prec)
    }
    fn round(&self, prec: u32) -> Self {
        self.round_to(prec)
    }
    fn add(&self, rhs: &Self, prec: u32) -> Self {
        MpFloat::add(self, rhs, prec)
    }
    fn sub(&self, rhs: &Self, prec: u32) -> Self {
        MpFloat::sub(self, rhs, prec)
    }
    fn mul(&self, rhs: &Self, prec: u32) -> Self {
        MpFloat::mul(self, rhs, prec)
    }
    fn div(&self, rhs: &Self, prec: u32) -> Result<Self, NumericError> {
        MpFloat::div(self, rhs, prec)
    }
    fn sqrt(&self, prec: u32) -> Result<Self, NumericError> {
        MpFloat::sqrt(self, prec)
    }
    fn neg(&self, prec: u32) -> Self {
        MpFloat::neg(self).round_to(prec)
    }
    fn abs(&self) -> Self {
        MpFloat::abs(self)
    }
    fn ufp(&self) -> Option<i64> {
        MpFloat::ufp(self)
    }
    fn to_f64(&self) -> f64 {
        MpFloat::to_f64(self)
    }
    fn to_mp(&self) -> MpFloat {
        self.clone()
    }
    fn decimal(&self) -> String {
        self.to_decimal_string()
    }
}

impl<T> Scalar for T
where
    T: Float + FromStr + Debug + Send + Sync + 'static,
{
    const WIDTH_FAITHFUL: bool = false;

    fn from_literal(text: &str, _prec: u32) -> Result<Self, NumericError> {
        text.trim()
            .parse::<T>()
            .map_err(|_| NumericError::InvalidLiteral(text.to_string()))
    }
    fn from_mp(v: &MpFloat, _prec: u32) -> Self {
        T::from(v.to_f64()).expect("f64 converts to any float")
    }
    fn round(&self, _prec: u32) -> Self {
        *self
    }
    fn add(&self, rhs: &Self, _prec: u32) -> Self {
        *self + *rhs
    }
    fn sub(&self, rhs: &Self, _prec: u32) -> Self {
        *self - *rhs
    }
    fn mul(&self, rhs: &Self, _prec: u32) -> Self {
        *self * *rhs
    }
    fn div(&self, rhs: &Self, _prec: u32) -> Result<Self, NumericError> {
        if rhs.is_zero() {
            Err(NumericError::DivisionByZero)
        } else {
            Ok(*self / *rhs)
        }
    }
    fn sqrt(&self, _prec: u32) -> Result<Self, NumericError> {
        if *self < T::zero() {
            Err(NumericError::NegativeSqrt)
        } else {
            Ok(Float::sqrt(*self))
        }
    }
    fn neg(&self, _prec: u32) -> Self {
        -*self
    }
    fn abs(&self) -> Self {
        Float::abs(*self)
    }
    fn ufp(&self) -> Option<i64> {
        if self.is_zero() || !self.is_finite() {
            return None;
        }
        let (mant, exp, _) = self.integer_decode();
        Some(exp as i64 + (64 - mant.leading_zeros()) as i64 - 1)
    }
    fn to_f64(&self) -> f64 {
        self.to_f64().expect("float converts to f64")
    }
    fn to_mp(&self) -> MpFloat {
        let (mant, exp, sign) = self.integer_decode();
        MpFloat::from_parts(sign < 0, mant.into(), exp as i64, 64)
    }
    fn decimal(&self) -> String {
        format!("{self:?}")
    }
}
