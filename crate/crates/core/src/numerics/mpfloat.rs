//! Arbitrary-precision binary floating point with an explicit significand width.
//!
//! A value is `(-1)^neg * mant * 2^exp`. The stored mantissa is kept odd (trailing
//! zeros folded into the exponent) so that equal values have equal representations;
//! [`MpFloat::significand`] returns the normalized, `prec`-bit form.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use super::NumericError;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct MpFloat {
    neg: bool,
    mant: BigUint,
    exp: i64,
    prec: u32,
}

impl MpFloat {
    pub fn zero(prec: u32) -> Self {
        MpFloat {
            neg: false,
            mant: BigUint::zero(),
            exp: 0,
            prec: prec.max(1),
        }
    }

    pub fn one(prec: u32) -> Self {
        Self::from_parts(false, BigUint::one(), 0, prec)
    }

    /// Builds `(-1)^neg * mant * 2^exp` rounded to nearest-even at `prec` bits.
    pub fn from_parts(neg: bool, mant: BigUint, exp: i64, prec: u32) -> Self {
        round_parts(neg, mant, exp, false, prec.max(1))
    }

    pub fn from_i64(v: i64, prec: u32) -> Self {
        Self::from_parts(v < 0, BigUint::from(v.unsigned_abs()), 0, prec)
    }

    pub fn from_f64(v: f64, prec: u32) -> Result<Self, NumericError> {
        if !v.is_finite() {
            return Err(NumericError::NonFinite);
        }
        if v == 0.0 {
            return Ok(Self::zero(prec));
        }
        let bits = v.to_bits();
        let neg = bits >> 63 == 1;
        let biased = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (mant, exp) = if biased == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), biased - 1075)
        };
        Ok(Self::from_parts(neg, BigUint::from(mant), exp, prec))
    }

    /// Parses a decimal or scientific literal, correctly rounded to `prec` bits.
    pub fn from_decimal(text: &str, prec: u32) -> Result<Self, NumericError> {
        let (neg, digits, dec_exp) = parse_decimal(text)?;
        if digits.is_zero() {
            return Ok(Self::zero(prec));
        }
        let prec = prec.max(1);
        if dec_exp >= 0 {
            let scale = BigUint::from(10u32).pow(dec_exp as u32);
            Ok(round_parts(neg, digits * scale, 0, false, prec))
        } else {
            let den = BigUint::from(10u32).pow((-dec_exp) as u32);
            Ok(div_parts(neg, &digits, 0, &den, 0, prec))
        }
    }

    pub fn precision(&self) -> u32 {
        self.prec
    }

    pub fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.neg
    }

    /// Exponent of the leading bit, `floor(log2 |x|)`; `None` for zero.
    pub fn ufp(&self) -> Option<i64> {
        if self.is_zero() {
            None
        } else {
            Some(self.exp + self.mant.bits() as i64 - 1)
        }
    }

    /// Normalized significand (exactly `prec` bits, top bit set) and the matching
    /// exponent, so that `|x| = significand * 2^exponent`. Zero gives `(0, 0)`.
    pub fn significand(&self) -> (BigUint, i64) {
        if self.is_zero() {
            return (BigUint::zero(), 0);
        }
        let pad = self.prec as i64 - self.mant.bits() as i64;
        debug_assert!(pad >= 0);
        (&self.mant << pad as usize, self.exp - pad)
    }

    /// Odd mantissa and exponent of the exact value (no padding).
    pub fn raw_parts(&self) -> (bool, &BigUint, i64) {
        (self.neg, &self.mant, self.exp)
    }

    pub fn abs(&self) -> Self {
        let mut r = self.clone();
        r.neg = false;
        r
    }

    pub fn neg(&self) -> Self {
        let mut r = self.clone();
        if !r.is_zero() {
            r.neg = !r.neg;
        }
        r
    }

    /// Same value tagged with a larger precision when it already fits, otherwise rounded.
    pub fn round_to(&self, prec: u32) -> Self {
        let prec = prec.max(1);
        if self.mant.bits() <= prec as u64 {
            let mut r = self.clone();
            r.prec = prec;
            return r;
        }
        round_parts(self.neg, self.mant.clone(), self.exp, false, prec)
    }

    pub fn add(&self, rhs: &Self, prec: u32) -> Self {
        add_signed(self, rhs, false, prec.max(1))
    }

    pub fn sub(&self, rhs: &Self, prec: u32) -> Self {
        add_signed(self, rhs, true, prec.max(1))
    }

    pub fn mul(&self, rhs: &Self, prec: u32) -> Self {
        if self.is_zero() || rhs.is_zero() {
            return Self::zero(prec);
        }
        round_parts(
            self.neg != rhs.neg,
            &self.mant * &rhs.mant,
            self.exp + rhs.exp,
            false,
            prec.max(1),
        )
    }

    pub fn div(&self, rhs: &Self, prec: u32) -> Result<Self, NumericError> {
        if rhs.is_zero() {
            return Err(NumericError::DivisionByZero);
        }
        if self.is_zero() {
            return Ok(Self::zero(prec));
        }
        Ok(div_parts(
            self.neg != rhs.neg,
            &self.mant,
            self.exp,
            &rhs.mant,
            rhs.exp,
            prec.max(1),
        ))
    }

    pub fn sqrt(&self, prec: u32) -> Result<Self, NumericError> {
        if self.is_zero() {
            return Ok(Self::zero(prec));
        }
        if self.neg {
            return Err(NumericError::NegativeSqrt);
        }
        let prec = prec.max(1);
        // Scale so the radicand has an even exponent and at least 2(prec+2) bits.
        let want = 2 * (prec as i64 + 2);
        let mut shift = (want - self.mant.bits() as i64 + 1).max(0);
        if (self.exp - shift).rem_euclid(2) != 0 {
            shift += 1;
        }
        let n = &self.mant << shift as usize;
        let root = n.sqrt();
        let sticky = &root * &root != n;
        Ok(round_parts(false, root, (self.exp - shift) / 2, sticky, prec))
    }

    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let r = self.round_to(53);
        let m = r.mant.to_u64().expect("53-bit mantissa") as f64;
        let v = ldexp(m, r.exp);
        if r.neg {
            -v
        } else {
            v
        }
    }

    /// Decimal rendering with `digits` significant digits, round-half-even.
    pub fn to_decimal_digits(&self, digits: usize) -> String {
        let digits = digits.max(1);
        if self.is_zero() {
            return "0.0".to_string();
        }
        // Exact decimal: mant * 2^exp = n * 10^k
        let (n, k) = if self.exp >= 0 {
            (&self.mant << self.exp as usize, 0i64)
        } else {
            let e = (-self.exp) as u32;
            (&self.mant * BigUint::from(5u32).pow(e), -(e as i64))
        };
        let s = n.to_str_radix(10);
        let (s, k) = if s.len() > digits {
            let drop = s.len() - digits;
            let p = BigUint::from(10u32).pow(drop as u32);
            let (mut q, r) = n.div_rem(&p);
            let twice = &r << 1usize;
            let up = match twice.cmp(&p) {
                Ordering::Greater => true,
                Ordering::Less => false,
                Ordering::Equal => q.is_odd(),
            };
            if up {
                q += 1u32;
            }
            let qs = q.to_str_radix(10);
            // carry may add a digit
            if qs.len() > digits {
                (qs[..digits].to_string(), k + drop as i64 + 1)
            } else {
                (qs, k + drop as i64)
            }
        } else {
            (s, k)
        };
        let trimmed = s.trim_end_matches('0');
        let k = k + (s.len() - trimmed.len().max(1)) as i64;
        let s = if trimmed.is_empty() { "0" } else { trimmed };
        format_scientific(self.neg, s, k)
    }

    /// Enough significant digits for a decimal round trip at this value's precision.
    pub fn to_decimal_string(&self) -> String {
        let digits = (self.prec as f64 * std::f64::consts::LOG10_2).ceil() as usize + 1;
        self.to_decimal_digits(digits)
    }
}

impl fmt::Debug for MpFloat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "MpFloat({}{:#x}p{}, prec={})",
            if self.neg { "-" } else { "" },
            self.mant,
            self.exp,
            self.prec
        )
    }
}

impl fmt::Display for MpFloat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_decimal_string())
    }
}

impl PartialOrd for MpFloat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(cmp_values(self, other))
    }
}

/// Total order on the represented values; precision tags are ignored.
pub fn cmp_values(a: &MpFloat, b: &MpFloat) -> Ordering {
    match (a.is_zero(), b.is_zero()) {
        (true, true) => return Ordering::Equal,
        (true, false) => {
            return if b.neg {
                Ordering::Greater
            } else {
                Ordering::Less
            }
        }
        (false, true) => {
            return if a.neg {
                Ordering::Less
            } else {
                Ordering::Greater
            }
        }
        _ => {}
    }
    if a.neg != b.neg {
        return if a.neg {
            Ordering::Less
        } else {
            Ordering::Greater
        };
    }
    let mag = cmp_magnitude(a, b);
    if a.neg {
        mag.reverse()
    } else {
        mag
    }
}

fn cmp_magnitude(a: &MpFloat, b: &MpFloat) -> Ordering {
    let (ua, ub) = (a.ufp().unwrap(), b.ufp().unwrap());
    if ua != ub {
        return ua.cmp(&ub);
    }
    let e = a.exp.min(b.exp);
    let ma = &a.mant << (a.exp - e) as usize;
    let mb = &b.mant << (b.exp - e) as usize;
    ma.cmp(&mb)
}

/// Round `(-1)^neg * (mant + sticky·ε) * 2^exp` to `prec` bits, ties to even.
/// `sticky` marks a nonzero remainder strictly below the last bit of `mant`.
fn round_parts(neg: bool, mut mant: BigUint, mut exp: i64, sticky: bool, prec: u32) -> MpFloat {
    let mut bits = mant.bits();
    if bits == 0 {
        return MpFloat::zero(prec);
    }
    if sticky && bits < prec as u64 + 2 {
        let pad = prec as u64 + 2 - bits;
        mant <<= pad as usize;
        exp -= pad as i64;
        bits += pad;
    }
    if bits > prec as u64 {
        let shift = bits - prec as u64;
        let tz = mant.trailing_zeros().unwrap_or(0);
        let half = mant.bit(shift - 1);
        let below = sticky || tz < shift - 1;
        let mut q = mant >> shift as usize;
        if half && (below || q.bit(0)) {
            q += 1u32;
        }
        mant = q;
        exp += shift as i64;
    }
    normalize(neg, mant, exp, prec)
}

fn normalize(neg: bool, mut mant: BigUint, mut exp: i64, prec: u32) -> MpFloat {
    if mant.is_zero() {
        return MpFloat::zero(prec);
    }
    let tz = mant.trailing_zeros().unwrap_or(0);
    if tz > 0 {
        mant >>= tz as usize;
        exp += tz as i64;
    }
    MpFloat {
        neg,
        mant,
        exp,
        prec,
    }
}

fn div_parts(neg: bool, ma: &BigUint, ea: i64, mb: &BigUint, eb: i64, prec: u32) -> MpFloat {
    // quotient needs at least prec + 2 bits
    let k = (prec as i64 + 3 + mb.bits() as i64 - ma.bits() as i64).max(0);
    let num = ma << k as usize;
    let (q, r) = num.div_rem(mb);
    round_parts(neg, q, ea - eb - k, !r.is_zero(), prec)
}

fn add_signed(a: &MpFloat, b: &MpFloat, negate_b: bool, prec: u32) -> MpFloat {
    let b_neg = b.neg != negate_b;
    if a.is_zero() {
        let mut r = b.round_to(prec);
        if !r.is_zero() {
            r.neg = b_neg;
        }
        return r;
    }
    if b.is_zero() {
        return a.round_to(prec);
    }
    // A far-smaller operand only contributes a sticky bit; substitute a tiny
    // stand-in of the same sign so the shift stays bounded.
    let (ua, ub) = (a.ufp().unwrap(), b.ufp().unwrap());
    let (big, big_neg, small_exp, small_neg, small_mant);
    if ua >= ub {
        big = a;
        big_neg = a.neg;
        small_neg = b_neg;
        let limit = a.exp.min(ua - prec as i64 - 2) - 2;
        if ub < limit {
            small_mant = BigUint::one();
            small_exp = limit;
        } else {
            small_mant = b.mant.clone();
            small_exp = b.exp;
        }
    } else {
        big = b;
        big_neg = b_neg;
        small_neg = a.neg;
        let limit = b.exp.min(ub - prec as i64 - 2) - 2;
        if ua < limit {
            small_mant = BigUint::one();
            small_exp = limit;
        } else {
            small_mant = a.mant.clone();
            small_exp = a.exp;
        }
    }
    let e = big.exp.min(small_exp);
    let mb = &big.mant << (big.exp - e) as usize;
    let ms = small_mant << (small_exp - e) as usize;
    if big_neg == small_neg {
        round_parts(big_neg, mb + ms, e, false, prec)
    } else {
        match mb.cmp(&ms) {
            Ordering::Equal => MpFloat::zero(prec),
            Ordering::Greater => round_parts(big_neg, mb - ms, e, false, prec),
            Ordering::Less => round_parts(small_neg, ms - mb, e, false, prec),
        }
    }
}

/// Returns `(negative, digits, decimal_exponent)` with value `digits * 10^decimal_exponent`.
pub(crate) fn parse_decimal(text: &str) -> Result<(bool, BigUint, i64), NumericError> {
    let bad = || NumericError::InvalidLiteral(text.to_string());
    let t = text.trim();
    let (neg, t) = match t.as_bytes().first() {
        Some(b'-') => (true, &t[1..]),
        Some(b'+') => (false, &t[1..]),
        _ => (false, t),
    };
    let (mantissa, exponent) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], Some(&t[i + 1..])),
        None => (t, None),
    };
    let (int_part, frac_part) = match mantissa.find('.') {
        Some(i) => (&mantissa[..i], &mantissa[i + 1..]),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let mut exp10: i64 = match exponent {
        Some(e) => e.parse::<i64>().map_err(|_| bad())?,
        None => 0,
    };
    exp10 -= frac_part.len() as i64;
    let all: String = format!("{int_part}{frac_part}");
    let digits = BigUint::parse_bytes(all.as_bytes(), 10).ok_or_else(bad)?;
    Ok((neg, digits, exp10))
}

fn format_scientific(neg: bool, digits: &str, k: i64) -> String {
    // value = digits * 10^k
    let sign = if neg { "-" } else { "" };
    let n = digits.len() as i64;
    let point = n + k; // position of the decimal point from the left
    if (-6..=21).contains(&point) {
        if point <= 0 {
            format!("{sign}0.{}{digits}", "0".repeat((-point) as usize))
        } else if point >= n {
            format!("{sign}{digits}{}.0", "0".repeat((point - n) as usize))
        } else {
            let (i, f) = digits.split_at(point as usize);
            format!("{sign}{i}.{f}")
        }
    } else {
        let (head, tail) = digits.split_at(1);
        let tail = if tail.is_empty() { "0" } else { tail };
        format!("{sign}{head}.{tail}e{}", point - 1)
    }
}

fn ldexp(mut m: f64, mut e: i64) -> f64 {
    while e > 1000 {
        m *= 2f64.powi(1000);
        e -= 1000;
        if m.is_infinite() {
            return m;
        }
    }
    while e < -1000 {
        m *= 2f64.powi(-1000);
        e += 1000;
        if m == 0.0 {
            return m;
        }
    }
    m * 2f64.powi(e as i32)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mp(s: &str, p: u32) -> MpFloat {
        MpFloat::from_decimal(s, p).unwrap()
    }

    #[test]
    fn ufp_examples() {
        assert_eq!(mp("1.0", 53).ufp(), Some(0));
        assert_eq!(mp("365.24", 53).ufp(), Some(8));
        assert_eq!(mp("0.5", 53).ufp(), Some(-1));
        assert_eq!(mp("-0.75", 53).ufp(), Some(-1));
        assert_eq!(MpFloat::zero(10).ufp(), None);
    }

    #[test]
    fn ties_to_even_on_one_bit() {
        assert_eq!(mp("1.5", 53).round_to(1), mp("2.0", 53).round_to(1));
        // 2.5 at 2 bits: candidates 2 and 3 -> 2.5 is a tie, 2 (10b) is even
        assert_eq!(mp("2.5", 10).round_to(2).to_f64(), 2.0);
        assert_eq!(mp("3.5", 10).round_to(2).to_f64(), 4.0);
    }

    #[test]
    fn basic_arith() {
        let one = MpFloat::one(24);
        assert_eq!(one.add(&one, 24).to_f64(), 2.0);
        let x = mp("1.5", 24);
        assert_eq!(x.mul(&x, 2).to_f64(), 2.0);
        assert_eq!(mp("1", 53).div(&mp("3", 53), 53).unwrap().to_f64(), 1.0 / 3.0);
        assert_eq!(mp("2", 53).sqrt(53).unwrap().to_f64(), 2f64.sqrt());
        assert!(mp("1", 10).div(&MpFloat::zero(10), 10).is_err());
        assert!(mp("-1", 10).sqrt(10).is_err());
    }

    #[test]
    fn decimal_literals_match_f64_parsing() {
        for s in ["0.01", "365.24", "4.8414316", "9.5479196E-4", "-0.002767425", "1e300", "2.5e-310"] {
            assert_eq!(mp(s, 53).to_f64(), s.parse::<f64>().unwrap(), "{s}");
        }
    }

    #[test]
    fn far_apart_addition_rounds_like_exact() {
        let big = mp("1", 53);
        let tiny = mp("1e-200", 53);
        assert_eq!(big.add(&tiny, 53), big.round_to(53));
        assert_eq!(big.sub(&tiny, 53).to_f64(), 1.0);
        // half-ulp tie broken by the tiny term
        let x = mp("1", 60).add(&MpFloat::from_parts(false, 1u32.into(), -53, 60), 60);
        assert_eq!(x.add(&tiny, 53).to_f64(), 1.0 + f64::EPSILON);
        assert_eq!(x.sub(&tiny, 53).to_f64(), 1.0);
    }

    #[test]
    fn decimal_printing() {
        assert_eq!(mp("0.01", 53).to_decimal_digits(17), "0.01");
        assert_eq!(mp("365.24", 500).to_decimal_digits(5), "365.24");
        assert_eq!(mp("1e30", 200).to_decimal_digits(3), "1.0e30");
        let x = mp("0.1", 100);
        assert_eq!(MpFloat::from_decimal(&x.to_decimal_string(), 100).unwrap(), x);
    }
}
