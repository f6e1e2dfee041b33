use serde::{Deserialize, Serialize};

use super::{MpFloat, NumericConfig};

/// `ufp(x)`, with the configured sentinel for zero.
pub fn ufp_or_sentinel(x: &MpFloat, cfg: &NumericConfig) -> i64 {
    x.ufp().unwrap_or(cfg.ufp_zero)
}

/// Exponent bookkeeping for one value: first place, significant bits, and
/// significant bits of its error term. Everything else is derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExponentInfo {
    pub ufp: i64,
    pub nsb: u32,
    pub nsbe: u32,
}

impl ExponentInfo {
    pub fn new(ufp: i64, nsb: u32, nsbe: u32) -> Self {
        assert!(nsb >= 1, "nsb must be positive");
        ExponentInfo { ufp, nsb, nsbe }
    }

    /// Unit in the last place: `ufp - nsb + 1`.
    pub fn ulp(&self) -> i64 {
        self.ufp - self.nsb as i64 + 1
    }

    /// First place of the error: `ufp - nsb`.
    pub fn ufpe(&self) -> i64 {
        self.ufp - self.nsb as i64
    }

    /// Last place of the error: `ufpe - nsbe + 1`.
    pub fn ulpe(&self) -> i64 {
        self.ufpe() - self.nsbe as i64 + 1
    }

    /// Absolute error bound implied by `nsb`: one ulp, `2^(ufp - nsb + 1)`.
    pub fn error_bound(&self) -> f64 {
        2f64.powi(self.ulp() as i32)
    }
}
