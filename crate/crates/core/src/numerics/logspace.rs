//! Arithmetic on strictly positive reals stored by their natural logarithm.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul};

use serde::{Deserialize, Serialize};

/// `ln(e^a + e^b)` without overflow.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln(e^a - e^b)` for `a >= b`; `-inf` when they are equal.
pub fn log_diff_exp(a: f64, b: f64) -> f64 {
    debug_assert!(a >= b, "log_diff_exp needs a >= b");
    if b == f64::NEG_INFINITY {
        return a;
    }
    if a == b {
        return f64::NEG_INFINITY;
    }
    a + (-(b - a).exp_m1()).ln()
}

/// `ln Σ e^{x_i}`; `-inf` for an empty slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let s: f64 = xs.iter().map(|x| (x - m).exp()).sum();
    m + s.ln()
}

/// A strictly positive real `x` held as `ln x`.
///
/// Multiplication, division and powers are exact in the log domain; addition
/// goes through a stable log-sum-exp whose relative error is a few ulps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LogNumber {
    ln: f64,
}

impl LogNumber {
    pub const ONE: LogNumber = LogNumber { ln: 0.0 };

    pub fn from_ln(ln: f64) -> Self {
        debug_assert!(!ln.is_nan());
        LogNumber { ln }
    }

    /// Panics if `x` is not strictly positive.
    pub fn from_f64(x: f64) -> Self {
        assert!(x > 0.0, "LogNumber needs a positive value, got {x}");
        LogNumber { ln: x.ln() }
    }

    pub fn ln(self) -> f64 {
        self.ln
    }

    /// May overflow to `inf` or underflow to `0`.
    pub fn to_f64(self) -> f64 {
        self.ln.exp()
    }

    pub fn powf(self, p: f64) -> Self {
        LogNumber { ln: self.ln * p }
    }

    /// `self - other`; `None` unless `self > other`.
    pub fn checked_sub(self, other: LogNumber) -> Option<Self> {
        (self.ln > other.ln).then(|| LogNumber {
            ln: log_diff_exp(self.ln, other.ln),
        })
    }
}

impl Add for LogNumber {
    type Output = LogNumber;
    fn add(self, rhs: LogNumber) -> LogNumber {
        LogNumber {
            ln: log_add_exp(self.ln, rhs.ln),
        }
    }
}

// Multiplying log-domain numbers adds their logarithms.
#[allow(clippy::suspicious_arithmetic_impl)]
impl Mul for LogNumber {
    type Output = LogNumber;
    fn mul(self, rhs: LogNumber) -> LogNumber {
        LogNumber { ln: self.ln + rhs.ln }
    }
}

#[allow(clippy::suspicious_arithmetic_impl)]
impl Div for LogNumber {
    type Output = LogNumber;
    fn div(self, rhs: LogNumber) -> LogNumber {
        LogNumber { ln: self.ln - rhs.ln }
    }
}

impl PartialOrd for LogNumber {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.ln.partial_cmp(&other.ln)
    }
}

impl fmt::Display for LogNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ln.abs() < 700.0 {
            write!(f, "{}", self.to_f64())
        } else {
            let log10 = self.ln / std::f64::consts::LN_10;
            let exp = log10.floor();
            write!(f, "{:.6}e{}", 10f64.powf(log10 - exp), exp as i64)
        }
    }
}
