//! Extended-real log-weights.
//!
//! A [`LogWeight`] is the value of a local log-density. Besides finite values
//! it carries `+inf` (the reference measure vanishes locally), `-inf` (the
//! measure itself vanishes locally) and an explicit [`LogWeight::Undefined`]
//! state for points where neither measure locally dominates the other.
//! A raw floating NaN never escapes: every constructor folds it into
//! `Undefined`.

use std::fmt;
use std::ops::{Add, AddAssign, Neg, Sub};

/// Extended-real log-density value.
#[derive(Clone, Copy, Debug)]
pub enum LogWeight {
    /// Finite value or one of the infinities. Never NaN.
    Value(f64),
    /// Neither measure locally dominates the other.
    Undefined,
}

/// Coarse classification of a [`LogWeight`], matching the special-value table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum WeightClass {
    Finite,
    PosInf,
    NegInf,
    Undefined,
}

impl LogWeight {
    pub const ZERO: LogWeight = LogWeight::Value(0.0);
    pub const NEG_INF: LogWeight = LogWeight::Value(f64::NEG_INFINITY);
    pub const POS_INF: LogWeight = LogWeight::Value(f64::INFINITY);

    /// Wraps a float, mapping NaN to `Undefined`.
    #[inline]
    pub fn new(v: f64) -> Self {
        if v.is_nan() {
            LogWeight::Undefined
        } else {
            LogWeight::Value(v)
        }
    }

    /// Log of a non-negative linear-space weight. Negative input is undefined.
    pub fn from_linear(w: f64) -> Self {
        if w < 0.0 {
            LogWeight::Undefined
        } else {
            LogWeight::new(libm::log(w))
        }
    }

    pub fn class(self) -> WeightClass {
        match self {
            LogWeight::Undefined => WeightClass::Undefined,
            LogWeight::Value(v) if v == f64::INFINITY => WeightClass::PosInf,
            LogWeight::Value(v) if v == f64::NEG_INFINITY => WeightClass::NegInf,
            LogWeight::Value(_) => WeightClass::Finite,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, LogWeight::Value(v) if v.is_finite())
    }

    pub fn is_undefined(self) -> bool {
        matches!(self, LogWeight::Undefined)
    }

    /// The value as a float; `Undefined` becomes NaN.
    pub fn to_f64(self) -> f64 {
        match self {
            LogWeight::Value(v) => v,
            LogWeight::Undefined => f64::NAN,
        }
    }

    /// The finite value, if any.
    pub fn finite(self) -> Option<f64> {
        match self {
            LogWeight::Value(v) if v.is_finite() => Some(v),
            _ => None,
        }
    }

    /// Linear-space weight `exp(self)`; `Undefined` becomes NaN.
    pub fn exp(self) -> f64 {
        libm::exp(self.to_f64())
    }

    /// Multiplies by a non-negative count (used when factoring iid terms).
    pub fn times(self, n: f64) -> Self {
        match self {
            LogWeight::Value(v) => LogWeight::new(v * n),
            LogWeight::Undefined => LogWeight::Undefined,
        }
    }

    /// `log(exp(a) + exp(b))` with a max shift.
    pub fn logaddexp(self, other: LogWeight) -> LogWeight {
        let (a, b) = match (self, other) {
            (LogWeight::Value(a), LogWeight::Value(b)) => (a, b),
            _ => return LogWeight::Undefined,
        };
        if a == f64::NEG_INFINITY {
            return LogWeight::Value(b);
        }
        if b == f64::NEG_INFINITY {
            return LogWeight::Value(a);
        }
        if a == f64::INFINITY || b == f64::INFINITY {
            return LogWeight::POS_INF;
        }
        let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
        LogWeight::Value(hi + libm::log1p(libm::exp(lo - hi)))
    }

    /// `log(1 + exp(self))`.
    pub fn softplus(self) -> LogWeight {
        match self {
            LogWeight::Undefined => LogWeight::Undefined,
            LogWeight::Value(v) if v == f64::NEG_INFINITY => LogWeight::ZERO,
            LogWeight::Value(v) if v == f64::INFINITY => LogWeight::POS_INF,
            LogWeight::Value(v) => {
                if v > 0.0 {
                    LogWeight::Value(v + libm::log1p(libm::exp(-v)))
                } else {
                    LogWeight::Value(libm::log1p(libm::exp(v)))
                }
            }
        }
    }

    /// Bitwise identity on the extended reals (`Undefined` equals itself).
    pub fn same(self, other: LogWeight) -> bool {
        match (self, other) {
            (LogWeight::Undefined, LogWeight::Undefined) => true,
            (LogWeight::Value(a), LogWeight::Value(b)) => a == b,
            _ => false,
        }
    }
}

impl From<f64> for LogWeight {
    fn from(v: f64) -> Self {
        LogWeight::new(v)
    }
}

impl PartialEq for LogWeight {
    /// `Undefined` compares unequal to everything, like NaN.
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (LogWeight::Value(a), LogWeight::Value(b)) => a == b,
            _ => false,
        }
    }
}

impl Neg for LogWeight {
    type Output = LogWeight;
    fn neg(self) -> LogWeight {
        match self {
            LogWeight::Value(v) => LogWeight::Value(-v),
            LogWeight::Undefined => LogWeight::Undefined,
        }
    }
}

impl Add for LogWeight {
    type Output = LogWeight;
    fn add(self, rhs: LogWeight) -> LogWeight {
        match (self, rhs) {
            (LogWeight::Value(a), LogWeight::Value(b)) => LogWeight::new(a + b),
            _ => LogWeight::Undefined,
        }
    }
}

impl Add<f64> for LogWeight {
    type Output = LogWeight;
    fn add(self, rhs: f64) -> LogWeight {
        self + LogWeight::new(rhs)
    }
}

impl AddAssign for LogWeight {
    fn add_assign(&mut self, rhs: LogWeight) {
        *self = *self + rhs;
    }
}

impl Sub for LogWeight {
    type Output = LogWeight;
    fn sub(self, rhs: LogWeight) -> LogWeight {
        self + (-rhs)
    }
}

impl std::iter::Sum for LogWeight {
    fn sum<I: Iterator<Item = LogWeight>>(iter: I) -> LogWeight {
        iter.fold(LogWeight::ZERO, |acc, w| acc + w)
    }
}

impl fmt::Display for LogWeight {
    /// `-inf`, `inf`, `undefined`, or 17 significant digits.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            LogWeight::Undefined => f.write_str("undefined"),
            LogWeight::Value(v) if v == f64::INFINITY => f.write_str("inf"),
            LogWeight::Value(v) if v == f64::NEG_INFINITY => f.write_str("-inf"),
            LogWeight::Value(v) => f.write_str(&format_g17(v)),
        }
    }
}

/// Formats a finite float like C's `%.17g`, except that both zeros print as `0`.
pub fn format_g17(v: f64) -> String {
    const PREC: i32 = 17;
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", (PREC - 1) as usize, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= PREC {
        let m = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{m}e{sign}{:02}", exp.abs());
    }
    let decimals = (PREC - 1 - exp).max(0) as usize;
    strip_zeros(&format!("{:.*}", decimals, v)).to_string()
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
