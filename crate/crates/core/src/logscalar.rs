//! Nonnegative reals stored by their natural logarithm.
//!
//! The bound constants reach magnitudes like `400^-m * exp(-206 K D^2)`, far
//! below the smallest positive double, so every calculator works with
//! [`LogScalar`] and only converts to a linear value on request.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Div, Mul};

use serde::{Deserialize, Serialize};

/// A nonnegative real represented as `exp(log_value)`.
///
/// `log_value == -inf` encodes exact zero, which the isoperimetric bound
/// returns above the critical exponent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogScalar {
    log_value: f64,
}

/// Linear value of a [`LogScalar`], flagged when it is not representable.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Linear {
    pub value: f64,
    pub underflow: bool,
    pub overflow: bool,
}

impl LogScalar {
    pub const ZERO: LogScalar = LogScalar {
        log_value: f64::NEG_INFINITY,
    };
    pub const ONE: LogScalar = LogScalar { log_value: 0.0 };

    pub fn from_log(log_value: f64) -> Self {
        assert!(
            !log_value.is_nan() && log_value != f64::INFINITY,
            "LogScalar log value must be finite or -inf, got {log_value}"
        );
        Self { log_value }
    }

    /// Panics on negative or NaN input.
    pub fn from_value(value: f64) -> Self {
        assert!(value >= 0.0, "LogScalar requires a nonnegative value, got {value}");
        Self::from_log(value.ln())
    }

    pub fn log_value(self) -> f64 {
        self.log_value
    }

    pub fn is_zero(self) -> bool {
        self.log_value == f64::NEG_INFINITY
    }

    /// `exp(log_value)`; 0.0 on underflow.
    pub fn value(self) -> f64 {
        self.log_value.exp()
    }

    pub fn linear(self) -> Linear {
        let value = self.value();
        Linear {
            value,
            underflow: value == 0.0 && !self.is_zero(),
            overflow: value.is_infinite(),
        }
    }

    /// Log-sum-exp.
    pub fn add(self, other: LogScalar) -> LogScalar {
        let (hi, lo) = if self.log_value >= other.log_value {
            (self.log_value, other.log_value)
        } else {
            (other.log_value, self.log_value)
        };
        if lo == f64::NEG_INFINITY {
            return LogScalar::from_log(hi);
        }
        LogScalar::from_log(hi + (lo - hi).exp().ln_1p())
    }

    pub fn powf(self, exponent: f64) -> LogScalar {
        if self.is_zero() {
            return if exponent == 0.0 {
                LogScalar::ONE
            } else {
                assert!(exponent > 0.0, "zero raised to a negative power");
                LogScalar::ZERO
            };
        }
        LogScalar::from_log(self.log_value * exponent)
    }

    pub fn sqrt(self) -> LogScalar {
        self.powf(0.5)
    }

    pub fn recip(self) -> LogScalar {
        assert!(!self.is_zero(), "reciprocal of zero");
        LogScalar::from_log(-self.log_value)
    }

    pub fn min(self, other: LogScalar) -> LogScalar {
        if other.log_value < self.log_value {
            other
        } else {
            self
        }
    }

    /// Relative closeness of the log values, `|a - b| <= rel * max(1, |a|, |b|)`.
    pub fn approx_eq(self, other: LogScalar, rel: f64) -> bool {
        if self.is_zero() || other.is_zero() {
            return self.is_zero() && other.is_zero();
        }
        let scale = 1f64.max(self.log_value.abs()).max(other.log_value.abs());
        (self.log_value - other.log_value).abs() <= rel * scale
    }
}

impl Mul for LogScalar {
    type Output = LogScalar;
    fn mul(self, rhs: LogScalar) -> LogScalar {
        if self.is_zero() || rhs.is_zero() {
            return LogScalar::ZERO;
        }
        LogScalar::from_log(self.log_value + rhs.log_value)
    }
}

impl Div for LogScalar {
    type Output = LogScalar;
    fn div(self, rhs: LogScalar) -> LogScalar {
        self * rhs.recip()
    }
}

impl PartialOrd for LogScalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.log_value.partial_cmp(&other.log_value)
    }
}

impl fmt::Display for LogScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lin = self.linear();
        if lin.underflow {
            write!(f, "exp({:.6}) [underflow]", self.log_value)
        } else {
            write!(f, "{:.6e}", lin.value)
        }
    }
}
