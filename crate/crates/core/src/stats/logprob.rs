//! Extended-exponent probabilities: a nonnegative number stored as its
//! base-10 logarithm, so tails down to 1e−1000 and beyond stay
//! representable.

use std::fmt;

use serde::Serialize;

/// A probability (or probability bound) as sign ∈ {0, +} plus log10
/// magnitude. Zero is stored as `log10 = −∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogProb {
    log10: f64,
}

impl LogProb {
    pub const ZERO: LogProb = LogProb {
        log10: f64::NEG_INFINITY,
    };
    pub const ONE: LogProb = LogProb { log10: 0.0 };

    pub fn from_log10(log10: f64) -> Self {
        Self { log10 }
    }

    pub fn from_ln(ln: f64) -> Self {
        Self {
            log10: ln / std::f64::consts::LN_10,
        }
    }

    pub fn from_prob(p: f64) -> Self {
        if p <= 0.0 {
            Self::ZERO
        } else {
            Self { log10: p.log10() }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.log10 == f64::NEG_INFINITY
    }

    pub fn log10(&self) -> f64 {
        self.log10
    }

    /// Converts back to f64; underflows to 0 below about 1e−308.
    pub fn to_f64(&self) -> f64 {
        10f64.powf(self.log10)
    }

    pub fn min(self, other: LogProb) -> LogProb {
        if self.log10 <= other.log10 {
            self
        } else {
            other
        }
    }

    /// Multiplication by a positive constant.
    pub fn scale(self, factor: f64) -> LogProb {
        if self.is_zero() || factor <= 0.0 {
            LogProb::ZERO
        } else {
            LogProb::from_log10(self.log10 + factor.log10())
        }
    }

    /// Mantissa and decimal exponent with the mantissa rounded to three
    /// significant digits, e.g. (2.96, −575).
    pub fn mantissa_exponent(&self) -> Option<(f64, i64)> {
        if self.is_zero() || !self.log10.is_finite() {
            return None;
        }
        let mut exp = self.log10.floor() as i64;
        let mut mantissa = 10f64.powf(self.log10 - exp as f64);
        mantissa = (mantissa * 100.0).round() / 100.0;
        if mantissa >= 10.0 {
            mantissa /= 10.0;
            exp += 1;
        }
        Some((mantissa, exp))
    }

    /// Compact scientific form, e.g. "2.96e-575" or "0".
    pub fn scientific(&self) -> String {
        match self.mantissa_exponent() {
            None => "0".to_string(),
            Some((m, e)) => format!("{m:.2}e{e}"),
        }
    }
}

impl fmt::Display for LogProb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.mantissa_exponent() {
            None => write!(f, "0"),
            Some((m, e)) => write!(f, "{m:.2} × 10^{e}"),
        }
    }
}
