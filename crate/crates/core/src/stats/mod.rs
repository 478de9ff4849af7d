//! Hypothesis-test engine: winning-probability bound for ε-incompatible
//! noncontextual models, extreme-tail binomial P-values in extended-exponent
//! arithmetic, and the Bentkus concentration bound used to certify the
//! incompatibility estimate.

mod bentkus;
mod logprob;
mod nchv;
mod tail;

use serde::Serialize;
use thiserror::Error;

pub use bentkus::{bentkus_deviation_bound, epsilon_upper_bound, EpsilonEstimate};
pub use logprob::LogProb;
pub use nchv::{nchv_max_win, nchv_min_inequality_sum};
pub use tail::{interpolated_tail, log_binomial_tail};

use crate::protocol::TrialLog;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("win count {c} exceeds trial count {n}")]
    WinCountExceedsTrials { c: u64, n: u64 },
    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),
    #[error("epsilon {0} outside [0, 1]")]
    InvalidEpsilon(f64),
    #[error("interpolation point {y} outside [0, {n}]")]
    InvalidInterpolationPoint { y: f64, n: u64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Inputs of the main hypothesis test.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct HypothesisInputs {
    /// Number of game trials.
    pub n: u64,
    /// Number of won trials (unequal outcome pairs).
    pub c: u64,
    /// Certified incompatibility bound on the probability scale.
    pub epsilon: f64,
}

impl HypothesisInputs {
    pub fn new(n: u64, c: u64, epsilon: f64) -> Result<Self, StatsError> {
        if c > n {
            return Err(StatsError::WinCountExceedsTrials { c, n });
        }
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(StatsError::InvalidEpsilon(epsilon));
        }
        Ok(Self { n, c, epsilon })
    }
}

/// Maximum per-trial winning probability of an ε-bounded i.i.d.
/// noncontextual hidden-variable model: min(4/5 + ε, 1).
pub fn beta_win(epsilon: f64) -> Result<f64, StatsError> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(StatsError::InvalidEpsilon(epsilon));
    }
    Ok((0.8 + epsilon).min(1.0))
}

/// Upper bound on the P-value: the binomial tail at the model's maximum
/// winning probability.
pub fn pvalue_bound(inputs: &HypothesisInputs) -> Result<LogProb, StatsError> {
    let beta = beta_win(inputs.epsilon)?;
    log_binomial_tail(inputs.n, inputs.c, beta)
}

/// Wins and accepted trials of a log: a trial is won when the two recorded
/// outcomes differ. Only post-selected (accepted) trials are counted.
pub fn win_count(log: &TrialLog) -> (u64, u64) {
    let mut wins = 0u64;
    let mut trials = 0u64;
    for rec in &log.records {
        if rec.accepted {
            trials += 1;
            if rec.a1 != rec.a2 {
                wins += 1;
            }
        }
    }
    (wins, trials)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn beta_win_values() {
        assert_abs_diff_eq!(beta_win(0.0).unwrap(), 0.8, epsilon = 0.0);
        assert_abs_diff_eq!(beta_win(0.041286).unwrap(), 0.841286, epsilon = 1e-15);
        assert_abs_diff_eq!(beta_win(0.3).unwrap(), 1.0, epsilon = 0.0);
        assert!(beta_win(-0.1).is_err());
        assert!(beta_win(1.1).is_err());
    }

    #[test]
    fn pvalue_all_wins_small_n() {
        // n = c = 10, ε = 0: the bound is 0.8^10.
        let inputs = HypothesisInputs::new(10, 10, 0.0).unwrap();
        let p = pvalue_bound(&inputs).unwrap();
        assert_abs_diff_eq!(p.log10(), 0.8f64.powi(10).log10(), epsilon = 1e-12);
    }

    #[test]
    fn pvalue_no_rejection_below_mean() {
        // Wins at or below the mean give a bound of at least one half.
        let inputs = HypothesisInputs::new(1000, 700, 0.0).unwrap();
        let p = pvalue_bound(&inputs).unwrap();
        assert!(p.to_f64() >= 0.5, "p = {}", p.to_f64());
    }

    #[test]
    fn invalid_inputs_rejected() {
        assert!(HypothesisInputs::new(10, 11, 0.0).is_err());
        assert!(HypothesisInputs::new(10, 5, 1.5).is_err());
    }
}
