//! Two-sided deviation bound for bounded i.i.d. scores, with binomial-tail
//! right-hand side and geometric interpolation between integer arguments,
//! and the incompatibility upper bound it certifies.

use serde::Serialize;

use super::{interpolated_tail, LogProb, StatsError};

/// Pr(|X̄ − E[X̄]| ≥ t) ≤ 2e · P̊_{n, n(t+2a)/(4a)}(B_{1/2}) for i.i.d.
/// scores bounded in [−a, a]. The factor e is Euler's number at full
/// double precision; the result is clamped to at most one.
pub fn bentkus_deviation_bound(n: u64, t: f64, a: f64) -> Result<LogProb, StatsError> {
    if n == 0 {
        return Err(StatsError::InvalidParameter("n must be >= 1".into()));
    }
    if !(t > 0.0) {
        return Err(StatsError::InvalidParameter(format!("t = {t} must be > 0")));
    }
    if !(a > 0.0) {
        return Err(StatsError::InvalidParameter(format!("a = {a} must be > 0")));
    }
    let y = n as f64 * (t + 2.0 * a) / (4.0 * a);
    let tail = interpolated_tail(n, y)?;
    Ok(tail.scale(2.0 * std::f64::consts::E).min(LogProb::ONE))
}

/// Incompatibility estimate from the observed score game: the certified
/// bound is |g_avg| + t, holding except with the Bentkus failure
/// probability.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EpsilonEstimate {
    pub g_avg_abs: f64,
    pub margin_t: f64,
    pub epsilon_bound: f64,
    /// Probability that the bound fails, as a log-domain value.
    pub confidence_failure: LogProb,
}

pub fn epsilon_upper_bound(
    g_avg: f64,
    t: f64,
    n: u64,
    a: f64,
) -> Result<EpsilonEstimate, StatsError> {
    if g_avg.abs() > a {
        return Err(StatsError::InvalidParameter(format!(
            "|g_avg| = {} exceeds the score range a = {a}",
            g_avg.abs()
        )));
    }
    let confidence_failure = bentkus_deviation_bound(n, t, a)?;
    Ok(EpsilonEstimate {
        g_avg_abs: g_avg.abs(),
        margin_t: t,
        epsilon_bound: g_avg.abs() + t,
        confidence_failure,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::log_binomial_tail;
    use approx::assert_abs_diff_eq;

    #[test]
    fn experiment_scale_bound() {
        let bound = bentkus_deviation_bound(9_207_101, 0.005, 2.0).unwrap();
        let p = bound.to_f64();
        assert!(p <= 4.1e-4, "bound {p}");
        assert!(p > 1e-5, "bound {p} implausibly small");
    }

    #[test]
    fn integer_argument_matches_exact_tail() {
        // n = 20, t chosen so y = n(t+2a)/(4a) is the integer 15.
        let n = 20u64;
        let a = 2.0;
        let t = 4.0 * a * 15.0 / n as f64 - 2.0 * a;
        let bound = bentkus_deviation_bound(n, t, a).unwrap();
        let exact = log_binomial_tail(n, 15, 0.5).unwrap();
        assert_abs_diff_eq!(
            bound.log10(),
            exact.log10() + (2.0 * std::f64::consts::E).log10(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn maximal_deviation_regime() {
        // t ≥ 2a puts the argument at n: the tail is 2^−n scaled by 2e.
        let n = 100u64;
        let bound = bentkus_deviation_bound(n, 4.0, 2.0).unwrap();
        assert_abs_diff_eq!(
            bound.log10(),
            -(n as f64) * 2f64.log10() + (2.0 * std::f64::consts::E).log10(),
            epsilon = 1e-10
        );
        // Beyond the range the tail is zero.
        let beyond = bentkus_deviation_bound(n, 4.1, 2.0).unwrap();
        assert!(beyond.is_zero());
    }

    #[test]
    fn bound_clamped_to_one() {
        let bound = bentkus_deviation_bound(10, 1e-9, 2.0).unwrap();
        assert!(bound.to_f64() <= 1.0);
    }

    #[test]
    fn epsilon_pipeline_operating_point() {
        let est = epsilon_upper_bound(0.036286, 0.005, 9_207_101, 2.0).unwrap();
        assert_abs_diff_eq!(est.epsilon_bound, 0.041286, epsilon = 1e-15);
        assert!(est.confidence_failure.to_f64() <= 4.1e-4);
    }

    #[test]
    fn zero_score_bound_is_margin() {
        let est = epsilon_upper_bound(0.0, 0.01, 1000, 2.0).unwrap();
        assert_eq!(est.epsilon_bound, 0.01);
    }

    #[test]
    fn confidence_improves_with_n() {
        let mut prev = f64::INFINITY;
        for n in [1_000u64, 10_000, 100_000, 1_000_000] {
            let est = epsilon_upper_bound(0.02, 0.01, n, 2.0).unwrap();
            let log_p = est.confidence_failure.log10();
            assert!(log_p <= prev + 1e-12, "n={n}");
            prev = log_p;
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(bentkus_deviation_bound(0, 0.1, 2.0).is_err());
        assert!(bentkus_deviation_bound(10, -0.1, 2.0).is_err());
        assert!(bentkus_deviation_bound(10, 0.1, 0.0).is_err());
        assert!(epsilon_upper_bound(3.0, 0.1, 10, 2.0).is_err());
    }
}
