//! Upper binomial tails Σ_{i=k}^{n} C(n,i) p^i (1−p)^{n−i} computed
//! entirely in the log domain, stable down to tails far below the f64
//! underflow threshold, plus the geometric interpolation between integer
//! tail arguments used by the Bentkus bound.

use statrs::function::gamma::ln_gamma;

use super::{LogProb, StatsError};

/// Relative term threshold at which the tail accumulation stops.
const TRUNCATION_EPS: f64 = 1e-18;

fn ln_term(n: u64, i: u64, ln_p: f64, ln_q: f64) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(i as f64 + 1.0) - ln_gamma((n - i) as f64 + 1.0)
        + i as f64 * ln_p
        + (n - i) as f64 * ln_q
}

/// log of the upper tail of Binomial(n, p) starting at k, inclusive.
///
/// Anchored at the term for k by log-gamma; neighbouring terms follow from
/// ratio updates, accumulated outward from the dominant region and
/// truncated once additions stop affecting the running sum. When k sits at
/// or below the mean, the complement (lower) sum is accumulated instead
/// and subtracted from one, which keeps the relative error small on both
/// sides.
pub fn log_binomial_tail(n: u64, k: u64, p: f64) -> Result<LogProb, StatsError> {
    if k > n {
        return Err(StatsError::InvalidParameter(format!("k = {k} > n = {n}")));
    }
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(StatsError::InvalidProbability(p));
    }
    if k == 0 {
        return Ok(LogProb::ONE);
    }
    // Exact limits at the endpoints of the probability range.
    if p == 0.0 {
        return Ok(LogProb::ZERO);
    }
    if p == 1.0 {
        return Ok(LogProb::ONE);
    }
    let q = 1.0 - p;
    let (ln_p, ln_q) = (p.ln(), q.ln());
    let mean = n as f64 * p;

    if (k as f64) > mean {
        // Sum upward from k; terms eventually decay geometrically.
        let anchor = ln_term(n, k, ln_p, ln_q);
        let mut sum = 1.0f64;
        let mut term = 1.0f64;
        let mut i = k;
        while i < n {
            term *= ((n - i) as f64 / (i + 1) as f64) * (p / q);
            sum += term;
            if term < sum * TRUNCATION_EPS {
                break;
            }
            i += 1;
        }
        Ok(LogProb::from_ln(anchor + sum.ln()))
    } else {
        // Lower sum Σ_{i=0}^{k−1}, accumulated downward from k−1.
        let anchor = ln_term(n, k - 1, ln_p, ln_q);
        let mut sum = 1.0f64;
        let mut term = 1.0f64;
        let mut i = k - 1;
        while i > 0 {
            term *= (i as f64 / (n - i + 1) as f64) * (q / p);
            sum += term;
            if term < sum * TRUNCATION_EPS {
                break;
            }
            i -= 1;
        }
        let ln_lower = anchor + sum.ln();
        // k ≤ mean keeps the lower sum strictly away from 1.
        Ok(LogProb::from_ln((-ln_lower.exp()).ln_1p()))
    }
}

/// Geometric interpolation between the integer tails at ⌊y⌋ and ⌈y⌉ for
/// the symmetric binomial (γ = 1/2):
/// log P̊ = (1 − f)·log P_⌊y⌋ + f·log P_⌈y⌉ with f = y − ⌊y⌋.
/// Arguments above n have zero tail.
pub fn interpolated_tail(n: u64, y: f64) -> Result<LogProb, StatsError> {
    if y < 0.0 || y.is_nan() {
        return Err(StatsError::InvalidInterpolationPoint { y, n });
    }
    if y > n as f64 {
        return Ok(LogProb::ZERO);
    }
    let floor = y.floor();
    let frac = y - floor;
    let lower = log_binomial_tail(n, floor as u64, 0.5)?;
    if frac == 0.0 {
        return Ok(lower);
    }
    let upper = log_binomial_tail(n, y.ceil() as u64, 0.5)?;
    Ok(LogProb::from_log10(
        (1.0 - frac) * lower.log10() + frac * upper.log10(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Independent small-n oracle: exact binomial coefficients in u128 and
    /// direct powers, no log-domain machinery shared with the
    /// implementation.
    fn direct_tail(n: u64, k: u64, p: f64) -> f64 {
        fn choose(n: u64, k: u64) -> u128 {
            let mut acc: u128 = 1;
            for i in 0..k {
                acc = acc * (n - i) as u128 / (i + 1) as u128;
            }
            acc
        }
        (k..=n)
            .map(|i| choose(n, i) as f64 * p.powi(i as i32) * (1.0 - p).powi((n - i) as i32))
            .sum()
    }

    #[test]
    fn full_sum_is_one() {
        for n in [1, 10, 1000] {
            assert_eq!(log_binomial_tail(n, 0, 0.3).unwrap(), LogProb::ONE);
        }
    }

    #[test]
    fn exact_rational_case() {
        // Σ_{i=7}^{10} C(10,i)/2^10 = 176/1024.
        let tail = log_binomial_tail(10, 7, 0.5).unwrap();
        assert_abs_diff_eq!(tail.to_f64(), 176.0 / 1024.0, epsilon = 1e-14);
    }

    #[test]
    fn matches_direct_enumeration_for_small_n() {
        for n in 1..=20u64 {
            for k in 0..=n {
                for p in [0.1, 0.5, 0.841286] {
                    let ours = log_binomial_tail(n, k, p).unwrap().to_f64();
                    let exact = direct_tail(n, k, p);
                    let rel = if exact == 0.0 {
                        ours.abs()
                    } else {
                        ((ours - exact) / exact).abs()
                    };
                    assert!(rel < 1e-12, "n={n} k={k} p={p}: {ours} vs {exact}");
                }
            }
        }
    }

    #[test]
    fn endpoint_probabilities() {
        assert!(log_binomial_tail(10, 3, 0.0).unwrap().is_zero());
        assert_eq!(log_binomial_tail(10, 0, 0.0).unwrap(), LogProb::ONE);
        assert_eq!(log_binomial_tail(10, 10, 1.0).unwrap(), LogProb::ONE);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(log_binomial_tail(10, 11, 0.5).is_err());
        assert!(log_binomial_tail(10, 5, 1.5).is_err());
        assert!(log_binomial_tail(10, 5, f64::NAN).is_err());
    }

    #[test]
    fn large_n_extreme_tail_is_finite_and_tiny() {
        let tail = log_binomial_tail(4_603_450, 3_912_769, 0.841286).unwrap();
        assert!(tail.log10().is_finite());
        assert!(tail.log10() < -570.0 && tail.log10() > -580.0, "{}", tail.log10());
    }

    #[test]
    fn interpolation_matches_integers_and_lies_between() {
        let n = 100u64;
        for k in 50..70u64 {
            let exact = log_binomial_tail(n, k, 0.5).unwrap();
            let interp = interpolated_tail(n, k as f64).unwrap();
            assert_abs_diff_eq!(interp.log10(), exact.log10(), epsilon = 1e-14);
            let mid = interpolated_tail(n, k as f64 + 0.5).unwrap();
            let next = log_binomial_tail(n, k + 1, 0.5).unwrap();
            assert!(mid.log10() <= exact.log10() && mid.log10() >= next.log10());
            // Midpoint of the two integer log-tails, by definition.
            assert_abs_diff_eq!(
                mid.log10(),
                0.5 * (exact.log10() + next.log10()),
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn interpolation_is_monotone_nonincreasing() {
        let n = 100u64;
        let mut prev = f64::INFINITY;
        let mut y = 0.0;
        while y <= n as f64 {
            let v = interpolated_tail(n, y).unwrap().log10();
            assert!(v <= prev + 1e-12, "y={y}");
            prev = v;
            y += 0.25;
        }
    }

    #[test]
    fn interpolation_beyond_n_is_zero() {
        assert!(interpolated_tail(100, 100.5).unwrap().is_zero());
        assert!(interpolated_tail(100, 0.0).is_ok());
        assert!(interpolated_tail(100, -0.1).is_err());
    }
}
