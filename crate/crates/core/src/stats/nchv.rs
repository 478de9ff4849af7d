//! Brute-force oracle over deterministic outcome assignments: the best any
//! noncontextual hidden-variable strategy can do on the five-context game.

use super::StatsError;

const CONTEXT_COUNT: usize = 5;

fn assignment(bits: u32) -> [i32; 5] {
    std::array::from_fn(|k| if bits >> k & 1 == 1 { 1 } else { -1 })
}

fn wins(a: &[i32; 5]) -> usize {
    (0..CONTEXT_COUNT)
        .filter(|&k| a[k] != a[(k + 1) % CONTEXT_COUNT])
        .count()
}

/// Maximum winning probability over all 32 deterministic ±1 assignments,
/// relaxed by the incompatibility allowance ε and capped at one. The
/// deterministic optimum alternates outcomes around the odd cycle and wins
/// four of the five contexts.
pub fn nchv_max_win(epsilon: f64) -> Result<f64, StatsError> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(StatsError::InvalidEpsilon(epsilon));
    }
    let best = (0..32u32)
        .map(|bits| wins(&assignment(bits)))
        .max()
        .expect("nonempty");
    Ok((best as f64 / CONTEXT_COUNT as f64 + epsilon).min(1.0))
}

/// Minimum of Σ_i a_i a_{i+1} over all deterministic assignments; the
/// noncontextual bound of the inequality.
pub fn nchv_min_inequality_sum() -> i32 {
    (0..32u32)
        .map(|bits| {
            let a = assignment(bits);
            (0..CONTEXT_COUNT)
                .map(|k| a[k] * a[(k + 1) % CONTEXT_COUNT])
                .sum()
        })
        .min()
        .expect("nonempty")
}
