//! The incompatibility-estimation game: per trial a uniformly chosen
//! ordered context and a uniform order bit decide whether the second label
//! is measured first or after its partner; the score tracks the difference
//! between the two marginals.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{forward_contexts, order_marginals, ExperimentConfig, ProtocolError, Simulator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GameTrial {
    pub trial: u64,
    /// Context labels as listed in the forward set.
    pub i: u8,
    pub j: u8,
    /// Order bit: +1 means j was measured first, −1 means i then j.
    pub x: i8,
    /// Recorded outcome of measurement j.
    pub a_j: i8,
    /// +2 when x = +1 and a_j = +1; −2 when x = −1 and a_j = +1; else 0.
    pub score: i8,
}

#[derive(Debug, Clone, Serialize)]
pub struct GameScoreLog {
    pub config: ExperimentConfig,
    pub trials: Vec<GameTrial>,
    /// Average score (1/n)Σ g_l.
    pub g_avg: f64,
}

impl GameScoreLog {
    /// Running average after each trial, for diagnostics.
    pub fn running_average(&self) -> impl Iterator<Item = f64> + '_ {
        let mut sum = 0i64;
        self.trials.iter().enumerate().map(move |(idx, t)| {
            sum += t.score as i64;
            sum as f64 / (idx + 1) as f64
        })
    }
}

fn score(x: i8, a_j: i8) -> i8 {
    match (x, a_j) {
        (1, 1) => 2,
        (-1, 1) => -2,
        _ => 0,
    }
}

pub fn run_incompatibility_game(config: &ExperimentConfig) -> Result<GameScoreLog, ProtocolError> {
    let sim = Simulator::new(config.clone())?;
    let contexts = forward_contexts();
    let trials: Result<Vec<GameTrial>, ProtocolError> = (0..config.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = sim.trial_rng(trial);
            let (i, j) = contexts[rng.gen_range(0..contexts.len())];
            let x: i8 = if rng.gen::<bool>() { 1 } else { -1 };
            let order = if x == 1 { (j, i) } else { (i, j) };
            let attempts = sim.run_pair_trial(order, trial, &mut rng)?;
            let accepted = attempts.last().expect("at least one attempt");
            let a_j = if x == 1 { accepted.a1 } else { accepted.a2 };
            Ok(GameTrial {
                trial,
                i,
                j,
                x,
                a_j,
                score: score(x, a_j),
            })
        })
        .collect();
    let trials = trials?;
    let g_avg =
        trials.iter().map(|t| t.score as i64).sum::<i64>() as f64 / trials.len().max(1) as f64;
    Ok(GameScoreLog {
        config: config.clone(),
        trials,
        g_avg,
    })
}

/// Analytic expectation of the average score from the branch-enumerating
/// pipeline: (1/5) Σ_(i,j) (Pr(A_j=+1 | j first) − Pr(A_j=+1 | i then j)).
pub fn expected_game_score(config: &ExperimentConfig) -> Result<f64, ProtocolError> {
    let marginals = order_marginals(config)?;
    Ok(marginals
        .iter()
        .map(|m| m.p_first - m.p_second)
        .sum::<f64>()
        / marginals.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn score_rule() {
        assert_eq!(score(1, 1), 2);
        assert_eq!(score(-1, 1), -2);
        assert_eq!(score(1, -1), 0);
        assert_eq!(score(-1, -1), 0);
    }

    #[test]
    fn noiseless_game_average_is_near_zero() {
        let cfg = ExperimentConfig::noiseless(200_000, 31);
        let log = run_incompatibility_game(&cfg).unwrap();
        // Var(G) ≤ 4·Pr(a_j = 1); a 3σ band around the analytic zero.
        let sigma = (4.0 * 0.56 / cfg.trials as f64).sqrt();
        assert!(log.g_avg.abs() < 3.0 * sigma, "g_avg {}", log.g_avg);
        assert_abs_diff_eq!(expected_game_score(&cfg).unwrap(), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn score_expectation_identity() {
        // 5·E[G_avg] equals the signed sum of the order-marginal
        // differences, on the analytic pipeline.
        let cfg = ExperimentConfig::calibrated(1, 0);
        let marginals = order_marginals(&cfg).unwrap();
        let signed_sum: f64 = marginals.iter().map(|m| m.p_first - m.p_second).sum();
        assert_abs_diff_eq!(
            5.0 * expected_game_score(&cfg).unwrap(),
            signed_sum,
            epsilon = 1e-12
        );
    }

    #[test]
    fn noisy_game_average_matches_analytic_expectation() {
        let cfg = ExperimentConfig::calibrated(200_000, 77);
        let log = run_incompatibility_game(&cfg).unwrap();
        let expected = expected_game_score(&cfg).unwrap();
        let sigma = (4.0 / cfg.trials as f64).sqrt();
        assert!(
            (log.g_avg - expected).abs() < 4.0 * sigma,
            "g_avg {} vs analytic {expected}",
            log.g_avg
        );
    }

    #[test]
    fn game_is_deterministic_for_fixed_seed() {
        let cfg = ExperimentConfig::calibrated(500, 8);
        let a = run_incompatibility_game(&cfg).unwrap();
        let b = run_incompatibility_game(&cfg).unwrap();
        assert_eq!(a.trials, b.trials);
        assert_eq!(a.g_avg, b.g_avg);
    }
}
