//! Correlation and incompatibility analysis of a trial log: per-context
//! correlators and marginals, the incompatibility bounds from the
//! first-slot/second-slot comparison, and the extended-inequality verdict.

use std::collections::HashMap;

use serde::Serialize;

use super::{forward_contexts, reversed_contexts, ProtocolError, TrialLog};

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PairStats {
    pub count: u64,
    /// ⟨A_i A_j⟩ estimated as the mean of a1·a2.
    pub correlation: f64,
    pub correlation_se: f64,
    /// First-slot ⟨A_i⟩.
    pub first_mean: f64,
    pub first_se: f64,
    /// Second-slot ⟨A_j⟩.
    pub second_mean: f64,
    pub second_se: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EpsilonStat {
    pub value: f64,
    pub se: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContextRow {
    pub first: u8,
    pub second: u8,
    pub stats: PairStats,
    /// ε for this ordered context: |⟨A_j⟩ measured first − ⟨A_j⟩ measured
    /// second|, from the matching reversed-order rows. Absent when the log
    /// has no reversed orders.
    pub epsilon: Option<EpsilonStat>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DirectionReport {
    pub contexts: Vec<ContextRow>,
    pub correlation_sum: f64,
    pub correlation_sum_se: f64,
    pub epsilon_sum: Option<EpsilonStat>,
    /// The relaxed noncontextual bound −3 − Σε.
    pub threshold: Option<f64>,
    /// How many standard errors the sum lies below the threshold.
    pub violation_sigmas: Option<f64>,
    pub violated: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CorrelationReport {
    pub forward: DirectionReport,
    pub reverse: Option<DirectionReport>,
    pub accepted_trials: u64,
    pub rejected_attempts: u64,
    pub rejection_fraction: f64,
    /// Fraction of accepted trials whose two outcomes differ.
    pub win_fraction: f64,
}

#[derive(Default, Clone, Copy)]
struct Accumulator {
    n: u64,
    sum_prod: i64,
    sum_first: i64,
    sum_second: i64,
}

impl Accumulator {
    fn stats(&self) -> PairStats {
        let n = self.n as f64;
        let mean = |s: i64| s as f64 / n;
        let se = |m: f64| ((1.0 - m * m).max(0.0) / n).sqrt();
        let correlation = mean(self.sum_prod);
        let first_mean = mean(self.sum_first);
        let second_mean = mean(self.sum_second);
        PairStats {
            count: self.n,
            correlation,
            correlation_se: se(correlation),
            first_mean,
            first_se: se(first_mean),
            second_mean,
            second_se: se(second_mean),
        }
    }
}

fn direction_report(
    order: &[(u8, u8); 5],
    stats: &HashMap<(u8, u8), PairStats>,
) -> DirectionReport {
    let mut contexts = Vec::with_capacity(5);
    let mut correlation_sum = 0.0;
    let mut sum_var = 0.0;
    let mut eps_sum = 0.0;
    let mut eps_var = 0.0;
    let mut eps_complete = true;
    for &(i, j) in order {
        let own = stats[&(i, j)];
        // ⟨A_j⟩ measured first comes from the reversed-order rows where j
        // occupies slot 1.
        let epsilon = stats.get(&(j, i)).map(|rev| {
            let value = (rev.first_mean - own.second_mean).abs();
            let se = (rev.first_se.powi(2) + own.second_se.powi(2)).sqrt();
            EpsilonStat { value, se }
        });
        match &epsilon {
            Some(e) => {
                eps_sum += e.value;
                eps_var += e.se * e.se;
            }
            None => eps_complete = false,
        }
        correlation_sum += own.correlation;
        sum_var += own.correlation_se * own.correlation_se;
        contexts.push(ContextRow {
            first: i,
            second: j,
            stats: own,
            epsilon,
        });
    }
    let correlation_sum_se = sum_var.sqrt();
    let (epsilon_sum, threshold, violation_sigmas, violated) = if eps_complete {
        let eps = EpsilonStat {
            value: eps_sum,
            se: eps_var.sqrt(),
        };
        let threshold = -3.0 - eps.value;
        let margin = threshold - correlation_sum;
        let total_se = (sum_var + eps_var).sqrt();
        let sigmas = if total_se > 0.0 {
            margin / total_se
        } else if margin > 0.0 {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        };
        (Some(eps), Some(threshold), Some(sigmas), Some(margin > 0.0))
    } else {
        (None, None, None, None)
    };
    DirectionReport {
        contexts,
        correlation_sum,
        correlation_sum_se,
        epsilon_sum,
        threshold,
        violation_sigmas,
        violated,
    }
}

pub fn analyze_log(log: &TrialLog) -> Result<CorrelationReport, ProtocolError> {
    let mut acc: HashMap<(u8, u8), Accumulator> = HashMap::new();
    let mut accepted_trials = 0u64;
    let mut wins = 0u64;
    for r in log.accepted_records() {
        accepted_trials += 1;
        if r.a1 != r.a2 {
            wins += 1;
        }
        let a = acc.entry((r.first, r.second)).or_default();
        a.n += 1;
        a.sum_prod += (r.a1 * r.a2) as i64;
        a.sum_first += r.a1 as i64;
        a.sum_second += r.a2 as i64;
    }
    if accepted_trials == 0 {
        return Err(ProtocolError::EmptyLog);
    }
    let stats: HashMap<(u8, u8), PairStats> =
        acc.iter().map(|(k, v)| (*k, v.stats())).collect();
    for (i, j) in forward_contexts() {
        if !stats.contains_key(&(i, j)) {
            return Err(ProtocolError::MissingContext(i, j));
        }
    }
    let forward = direction_report(&forward_contexts(), &stats);
    let reverse = if reversed_contexts().iter().all(|c| stats.contains_key(c)) {
        Some(direction_report(&reversed_contexts(), &stats))
    } else {
        None
    };
    Ok(CorrelationReport {
        forward,
        reverse,
        accepted_trials,
        rejected_attempts: log.rejected_count(),
        rejection_fraction: log.rejection_fraction(),
        win_fraction: wins as f64 / accepted_trials as f64,
    })
}
