//! Trial execution: initialization with post-selection, the two sequential
//! measurement blocks, context scheduling and the parallel experiment
//! driver.
//!
//! Randomness is counter-based: each trial owns an independent ChaCha
//! stream derived from the master seed and the trial index, so the run is
//! reproducible bit-for-bit regardless of how trials are sharded across
//! workers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{forward_contexts, reversed_contexts, ExperimentConfig, ProtocolError, ScheduleMode,
            TrialLog, TrialRecord};
use crate::channels::{
    apply_unitary, decohere, deterministic_measure_ground, luders_measure_ground, misassign,
    report_branch, thermal_state, Branch, NoiseModel,
};
use crate::qutrit::{build_kcbs_frame, unitary_to_readout_basis, DensityMatrix, KcbsFrame,
                    Unitary3};

const MAX_INIT_ATTEMPTS: usize = 1_000_000;

pub struct Simulator {
    config: ExperimentConfig,
    frame: KcbsFrame,
    /// V_i mapping |l_i⟩ onto the readout axis, indexed by label − 1.
    rotations: [Unitary3; 5],
    inverses: [Unitary3; 5],
    contexts: Vec<(u8, u8)>,
}

impl Simulator {
    pub fn new(config: ExperimentConfig) -> Result<Self, ProtocolError> {
        config.validate()?;
        let frame = build_kcbs_frame().with_sign(config.sign_convention);
        let mut rotations = [Unitary3::identity(); 5];
        let mut inverses = [Unitary3::identity(); 5];
        for i in 1..=5 {
            let v = unitary_to_readout_basis(&frame, i)?;
            inverses[i - 1] = v.adjoint();
            rotations[i - 1] = v;
        }
        let mut contexts: Vec<(u8, u8)> = forward_contexts().to_vec();
        if config.include_reversed {
            contexts.extend(reversed_contexts());
        }
        Ok(Self {
            config,
            frame,
            rotations,
            inverses,
            contexts,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn frame(&self) -> &KcbsFrame {
        &self.frame
    }

    /// Independent RNG stream for one trial.
    pub fn trial_rng(&self, trial: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        rng.set_stream(trial);
        rng
    }

    fn context_for_trial<R: Rng>(&self, trial: u64, rng: &mut R) -> (u8, u8) {
        match self.config.schedule {
            ScheduleMode::Cycle => self.contexts[(trial % self.contexts.len() as u64) as usize],
            ScheduleMode::Uniform => self.contexts[rng.gen_range(0..self.contexts.len())],
        }
    }

    /// Thermal preparation and the initialization readout. Returns the
    /// post-readout state (after the ring-down delay) and whether the
    /// discriminator reported ground.
    fn initialize<R: Rng>(&self, rng: &mut R) -> Result<(DensityMatrix, bool), ProtocolError> {
        let model = &self.config.noise;
        let rho = thermal_state(model.thermal_p1, model.thermal_p2)?;
        let (branch, rho) = luders_measure_ground(&rho, rng);
        let accepted = report_branch(branch, model, rng) == Branch::Ground;
        // Decay during the readout pulse itself is part of the calibrated
        // contrast; the explicit channel covers the ring-down delay.
        let rho = decohere(&rho, model.init_delay_ns, model)?;
        Ok((rho, accepted))
    }

    /// One measurement block: rotate the target axis onto the readout
    /// basis, project, let the state decohere through the probe and
    /// ring-down, rotate back, and record the (possibly misassigned) ±1.
    fn measure_block<R: Rng>(
        &self,
        label: u8,
        rho: DensityMatrix,
        rng: &mut R,
    ) -> Result<(i8, DensityMatrix), ProtocolError> {
        let model = &self.config.noise;
        let idx = label as usize - 1;
        let rho = apply_unitary(&rho, &self.rotations[idx]);
        let (branch, rho) = luders_measure_ground(&rho, rng);
        let rho = decohere(&rho, model.ringdown_ns, model)?;
        let rho = apply_unitary(&rho, &self.inverses[idx]);
        let outcome = misassign(branch, model, self.frame.sign_convention(), rng);
        Ok((outcome.recorded, rho))
    }

    /// Runs one trial of the ordered context `(i, j)`. Attempts whose
    /// initialization readout is rejected by post-selection are still
    /// executed and logged (flagged unaccepted), then retried under the
    /// same trial index; the last returned record is always accepted.
    pub fn run_pair_trial<R: Rng>(
        &self,
        ctx: (u8, u8),
        trial: u64,
        rng: &mut R,
    ) -> Result<Vec<TrialRecord>, ProtocolError> {
        let mut attempts = Vec::with_capacity(1);
        for _ in 0..MAX_INIT_ATTEMPTS {
            let (rho, accepted) = self.initialize(rng)?;
            let (a1, rho) = self.measure_block(ctx.0, rho, rng)?;
            let (a2, _rho) = self.measure_block(ctx.1, rho, rng)?;
            attempts.push(TrialRecord {
                trial,
                first: ctx.0,
                second: ctx.1,
                a1,
                a2,
                accepted,
            });
            if accepted {
                return Ok(attempts);
            }
        }
        Err(ProtocolError::InitNeverAccepted(trial))
    }

    /// Runs the whole experiment. Trials are independent and executed in
    /// parallel; output order and content depend only on the seed and
    /// config.
    pub fn run_experiment(&self) -> Result<TrialLog, ProtocolError> {
        let per_trial: Result<Vec<Vec<TrialRecord>>, ProtocolError> = (0..self.config.trials)
            .into_par_iter()
            .map(|trial| {
                let mut rng = self.trial_rng(trial);
                let ctx = self.context_for_trial(trial, &mut rng);
                self.run_pair_trial(ctx, trial, &mut rng)
            })
            .collect();
        Ok(TrialLog {
            config: self.config.clone(),
            records: per_trial?.into_iter().flatten().collect(),
        })
    }
}

/// Analytic order marginals for one ordered context, from the
/// branch-enumerating measurement pipeline: the probability of recording
/// +1 for the second label when it is measured first versus after the
/// other label. No sampling is involved.
#[derive(Debug, Clone, Copy)]
pub struct OrderMarginals {
    pub context: (u8, u8),
    /// Pr(A_j = +1 | j measured first).
    pub p_first: f64,
    /// Pr(A_j = +1 | i measured, then j).
    pub p_second: f64,
}

/// Computes the order marginals for all five forward contexts. Shares the
/// channel primitives with the sampled pipeline but enumerates both
/// measurement branches instead of drawing them.
pub fn order_marginals(config: &ExperimentConfig) -> Result<Vec<OrderMarginals>, ProtocolError> {
    config.validate()?;
    let sim = Simulator::new(config.clone())?;
    let model = &config.noise;
    let rho0 = accepted_init_state(model)?;
    let mut out = Vec::with_capacity(5);
    for (i, j) in forward_contexts() {
        let p_first = recorded_plus_probability(&marginal_state_alone(&sim, j, &rho0)?, model);
        let p_second = {
            let branches = first_measurement_branches(&sim, i, &rho0)?;
            let mut p = 0.0;
            for (weight, rho) in branches {
                p += weight * recorded_plus_probability(&rotate_to(&sim, j, &rho), model);
            }
            p
        };
        out.push(OrderMarginals {
            context: (i, j),
            p_first,
            p_second,
        });
    }
    Ok(out)
}

/// Post-selected initial state: the mixture of the ground branch and the
/// misassigned excited branch, conditioned on the discriminator reporting
/// ground, then evolved through the init readout and ring-down delay.
fn accepted_init_state(model: &NoiseModel) -> Result<DensityMatrix, ProtocolError> {
    let thermal = thermal_state(model.thermal_p1, model.thermal_p2)?;
    let branches = deterministic_measure_ground(&thermal);
    let w_ground = branches.p_ground * (1.0 - model.eps_up);
    let w_excited = (1.0 - branches.p_ground) * model.eps_down;
    let norm = w_ground + w_excited;
    let mut m = branches.ground_state.matrix() * crate::qutrit::C64::new(w_ground / norm, 0.0);
    if let Some(excited) = branches.excited_state {
        m += excited.matrix() * crate::qutrit::C64::new(w_excited / norm, 0.0);
    }
    let rho = DensityMatrix::new(m)?;
    Ok(decohere(&rho, model.init_delay_ns, model)?)
}

fn rotate_to(sim: &Simulator, label: u8, rho: &DensityMatrix) -> DensityMatrix {
    apply_unitary(rho, &sim.rotations[label as usize - 1])
}

/// State rotated for measuring `label` directly on the initial state.
fn marginal_state_alone(
    sim: &Simulator,
    label: u8,
    rho0: &DensityMatrix,
) -> Result<DensityMatrix, ProtocolError> {
    Ok(rotate_to(sim, label, rho0))
}

/// Both branches of the first measurement block, weighted, after the
/// decoherence window and the rotation back to the reference frame.
fn first_measurement_branches(
    sim: &Simulator,
    label: u8,
    rho0: &DensityMatrix,
) -> Result<Vec<(f64, DensityMatrix)>, ProtocolError> {
    let model = &sim.config.noise;
    let idx = label as usize - 1;
    let rotated = apply_unitary(rho0, &sim.rotations[idx]);
    let branches = deterministic_measure_ground(&rotated);
    let mut out = Vec::with_capacity(2);
    let dt = model.ringdown_ns;
    if branches.p_ground > 0.0 {
        let rho = decohere(&branches.ground_state, dt, model)?;
        out.push((branches.p_ground, apply_unitary(&rho, &sim.inverses[idx])));
    }
    if let Some(excited) = branches.excited_state {
        let rho = decohere(&excited, dt, model)?;
        out.push((1.0 - branches.p_ground, apply_unitary(&rho, &sim.inverses[idx])));
    }
    Ok(out)
}

/// Probability that a readout on the rotated state records +1, including
/// misassignment, under the not-ground-positive convention.
fn recorded_plus_probability(rotated: &DensityMatrix, model: &NoiseModel) -> f64 {
    let p_ground = rotated.population(0).clamp(0.0, 1.0);
    (1.0 - p_ground) * (1.0 - model.eps_down) + p_ground * model.eps_up
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn noiseless_trial_on_ground_state() {
        let sim = Simulator::new(ExperimentConfig::noiseless(1, 11)).unwrap();
        let mut rng = sim.trial_rng(0);
        let records = sim.run_pair_trial((1, 2), 0, &mut rng).unwrap();
        assert_eq!(records.len(), 1);
        assert!(records[0].accepted);
    }

    #[test]
    fn noiseless_win_rate_matches_ideal() {
        let sim = Simulator::new(ExperimentConfig::noiseless(1, 5)).unwrap();
        let n = 100_000u64;
        let mut unequal = 0u64;
        for trial in 0..n {
            let mut rng = sim.trial_rng(trial);
            let rec = sim.run_pair_trial((1, 2), trial, &mut rng).unwrap()[0];
            if rec.a1 != rec.a2 {
                unequal += 1;
            }
        }
        let p = 2.0 / 5.0f64.sqrt();
        let freq = unequal as f64 / n as f64;
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        assert!((freq - p).abs() < 3.0 * sigma, "freq {freq} vs {p}");
    }

    #[test]
    fn repeated_measurement_is_repeatable_noiseless() {
        // Measuring the same observable twice in immediate succession
        // must reproduce the recorded outcome.
        let sim = Simulator::new(ExperimentConfig::noiseless(1, 6)).unwrap();
        for trial in 0..10_000u64 {
            let mut rng = sim.trial_rng(trial);
            let label = (trial % 5 + 1) as u8;
            let (rho, _) = sim.initialize(&mut rng).unwrap();
            let (a1, rho) = sim.measure_block(label, rho, &mut rng).unwrap();
            let (a2, _) = sim.measure_block(label, rho, &mut rng).unwrap();
            assert_eq!(a1, a2, "trial {trial}");
        }
    }

    #[test]
    fn deterministic_across_reruns() {
        let cfg = ExperimentConfig::calibrated(200, 99);
        let log1 = Simulator::new(cfg.clone()).unwrap().run_experiment().unwrap();
        let log2 = Simulator::new(cfg).unwrap().run_experiment().unwrap();
        assert_eq!(log1.records, log2.records);
    }

    #[test]
    fn schedule_cycle_covers_contexts_in_order() {
        let mut cfg = ExperimentConfig::noiseless(10, 3);
        cfg.schedule = ScheduleMode::Cycle;
        let log = Simulator::new(cfg).unwrap().run_experiment().unwrap();
        let expected: Vec<(u8, u8)> = forward_contexts()
            .into_iter()
            .chain(reversed_contexts())
            .collect();
        let seen: Vec<(u8, u8)> = log
            .accepted_records()
            .map(|r| (r.first, r.second))
            .collect();
        assert_eq!(seen, expected);
    }

    #[test]
    fn uniform_schedule_covers_all_contexts() {
        let cfg = ExperimentConfig::noiseless(5_000, 21);
        let log = Simulator::new(cfg).unwrap().run_experiment().unwrap();
        let mut counts = std::collections::HashMap::new();
        for r in log.accepted_records() {
            *counts.entry((r.first, r.second)).or_insert(0u64) += 1;
        }
        assert_eq!(counts.len(), 10);
        let expected = 500.0;
        let sigma = (5_000.0 * 0.1 * 0.9f64).sqrt();
        for (&ctx, &count) in &counts {
            assert!(
                (count as f64 - expected).abs() < 4.0 * sigma,
                "{ctx:?}: {count}"
            );
        }
    }

    #[test]
    fn calibrated_rejection_rate_near_ten_percent() {
        let cfg = ExperimentConfig::calibrated(20_000, 12);
        let log = Simulator::new(cfg).unwrap().run_experiment().unwrap();
        let frac = log.rejection_fraction();
        assert!((0.08..=0.12).contains(&frac), "rejection fraction {frac}");
    }

    #[test]
    fn noiseless_order_marginals_are_compatible() {
        let cfg = ExperimentConfig::noiseless(1, 0);
        for m in order_marginals(&cfg).unwrap() {
            assert_abs_diff_eq!(m.p_first, m.p_second, epsilon = 1e-10);
            assert_abs_diff_eq!(m.p_first, 1.0 - 1.0 / 5.0f64.sqrt(), epsilon = 1e-10);
        }
    }

    #[test]
    fn compatibility_holds_on_pure_state_grid() {
        // Marginal of the second observable is unchanged by a preceding
        // adjacent measurement, for pure states spread over the sphere.
        let sim = Simulator::new(ExperimentConfig::noiseless(1, 0)).unwrap();
        let model = NoiseModel::noiseless();
        for s in 0..50 {
            let theta = std::f64::consts::PI * (s as f64 + 0.5) / 50.0;
            let phi = 2.0 * std::f64::consts::PI * (s as f64) / 50.0;
            let psi = crate::qutrit::CVec3::new(
                crate::qutrit::C64::new(theta.cos(), 0.0),
                crate::qutrit::C64::from_polar(theta.sin() * phi.cos(), phi),
                crate::qutrit::C64::new(theta.sin() * phi.sin(), 0.0),
            );
            let rho = DensityMatrix::pure(&psi).unwrap();
            for (i, j) in forward_contexts() {
                let alone = recorded_plus_probability(&rotate_to(&sim, j, &rho), &model);
                let branches = first_measurement_branches(&sim, i, &rho).unwrap();
                let sequential: f64 = branches
                    .iter()
                    .map(|(w, r)| w * recorded_plus_probability(&rotate_to(&sim, j, r), &model))
                    .sum();
                assert_abs_diff_eq!(alone, sequential, epsilon = 1e-10);
            }
        }
    }
}
