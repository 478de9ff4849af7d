//! Quantum channels acting on the qutrit: the binary-outcome ground-state
//! measurement (Lüders rule), unitary evolution, three-level relaxation and
//! dephasing, thermal states and classical readout misassignment.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qutrit::{CMat3, DensityMatrix, SignConvention, Unitary3, C64};

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("negative duration {0} ns")]
    NegativeDuration(f64),
    #[error("invalid noise model: {0}")]
    InvalidModel(String),
}

/// Measured decay/coherence constants, protocol timings and classical
/// readout parameters.
///
/// Times are in microseconds, durations in nanoseconds. Infinite time
/// constants are allowed and mean the corresponding process is absent.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    /// Decay time 1 → 0 (µs).
    pub t1_1_us: f64,
    /// Decay time 2 → 1 (µs).
    pub t1_21_us: f64,
    /// Decay time 2 → 0 (µs).
    pub t1_20_us: f64,
    /// Ramsey dephasing time of the 0–1 coherence (µs).
    pub t2s_01_us: f64,
    /// Ramsey dephasing time of the 1–2 coherence (µs).
    pub t2s_12_us: f64,
    /// Cavity probe duration per readout (ns). Decay during the probe
    /// itself is folded into the calibrated contrast (`eps_up`/`eps_down`),
    /// so this entry documents the schedule rather than feeding the
    /// explicit decoherence channel.
    pub readout_ns: f64,
    /// Cavity ring-down delay after each readout (ns).
    pub ringdown_ns: f64,
    /// Delay between the initialization readout and the first measurement
    /// block (ns).
    pub init_delay_ns: f64,
    /// Probability that a true ground branch is reported as excited.
    pub eps_up: f64,
    /// Probability that a true excited branch is reported as ground.
    pub eps_down: f64,
    /// Thermal population of |1⟩ before initialization.
    pub thermal_p1: f64,
    /// Thermal population of |2⟩ before initialization.
    pub thermal_p2: f64,
}

impl NoiseModel {
    /// Ideal model: no decay, no dephasing, perfect contrast, ground-state
    /// thermal occupation. Timings are kept at the experimental values so
    /// a noiseless run exercises the same schedule.
    pub fn noiseless() -> Self {
        Self {
            t1_1_us: f64::INFINITY,
            t1_21_us: f64::INFINITY,
            t1_20_us: f64::INFINITY,
            t2s_01_us: f64::INFINITY,
            t2s_12_us: f64::INFINITY,
            readout_ns: 350.0,
            ringdown_ns: 475.0,
            init_delay_ns: 565.0,
            eps_up: 0.0,
            eps_down: 0.0,
            thermal_p1: 0.0,
            thermal_p2: 0.0,
        }
    }

    /// The measured device constants: decay and Ramsey times, 96% combined
    /// single-shot contrast split evenly, and thermal populations fitted so
    /// the initialization post-selection rejects about 10% of attempts.
    pub fn calibrated() -> Self {
        Self {
            t1_1_us: 17.4,
            t1_21_us: 18.1,
            t1_20_us: 9.5,
            t2s_01_us: 6.6,
            t2s_12_us: 4.6,
            readout_ns: 350.0,
            ringdown_ns: 475.0,
            init_delay_ns: 565.0,
            eps_up: 0.02,
            eps_down: 0.02,
            thermal_p1: 0.07,
            thermal_p2: 0.0135,
        }
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        let times = [
            ("t1_1_us", self.t1_1_us),
            ("t1_21_us", self.t1_21_us),
            ("t1_20_us", self.t1_20_us),
            ("t2s_01_us", self.t2s_01_us),
            ("t2s_12_us", self.t2s_12_us),
        ];
        for (name, t) in times {
            if !(t > 0.0) {
                return Err(ChannelError::InvalidModel(format!("{name} must be > 0")));
            }
        }
        let durations = [
            ("readout_ns", self.readout_ns),
            ("ringdown_ns", self.ringdown_ns),
            ("init_delay_ns", self.init_delay_ns),
        ];
        for (name, d) in durations {
            if !(d >= 0.0) || !d.is_finite() {
                return Err(ChannelError::InvalidModel(format!("{name} must be >= 0")));
            }
        }
        let probs = [
            ("eps_up", self.eps_up),
            ("eps_down", self.eps_down),
            ("thermal_p1", self.thermal_p1),
            ("thermal_p2", self.thermal_p2),
        ];
        for (name, p) in probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(ChannelError::InvalidModel(format!("{name} must be in [0,1]")));
            }
        }
        if self.thermal_p1 + self.thermal_p2 >= 1.0 {
            return Err(ChannelError::InvalidModel(
                "thermal_p1 + thermal_p2 must be < 1".into(),
            ));
        }
        Ok(())
    }

    /// Combined single-shot contrast 1 − (eps_up + eps_down).
    pub fn contrast(&self) -> f64 {
        1.0 - self.eps_up - self.eps_down
    }
}

/// The true branch taken by the dichotomic ground-state measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Ground,
    NotGround,
}

/// A single dichotomic readout: the true branch and the recorded ±1 value
/// after classical misassignment and the sign convention.
#[derive(Debug, Clone, Copy)]
pub struct MeasurementOutcome {
    pub raw: Branch,
    pub recorded: i8,
}

/// Both branches of the ground-state measurement, without sampling.
#[derive(Debug, Clone)]
pub struct GroundMeasurement {
    /// p₀ = ⟨0|ρ|0⟩.
    pub p_ground: f64,
    /// Post-state of the ground branch, |0⟩⟨0|.
    pub ground_state: DensityMatrix,
    /// Post-state of the not-ground branch; `None` when that branch has
    /// zero probability.
    pub excited_state: Option<DensityMatrix>,
}

/// Branch-enumerating ground-state measurement. The ground branch
/// collapses to |0⟩⟨0|; the complement branch is QρQ/tr(QρQ) with
/// Q = I − |0⟩⟨0|, which preserves the 1–2 coherence block.
pub fn deterministic_measure_ground(rho: &DensityMatrix) -> GroundMeasurement {
    let p_ground = rho.population(0).clamp(0.0, 1.0);
    let excited_state = if 1.0 - p_ground > 1e-15 {
        let mut m = CMat3::zeros();
        let scale = C64::new(1.0 / (1.0 - p_ground), 0.0);
        for r in 1..3 {
            for c in 1..3 {
                m[(r, c)] = rho.matrix()[(r, c)] * scale;
            }
        }
        Some(DensityMatrix::from_raw_unchecked(m))
    } else {
        None
    };
    GroundMeasurement {
        p_ground,
        ground_state: DensityMatrix::ground(),
        excited_state,
    }
}

/// Samples one branch of the ground-state measurement.
pub fn luders_measure_ground<R: Rng>(
    rho: &DensityMatrix,
    rng: &mut R,
) -> (Branch, DensityMatrix) {
    let branches = deterministic_measure_ground(rho);
    // A zero-probability branch is never sampled: gen::<f64>() < p fails
    // for p = 0 and p = 1 is only reachable when the excited branch is
    // absent.
    if rng.gen::<f64>() < branches.p_ground {
        (Branch::Ground, branches.ground_state)
    } else {
        match branches.excited_state {
            Some(state) => (Branch::NotGround, state),
            None => (Branch::Ground, branches.ground_state),
        }
    }
}

/// ρ → UρU†.
pub fn apply_unitary(rho: &DensityMatrix, u: &Unitary3) -> DensityMatrix {
    DensityMatrix::from_raw_unchecked(u.matrix() * rho.matrix() * u.matrix().adjoint())
}

/// Diagonal thermal state diag(1 − p1 − p2, p1, p2).
pub fn thermal_state(p1: f64, p2: f64) -> Result<DensityMatrix, ChannelError> {
    if !(0.0..=1.0).contains(&p1) || !(0.0..=1.0).contains(&p2) || p1 + p2 >= 1.0 {
        return Err(ChannelError::InvalidModel(format!(
            "invalid thermal populations p1={p1}, p2={p2}"
        )));
    }
    let mut m = CMat3::zeros();
    m[(0, 0)] = C64::new(1.0 - p1 - p2, 0.0);
    m[(1, 1)] = C64::new(p1, 0.0);
    m[(2, 2)] = C64::new(p2, 0.0);
    Ok(DensityMatrix::from_raw_unchecked(m))
}

fn rate_per_ns(t_us: f64) -> f64 {
    if t_us.is_finite() {
        1.0 / (t_us * 1000.0)
    } else {
        0.0
    }
}

/// Relaxation and dephasing over `dt_ns` nanoseconds.
///
/// The channel is the exact solution of a Lindblad equation with jump
/// operators for the decays 1→0, 2→1, 2→0 and two diagonal dephasing
/// operators acting on levels {1,2} and {2}. Populations follow the rate
/// equations; each coherence is damped exponentially at half the total
/// outflow rate of its two levels plus the pure-dephasing rate. Pure
/// dephasing rates are 1/T2* minus the relaxation contribution, floored
/// at zero.
pub fn decohere(
    rho: &DensityMatrix,
    dt_ns: f64,
    model: &NoiseModel,
) -> Result<DensityMatrix, ChannelError> {
    if dt_ns < 0.0 {
        return Err(ChannelError::NegativeDuration(dt_ns));
    }
    if dt_ns == 0.0 {
        return Ok(*rho);
    }
    let g1 = rate_per_ns(model.t1_1_us);
    let g21 = rate_per_ns(model.t1_21_us);
    let g20 = rate_per_ns(model.t1_20_us);
    let g2 = g21 + g20;

    let p0 = rho.population(0);
    let p1 = rho.population(1);
    let p2 = rho.population(2);
    let p2_new = p2 * (-g2 * dt_ns).exp();
    let feed = if (g1 - g2).abs() > 1e-18 {
        g21 * ((-g2 * dt_ns).exp() - (-g1 * dt_ns).exp()) / (g1 - g2)
    } else {
        g21 * dt_ns * (-g1 * dt_ns).exp()
    };
    let p1_new = p1 * (-g1 * dt_ns).exp() + p2 * feed;
    let p0_new = (p0 + p1 + p2) - p1_new - p2_new;

    let phi01 = (rate_per_ns(model.t2s_01_us) - 0.5 * g1).max(0.0);
    let phi12 = (rate_per_ns(model.t2s_12_us) - 0.5 * (g1 + g2)).max(0.0);
    let phi02 = phi01 + phi12;
    let d01 = (-(0.5 * g1 + phi01) * dt_ns).exp();
    let d12 = (-(0.5 * (g1 + g2) + phi12) * dt_ns).exp();
    let d02 = (-(0.5 * g2 + phi02) * dt_ns).exp();

    let m = rho.matrix();
    let mut out = CMat3::zeros();
    out[(0, 0)] = C64::new(p0_new, 0.0);
    out[(1, 1)] = C64::new(p1_new, 0.0);
    out[(2, 2)] = C64::new(p2_new, 0.0);
    out[(0, 1)] = m[(0, 1)] * d01;
    out[(1, 0)] = m[(1, 0)] * d01;
    out[(1, 2)] = m[(1, 2)] * d12;
    out[(2, 1)] = m[(2, 1)] * d12;
    out[(0, 2)] = m[(0, 2)] * d02;
    out[(2, 0)] = m[(2, 0)] * d02;
    Ok(DensityMatrix::from_raw_unchecked(out))
}

/// The branch the discriminator reports, after classical misassignment.
pub fn report_branch<R: Rng>(raw: Branch, model: &NoiseModel, rng: &mut R) -> Branch {
    let flip_prob = match raw {
        Branch::Ground => model.eps_up,
        Branch::NotGround => model.eps_down,
    };
    if flip_prob > 0.0 && rng.gen::<f64>() < flip_prob {
        match raw {
            Branch::Ground => Branch::NotGround,
            Branch::NotGround => Branch::Ground,
        }
    } else {
        raw
    }
}

/// Classical misassignment of the readout branch, then mapping to ±1 with
/// the frame's sign convention. Acts on the recorded bit only, never on
/// the state.
pub fn misassign<R: Rng>(
    raw: Branch,
    model: &NoiseModel,
    sign: SignConvention,
    rng: &mut R,
) -> MeasurementOutcome {
    let recorded = match report_branch(raw, model, rng) {
        Branch::Ground => sign.ground_outcome(),
        Branch::NotGround => sign.not_ground_outcome(),
    };
    MeasurementOutcome { raw, recorded }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qutrit::CVec3;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn superposition(i: usize, j: usize) -> DensityMatrix {
        let mut v = CVec3::zeros();
        let amp = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        v[i] = amp;
        v[j] = amp;
        DensityMatrix::pure(&v).unwrap()
    }

    #[test]
    fn ground_state_always_takes_ground_branch() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let (branch, post) = luders_measure_ground(&DensityMatrix::ground(), &mut rng);
            assert_eq!(branch, Branch::Ground);
            assert_eq!(post, DensityMatrix::ground());
        }
    }

    #[test]
    fn excited_superposition_keeps_coherence() {
        let rho = superposition(1, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (branch, post) = luders_measure_ground(&rho, &mut rng);
        assert_eq!(branch, Branch::NotGround);
        let dev = (post.matrix() - rho.matrix())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!(dev < 1e-12);
    }

    #[test]
    fn ground_excited_superposition_collapses() {
        let rho = superposition(0, 1);
        let branches = deterministic_measure_ground(&rho);
        assert_abs_diff_eq!(branches.p_ground, 0.5, epsilon = 1e-12);
        let excited = branches.excited_state.unwrap();
        assert_abs_diff_eq!(excited.population(1), 1.0, epsilon = 1e-12);
        assert!(excited.matrix()[(0, 1)].norm() < 1e-12);
    }

    #[test]
    fn mixed_state_branches() {
        let branches = deterministic_measure_ground(&DensityMatrix::maximally_mixed());
        assert_abs_diff_eq!(branches.p_ground, 1.0 / 3.0, epsilon = 1e-12);
        let excited = branches.excited_state.unwrap();
        assert_abs_diff_eq!(excited.population(1), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(excited.population(2), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn unitary_preserves_spectrum() {
        let frame = crate::qutrit::build_kcbs_frame();
        let v2 = crate::qutrit::unitary_to_readout_basis(&frame, 2).unwrap();
        let rho = thermal_state(0.2, 0.1).unwrap();
        let rotated = apply_unitary(&rho, &v2);
        let mut before = rho.eigenvalues();
        let mut after = rotated.eigenvalues();
        before.sort_by(f64::total_cmp);
        after.sort_by(f64::total_cmp);
        for (a, b) in before.iter().zip(after) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn readout_unitary_maps_ground_to_frame_state() {
        let frame = crate::qutrit::build_kcbs_frame();
        for i in 1..=5 {
            let v = crate::qutrit::unitary_to_readout_basis(&frame, i).unwrap();
            let rho = apply_unitary(&DensityMatrix::ground(), &v.adjoint());
            let l = frame.vector(i).unwrap();
            let overlap = (l.adjoint() * rho.matrix() * l)[(0, 0)].re;
            assert_abs_diff_eq!(overlap, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn decohere_zero_time_is_identity() {
        let rho = superposition(0, 1);
        let out = decohere(&rho, 0.0, &NoiseModel::calibrated()).unwrap();
        assert_eq!(out, rho);
    }

    #[test]
    fn decohere_rejects_negative_time() {
        assert!(matches!(
            decohere(&DensityMatrix::ground(), -1.0, &NoiseModel::calibrated()),
            Err(ChannelError::NegativeDuration(_))
        ));
    }

    #[test]
    fn single_decay_half_life() {
        // Only T1(1→0) finite: after T1·ln2 the |1⟩ population halves.
        let mut model = NoiseModel::noiseless();
        model.t1_1_us = 17.4;
        let rho = thermal_state(1.0 - 1e-9, 0.0).unwrap();
        let dt = 17.4e3 * std::f64::consts::LN_2;
        let out = decohere(&rho, dt, &model).unwrap();
        assert_abs_diff_eq!(out.population(1), rho.population(1) / 2.0, epsilon = 1e-10);
    }

    #[test]
    fn level_two_total_decay_rate() {
        let model = NoiseModel::calibrated();
        let mut m = CMat3::zeros();
        m[(2, 2)] = C64::new(1.0, 0.0);
        let rho = DensityMatrix::from_raw_unchecked(m);
        let dt = 1000.0;
        let out = decohere(&rho, dt, &model).unwrap();
        let rate = 1.0 / 18.1e3 + 1.0 / 9.5e3;
        assert_abs_diff_eq!(out.population(2), (-dt * rate).exp(), epsilon = 1e-10);
        // The combined rate matches the measured T1 of level 2 (6.2 µs).
        assert_abs_diff_eq!(1.0 / rate / 1000.0, 6.2, epsilon = 0.05);
    }

    #[test]
    fn decohere_is_trace_preserving_and_drives_to_ground() {
        let model = NoiseModel::calibrated();
        let mut rho = superposition(1, 2);
        for _ in 0..200 {
            rho = decohere(&rho, 1000.0, &model).unwrap();
            let tr: f64 = (0..3).map(|i| rho.population(i)).sum();
            assert_abs_diff_eq!(tr, 1.0, epsilon = 1e-12);
        }
        assert!(rho.population(0) > 0.999);
        assert!(rho.population(1) >= rho.population(2));
    }

    #[test]
    fn misassign_identity_when_perfect() {
        let model = NoiseModel::noiseless();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let out = misassign(Branch::Ground, &model, SignConvention::NotGroundPlus, &mut rng);
        assert_eq!(out.recorded, -1);
        let out = misassign(Branch::NotGround, &model, SignConvention::NotGroundPlus, &mut rng);
        assert_eq!(out.recorded, 1);
    }

    #[test]
    fn misassign_flip_frequency_matches_eps() {
        let model = NoiseModel::calibrated();
        assert_abs_diff_eq!(model.contrast(), 0.96, epsilon = 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 1_000_000u32;
        let mut flips = 0u32;
        for _ in 0..n {
            let out = misassign(Branch::Ground, &model, SignConvention::NotGroundPlus, &mut rng);
            if out.recorded == 1 {
                flips += 1;
            }
        }
        let freq = flips as f64 / n as f64;
        let sigma = (model.eps_up * (1.0 - model.eps_up) / n as f64).sqrt();
        assert!(
            (freq - model.eps_up).abs() < 3.0 * sigma,
            "freq {freq} vs eps {}",
            model.eps_up
        );
    }

    #[test]
    fn noise_model_validation() {
        let mut model = NoiseModel::calibrated();
        assert!(model.validate().is_ok());
        model.thermal_p1 = 0.8;
        model.thermal_p2 = 0.3;
        assert!(model.validate().is_err());
        let mut model = NoiseModel::calibrated();
        model.t1_1_us = 0.0;
        assert!(model.validate().is_err());
        let mut model = NoiseModel::calibrated();
        model.eps_up = 1.5;
        assert!(model.validate().is_err());
    }
}
