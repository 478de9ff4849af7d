//! State-dependent cavity frequency shifts of a weakly anharmonic
//! three-level circuit: χ_j = (j+1)g²/(ν_{j,j+1} − ν_c) and
//! s_j = −χ_j + χ_{j−1} with χ_{−1} = 0. The binary-outcome readout relies
//! on picking a detuning where s_1 ≈ s_2.

use serde::Serialize;
use thiserror::Error;

/// Minimum detuning (MHz) accepted before the dispersive approximation is
/// considered invalid.
const MIN_DETUNING_MHZ: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum DispersiveError {
    #[error("transition {0} is within {1:.1e} MHz of the cavity; dispersive regime invalid")]
    NearResonant(&'static str, f64),
}

/// Inputs and derived shifts, all in MHz.
#[derive(Debug, Clone, Serialize)]
pub struct DispersiveShiftSet {
    pub g: f64,
    pub nu_cavity: f64,
    pub nu01: f64,
    pub nu12: f64,
    pub nu23: f64,
    /// χ_0, χ_1, χ_2.
    pub chi: [f64; 3],
    /// Shifts s_0, s_1, s_2 for qutrit states |0⟩, |1⟩, |2⟩.
    pub shifts: [f64; 3],
}

impl DispersiveShiftSet {
    /// Mismatch |s_1 − s_2| relative to the separation of the ground-state
    /// response from the excited pair. Small values mean the readout cannot
    /// distinguish |1⟩ from |2⟩ while still resolving |0⟩. The excited
    /// shifts themselves vanish at the exact matching detuning, so they are
    /// not usable as the normalization.
    pub fn degeneracy_mismatch(&self) -> f64 {
        let gap = (self.shifts[1] - self.shifts[2]).abs();
        let denom = (self.shifts[0] - 0.5 * (self.shifts[1] + self.shifts[2])).abs();
        // Fully degenerate responses (including 0/0 from rounding) count as
        // a perfect match; an unresolvable ground state does not.
        if gap <= 8.0 * f64::EPSILON * self.scale() {
            0.0
        } else if denom == 0.0 {
            f64::INFINITY
        } else {
            gap / denom
        }
    }

    fn scale(&self) -> f64 {
        self.shifts.iter().fold(0.0f64, |m, s| m.max(s.abs()))
    }
}

pub fn dispersive_shifts(
    g: f64,
    nu_cavity: f64,
    nu01: f64,
    nu12: f64,
    nu23: f64,
) -> Result<DispersiveShiftSet, DispersiveError> {
    let transitions = [("nu01", nu01), ("nu12", nu12), ("nu23", nu23)];
    let mut chi = [0.0; 3];
    for (j, (name, nu)) in transitions.iter().enumerate() {
        let detuning = nu - nu_cavity;
        if detuning.abs() < MIN_DETUNING_MHZ {
            return Err(DispersiveError::NearResonant(name, detuning.abs()));
        }
        chi[j] = (j as f64 + 1.0) * g * g / detuning;
    }
    let shifts = [-chi[0], -chi[1] + chi[0], -chi[2] + chi[1]];
    Ok(DispersiveShiftSet {
        g,
        nu_cavity,
        nu01,
        nu12,
        nu23,
        chi,
        shifts,
    })
}
