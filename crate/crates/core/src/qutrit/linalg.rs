//! Validated 3-dimensional complex types: state vectors, density matrices
//! and unitaries.

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use thiserror::Error;

pub type C64 = Complex64;
pub type CVec3 = Vector3<C64>;
pub type CMat3 = Matrix3<C64>;

/// Tolerance for algebraic identities (hermiticity, unitarity, trace).
pub const ALGEBRAIC_TOL: f64 = 1e-12;
/// Slack allowed on density-matrix eigenvalues.
pub const PSD_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum QutritError {
    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("trace is {0}, expected 1")]
    BadTrace(C64),
    #[error("negative eigenvalue {0:.3e}")]
    NotPositive(f64),
    #[error("matrix is not unitary (max deviation {0:.3e})")]
    NotUnitary(f64),
    #[error("vector norm {0} is not 1")]
    NotNormalized(f64),
    #[error("observable index {0} out of range 1..=5")]
    IndexOutOfRange(usize),
    #[error("invalid probability: {0}")]
    InvalidProbability(String),
}

/// Computational basis vector |i⟩ for i in 0..3.
pub fn basis_vector(i: usize) -> CVec3 {
    let mut v = CVec3::zeros();
    v[i] = C64::new(1.0, 0.0);
    v
}

fn max_abs_diff(a: &CMat3, b: &CMat3) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// A 3×3 Hermitian, unit-trace, positive-semidefinite operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix(CMat3);

impl DensityMatrix {
    /// Validates hermiticity, unit trace and positivity before wrapping.
    pub fn new(m: CMat3) -> Result<Self, QutritError> {
        let herm = max_abs_diff(&m, &m.adjoint());
        if herm > ALGEBRAIC_TOL {
            return Err(QutritError::NotHermitian(herm));
        }
        let tr = m.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > ALGEBRAIC_TOL {
            return Err(QutritError::BadTrace(tr));
        }
        let min_eig = m
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -PSD_TOL {
            return Err(QutritError::NotPositive(min_eig));
        }
        Ok(Self(m))
    }

    /// Pure state |ψ⟩⟨ψ| from a unit vector.
    pub fn pure(psi: &CVec3) -> Result<Self, QutritError> {
        let norm = psi.norm();
        if (norm - 1.0).abs() > ALGEBRAIC_TOL {
            return Err(QutritError::NotNormalized(norm));
        }
        Ok(Self(psi * psi.adjoint()))
    }

    pub fn ground() -> Self {
        Self::pure(&basis_vector(0)).expect("basis vector is normalized")
    }

    pub fn maximally_mixed() -> Self {
        Self(CMat3::identity() * C64::new(1.0 / 3.0, 0.0))
    }

    /// Wraps without validation. Reserved for channel outputs whose
    /// invariants hold by construction.
    pub(crate) fn from_raw_unchecked(m: CMat3) -> Self {
        Self(m)
    }

    pub fn matrix(&self) -> &CMat3 {
        &self.0
    }

    /// ⟨i|ρ|i⟩ as a real population.
    pub fn population(&self, i: usize) -> f64 {
        self.0[(i, i)].re
    }

    /// tr(Aρ) for a Hermitian observable A, returned as a real number.
    pub fn expectation(&self, a: &CMat3) -> f64 {
        (a * self.0).trace().re
    }

    pub fn eigenvalues(&self) -> [f64; 3] {
        let ev = self.0.symmetric_eigen().eigenvalues;
        [ev[0], ev[1], ev[2]]
    }
}

/// A validated 3×3 unitary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unitary3(CMat3);

impl Unitary3 {
    pub fn new(m: CMat3) -> Result<Self, QutritError> {
        let dev = max_abs_diff(&(m.adjoint() * m), &CMat3::identity());
        if dev > ALGEBRAIC_TOL {
            return Err(QutritError::NotUnitary(dev));
        }
        Ok(Self(m))
    }

    pub fn identity() -> Self {
        Self(CMat3::identity())
    }

    pub fn matrix(&self) -> &CMat3 {
        &self.0
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    /// Elementwise distance to `other` after removing the global phase.
    pub fn distance_mod_phase(&self, other: &CMat3) -> f64 {
        // Align phases on the largest element of `other`.
        let mut best = (0, 0);
        let mut best_norm = 0.0;
        for r in 0..3 {
            for c in 0..3 {
                if other[(r, c)].norm() > best_norm {
                    best_norm = other[(r, c)].norm();
                    best = (r, c);
                }
            }
        }
        if best_norm < ALGEBRAIC_TOL || self.0[best].norm() < ALGEBRAIC_TOL {
            return max_abs_diff(&self.0, other);
        }
        let phase = (other[best] / self.0[best]).unscale((other[best] / self.0[best]).norm());
        max_abs_diff(&(self.0 * phase), other)
    }
}
