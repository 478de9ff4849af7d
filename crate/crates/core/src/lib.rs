//! Simulation and statistical certification for a sequential qutrit
//! contextuality test.
//!
//! The crate has four layers:
//!
//! * [`qutrit`] — complex 3-dimensional linear algebra, the KCBS pentagram
//!   construction, ideal quantum predictions and the dispersive-shift
//!   calculator for the binary-outcome readout.
//! * [`channels`] — quantum channels: the ground-state Lüders measurement,
//!   unitary evolution, three-level relaxation/dephasing and classical
//!   readout misassignment.
//! * [`protocol`] — the full sequential-measurement experiment: trial
//!   scheduling, initialization with post-selection, trial-log persistence
//!   and the correlation/incompatibility analysis.
//! * [`stats`] — the hypothesis-test engine: winning-probability bound,
//!   extreme-tail binomial P-values in extended-exponent arithmetic and the
//!   Bentkus concentration bound.

pub mod channels;
pub mod protocol;
pub mod qutrit;
pub mod stats;

pub use qutrit::{DensityMatrix, KcbsFrame, SignConvention, Unitary3};
