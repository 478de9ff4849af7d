//! Qutrit-level linear algebra and the KCBS pentagram.

mod dispersive;
mod frame;
mod linalg;

pub use dispersive::{dispersive_shifts, DispersiveError, DispersiveShiftSet};
pub use frame::{
    build_kcbs_frame, decompose_two_level, ideal_statistics, recompose, sequential_correlator,
    unitary_to_readout_basis, IdealReport, KcbsFrame, ProjectorPair, SignConvention, Subspace,
    TwoLevelRotation,
};
pub use linalg::{basis_vector, DensityMatrix, QutritError, Unitary3, CMat3, CVec3, C64};
