//! The KCBS pentagram: five qutrit states |l_i⟩ with adjacent pairs
//! orthogonal, the associated dichotomic observables, ideal sequential
//! statistics and the unitaries that map each |l_i⟩ onto the readout axis.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::linalg::{CMat3, CVec3, DensityMatrix, QutritError, Unitary3, C64};

/// Which measurement branch is reported as +1.
///
/// The projector pair of observable i is {P_i = |l_i⟩⟨l_i|, I − P_i}. With
/// `NotGroundPlus` (the default reporting convention) the complement branch
/// I − P_i carries outcome +1, so single expectations on the ground state
/// are positive. Correlators are invariant under flipping both signs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignConvention {
    #[default]
    NotGroundPlus,
    GroundPlus,
}

impl SignConvention {
    /// Recorded outcome for the branch that projects onto |l_i⟩ (readout
    /// reports "ground" in the rotated basis).
    pub fn ground_outcome(self) -> i8 {
        match self {
            SignConvention::NotGroundPlus => -1,
            SignConvention::GroundPlus => 1,
        }
    }

    pub fn not_ground_outcome(self) -> i8 {
        -self.ground_outcome()
    }
}

/// The five pentagram vectors. Adjacency is cyclic: l_i ⊥ l_{i+1 mod 5}.
#[derive(Debug, Clone)]
pub struct KcbsFrame {
    vectors: [CVec3; 5],
    sign: SignConvention,
}

/// The two projectors of a dichotomic observable together with their
/// recorded outcome values.
#[derive(Debug, Clone)]
pub struct ProjectorPair {
    /// Rank-1 projector |l_i⟩⟨l_i|.
    pub onto: CMat3,
    /// Complement I − |l_i⟩⟨l_i|.
    pub complement: CMat3,
    /// Outcome recorded when the state is found along |l_i⟩.
    pub onto_outcome: i8,
    /// Outcome recorded for the complement branch.
    pub complement_outcome: i8,
}

/// Builds the symmetric pentagram with symmetry axis |0⟩:
/// l_k = (cos θ, sin θ cos(4πk/5), sin θ sin(4πk/5)) with
/// cos²θ = cos(π/5) / (1 + cos(π/5)).
pub fn build_kcbs_frame() -> KcbsFrame {
    let c5 = (PI / 5.0).cos();
    let cos_theta = (c5 / (1.0 + c5)).sqrt();
    let sin_theta = (1.0 / (1.0 + c5)).sqrt();
    let mut vectors = [CVec3::zeros(); 5];
    for (k, v) in vectors.iter_mut().enumerate() {
        let phi = 4.0 * PI * (k as f64 + 1.0) / 5.0;
        *v = CVec3::new(
            C64::new(cos_theta, 0.0),
            C64::new(sin_theta * phi.cos(), 0.0),
            C64::new(sin_theta * phi.sin(), 0.0),
        );
    }
    KcbsFrame {
        vectors,
        sign: SignConvention::default(),
    }
}

impl KcbsFrame {
    pub fn with_sign(mut self, sign: SignConvention) -> Self {
        self.sign = sign;
        self
    }

    pub fn sign_convention(&self) -> SignConvention {
        self.sign
    }

    /// Pentagram vector |l_i⟩, i in 1..=5.
    pub fn vector(&self, i: usize) -> Result<&CVec3, QutritError> {
        if (1..=5).contains(&i) {
            Ok(&self.vectors[i - 1])
        } else {
            Err(QutritError::IndexOutOfRange(i))
        }
    }

    /// The projector pair of observable i with outcome labels.
    pub fn observable(&self, i: usize) -> Result<ProjectorPair, QutritError> {
        let l = self.vector(i)?;
        let onto = l * l.adjoint();
        Ok(ProjectorPair {
            onto,
            complement: CMat3::identity() - onto,
            onto_outcome: self.sign.ground_outcome(),
            complement_outcome: self.sign.not_ground_outcome(),
        })
    }

    /// The Hermitian observable A_i with the frame's sign convention
    /// applied, i.e. ±(2|l_i⟩⟨l_i| − I).
    pub fn observable_operator(&self, i: usize) -> Result<CMat3, QutritError> {
        let pair = self.observable(i)?;
        let s = C64::new(pair.onto_outcome as f64, 0.0);
        Ok((pair.onto * C64::new(2.0, 0.0) - CMat3::identity()) * s)
    }
}

/// Ideal (analytic) predictions for one state: single expectations, the
/// adjacent sequential correlators and the inequality left-hand side.
#[derive(Debug, Clone, Serialize)]
pub struct IdealReport {
    /// ⟨A_i⟩ for i = 1..5, under the frame's sign convention.
    pub expectations: [f64; 5],
    /// Sequential correlator ⟨A_i A_{i+1}⟩ for the context (i, i+1 mod 5).
    pub correlators: [f64; 5],
    /// Σ_i ⟨A_i A_{i+1}⟩.
    pub sum: f64,
    /// Probability that the two outcomes of a uniformly chosen context
    /// differ (the per-trial win probability of the certification game).
    pub win_probability: f64,
}

/// Sequential correlator via the Lüders rule: first measurement i, then j.
pub fn sequential_correlator(
    frame: &KcbsFrame,
    state: &DensityMatrix,
    i: usize,
    j: usize,
) -> Result<f64, QutritError> {
    let first = frame.observable(i)?;
    let second = frame.observable(j)?;
    let rho = state.matrix();
    let mut corr = 0.0;
    for (pa, va) in [
        (&first.onto, first.onto_outcome),
        (&first.complement, first.complement_outcome),
    ] {
        let branch = pa * rho * pa;
        for (pb, vb) in [
            (&second.onto, second.onto_outcome),
            (&second.complement, second.complement_outcome),
        ] {
            let prob = (pb * branch).trace().re;
            corr += (va * vb) as f64 * prob;
        }
    }
    Ok(corr)
}

/// Analytic statistics for all five adjacent contexts (i, i+1).
pub fn ideal_statistics(frame: &KcbsFrame, state: &DensityMatrix) -> IdealReport {
    let mut expectations = [0.0; 5];
    let mut correlators = [0.0; 5];
    for i in 1..=5 {
        let a = frame.observable_operator(i).expect("index in range");
        expectations[i - 1] = state.expectation(&a);
        let j = i % 5 + 1;
        correlators[i - 1] = sequential_correlator(frame, state, i, j).expect("index in range");
    }
    let sum: f64 = correlators.iter().sum();
    // A win is a pair of unequal outcomes: Pr(win) = (1 − ⟨A_iA_j⟩)/2,
    // averaged over the five contexts.
    let win_probability = correlators.iter().map(|c| (1.0 - c) / 2.0).sum::<f64>() / 5.0;
    IdealReport {
        expectations,
        correlators,
        sum,
        win_probability,
    }
}

/// Unitary V_i with V_i |l_i⟩ = |0⟩ up to global phase, built as the pulse
/// sequence that implements it: a {1,2} rotation folding the third
/// component into the second, then a {0,1} rotation onto the readout axis.
/// By construction it decomposes back into those two rotations.
pub fn unitary_to_readout_basis(frame: &KcbsFrame, i: usize) -> Result<Unitary3, QutritError> {
    let l = frame.vector(i)?;
    let mut m = CMat3::identity();
    let (l1, l2) = (l[1], l[2]);
    let s12 = (l1.norm_sqr() + l2.norm_sqr()).sqrt();
    if l2.norm() > 1e-15 {
        let mut r12 = CMat3::identity();
        let rr = C64::new(s12, 0.0);
        r12[(1, 1)] = l1.conj() / rr;
        r12[(1, 2)] = l2.conj() / rr;
        r12[(2, 1)] = -l2 / rr;
        r12[(2, 2)] = l1 / rr;
        m = r12;
    }
    // The state is now (l0, c1, 0); rotate the {0,1} pair onto |0⟩.
    let c1 = if l2.norm() > 1e-15 {
        C64::new(s12, 0.0)
    } else {
        l1
    };
    let l0 = l[0];
    let mut r01 = CMat3::identity();
    let rr = C64::new((l0.norm_sqr() + c1.norm_sqr()).sqrt(), 0.0);
    r01[(0, 0)] = l0.conj() / rr;
    r01[(0, 1)] = c1.conj() / rr;
    r01[(1, 0)] = -c1 / rr;
    r01[(1, 1)] = l0 / rr;
    Unitary3::new(r01 * m)
}

/// The two-dimensional subspaces addressable by a single rotation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subspace {
    ZeroOne,
    OneTwo,
}

/// A unitary acting nontrivially only on one two-level subspace,
/// embedded as a full 3×3 matrix.
#[derive(Debug, Clone)]
pub struct TwoLevelRotation {
    pub subspace: Subspace,
    pub matrix: Unitary3,
}

impl TwoLevelRotation {
    fn embed(subspace: Subspace, block: [[C64; 2]; 2]) -> Self {
        let (a, b) = match subspace {
            Subspace::ZeroOne => (0, 1),
            Subspace::OneTwo => (1, 2),
        };
        let mut m = CMat3::identity();
        m[(a, a)] = block[0][0];
        m[(a, b)] = block[0][1];
        m[(b, a)] = block[1][0];
        m[(b, b)] = block[1][1];
        Self {
            subspace,
            matrix: Unitary3::new(m).expect("embedded block is unitary"),
        }
    }
}

/// Product of a rotation sequence: `rotations[0] * rotations[1] * ...`,
/// i.e. the rightmost element is applied first to a state vector.
pub fn recompose(rotations: &[TwoLevelRotation]) -> CMat3 {
    rotations
        .iter()
        .fold(CMat3::identity(), |acc, r| acc * r.matrix.matrix())
}

fn is_phase_of_identity(m: &CMat3) -> bool {
    let d = m[(0, 0)];
    if (d.norm() - 1.0).abs() > 1e-12 {
        return false;
    }
    let aligned = m / d;
    (aligned - CMat3::identity())
        .iter()
        .all(|z| z.norm() < 1e-12)
}

fn acts_only_on(m: &CMat3, subspace: Subspace) -> bool {
    let fixed = match subspace {
        Subspace::ZeroOne => 2,
        Subspace::OneTwo => 0,
    };
    (0..3).all(|k| {
        let row_ok = k == fixed || m[(fixed, k)].norm() < 1e-12;
        let col_ok = k == fixed || m[(k, fixed)].norm() < 1e-12;
        row_ok && col_ok
    }) && (m[(fixed, fixed)].norm() - 1.0).abs() < 1e-12
}

/// Decomposes a 3×3 unitary into rotations acting on the {0,1} and {1,2}
/// subspaces, by Givens-style elimination of the first column. The product
/// of the returned list (leftmost first, see [`recompose`]) reconstructs
/// the input up to global phase. At most three rotations are returned; two
/// suffice for the frame unitaries.
pub fn decompose_two_level(u: &Unitary3) -> Vec<TwoLevelRotation> {
    let m = *u.matrix();
    if is_phase_of_identity(&m) {
        return Vec::new();
    }
    for subspace in [Subspace::ZeroOne, Subspace::OneTwo] {
        if acts_only_on(&m, subspace) {
            // Remove the global phase carried by the untouched level.
            let fixed = match subspace {
                Subspace::ZeroOne => 2,
                Subspace::OneTwo => 0,
            };
            let aligned = m / m[(fixed, fixed)];
            let (a, b) = match subspace {
                Subspace::ZeroOne => (0, 1),
                Subspace::OneTwo => (1, 2),
            };
            return vec![TwoLevelRotation::embed(
                subspace,
                [
                    [aligned[(a, a)], aligned[(a, b)]],
                    [aligned[(b, a)], aligned[(b, b)]],
                ],
            )];
        }
    }

    // General case: Givens elimination of the first column. A {1,2}
    // rotation zeroes the (2,0) entry, a {0,1} rotation zeroes (1,0); what
    // remains is diag(1, B) with B unitary on {1,2}. Hence
    // m = G12† · G01† · diag(1, B): at most three factors, and exactly two
    // whenever m[(2,0)] already vanishes (the frame unitaries do).
    let mut factors = Vec::with_capacity(3);
    let mut work = m;
    let (a, b) = (work[(1, 0)], work[(2, 0)]);
    if b.norm() > 1e-14 {
        let rr = C64::new((a.norm_sqr() + b.norm_sqr()).sqrt(), 0.0);
        let mut g12 = CMat3::identity();
        g12[(1, 1)] = a.conj() / rr;
        g12[(1, 2)] = b.conj() / rr;
        g12[(2, 1)] = -b / rr;
        g12[(2, 2)] = a / rr;
        work = g12 * work;
        factors.push(TwoLevelRotation::embed(
            Subspace::OneTwo,
            [
                [g12[(1, 1)].conj(), g12[(2, 1)].conj()],
                [g12[(1, 2)].conj(), g12[(2, 2)].conj()],
            ],
        ));
    }
    let (a, b) = (work[(0, 0)], work[(1, 0)]);
    // First column of a unitary with zero third entry: |a|² + |b|² = 1.
    let mut g01 = CMat3::identity();
    g01[(0, 0)] = a.conj();
    g01[(0, 1)] = b.conj();
    g01[(1, 0)] = -b;
    g01[(1, 1)] = a;
    work = g01 * work;
    factors.push(TwoLevelRotation::embed(
        Subspace::ZeroOne,
        [
            [g01[(0, 0)].conj(), g01[(1, 0)].conj()],
            [g01[(0, 1)].conj(), g01[(1, 1)].conj()],
        ],
    ));
    // work = diag(1, B).
    if !is_phase_of_identity(&work) {
        factors.push(TwoLevelRotation::embed(
            Subspace::OneTwo,
            [
                [work[(1, 1)], work[(1, 2)]],
                [work[(2, 1)], work[(2, 2)]],
            ],
        ));
    }
    factors
}
