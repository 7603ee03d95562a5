//! The heralded CNOT protocol: input preparation, herald enumeration,
//! feed-forward and truth tables.
//!
//! The gate consumes an ancilla photon pair in the singlet state
//! `|Ψ⁻⟩ = (|H,V⟩−|V,H⟩)/√2`. Success is heralded by detecting exactly one
//! photon in each ancilla output, with `a1` analyzed in D/A and `a2` in H/V;
//! conditioned on the four possible outcomes the control-target photons carry
//! the CNOT output up to one of the Pauli corrections
//! `I⊗I, I⊗σx, σz⊗I, σz⊗σx`. For ideal inputs each outcome occurs with
//! probability 1/16, for a total herald probability of 1/4.
//!
//! Noise model knobs:
//!
//! * `cross_overlap` — squared wavepacket overlap `x` between photons from
//!   the two pair sources. Ancilla photons are created in the wavepacket
//!   `√x·|0⟩ + √(1−x)·|1⟩` while control/target photons occupy `|0⟩`, which
//!   reproduces a two-photon interference visibility of exactly `x`.
//! * `ancilla_fidelity` — the ancilla pair is a Werner-like mixture with the
//!   configured fidelity to the singlet. The white-noise part is decomposed
//!   into circular-polarization product states `{|L⟩,|R⟩}⊗{|L⟩,|R⟩}`; see
//!   [`ancilla_ensemble`] for why the decomposition matters.

use nalgebra::Matrix4;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::elements::{basis_rotation, build_cnot_circuit_with_leakage, MeasBasis, PbsConvention};
use crate::error::{Error, Result};
use crate::fock::{evolve, project_pattern, reduce_to_qubits, DetectionPattern, ModeUnitary, PureState};
use crate::modes::{ModeSpace, Polarization, Spatial};
use crate::qubit::{kron_op, ket_l, ket_r, pauli_i, pauli_x, pauli_z, BellState, Ket2, TwoQubitDensity};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// A product control-target input `(α|H⟩+β|V⟩)⊗(γ|H⟩+δ|V⟩)`.
#[derive(Debug, Clone, Copy)]
pub struct QubitPair {
    control: (Complex64, Complex64),
    target: (Complex64, Complex64),
}

impl QubitPair {
    pub const NORMALIZATION_TOL: f64 = 1e-10;

    pub fn new(
        control: (Complex64, Complex64),
        target: (Complex64, Complex64),
    ) -> Result<QubitPair> {
        for (name, q) in [("control", control), ("target", target)] {
            let norm = q.0.norm_sqr() + q.1.norm_sqr();
            if (norm - 1.0).abs() > Self::NORMALIZATION_TOL {
                return Err(Error::InvalidParameter(format!(
                    "{name} qubit is not normalized (|α|²+|β|² = {norm})"
                )));
            }
        }
        Ok(QubitPair { control, target })
    }

    pub fn from_kets(control: &Ket2, target: &Ket2) -> Result<QubitPair> {
        QubitPair::new((control[0], control[1]), (target[0], target[1]))
    }

    /// Computational-basis input; `false` is H (logic 0).
    pub fn computational(control_v: bool, target_v: bool) -> QubitPair {
        let bit = |b: bool| {
            if b {
                (c(0.0, 0.0), c(1.0, 0.0))
            } else {
                (c(1.0, 0.0), c(0.0, 0.0))
            }
        };
        QubitPair {
            control: bit(control_v),
            target: bit(target_v),
        }
    }

    /// The entangling benchmark input |D,H⟩.
    pub fn d_h() -> QubitPair {
        let s = 1.0 / 2.0f64.sqrt();
        QubitPair {
            control: (c(s, 0.0), c(s, 0.0)),
            target: (c(1.0, 0.0), c(0.0, 0.0)),
        }
    }

    pub fn control(&self) -> (Complex64, Complex64) {
        self.control
    }

    pub fn target(&self) -> (Complex64, Complex64) {
        self.target
    }

    /// The ideal CNOT output for this input, as a two-qubit ket.
    pub fn ideal_cnot_output(&self) -> nalgebra::Vector4<Complex64> {
        let (a, b) = self.control;
        let (g, d) = self.target;
        // α|H⟩(γ|H⟩+δ|V⟩) + β|V⟩(δ|H⟩+γ|V⟩)
        nalgebra::Vector4::new(a * g, a * d, b * d, b * g)
    }

    pub fn all_computational() -> [QubitPair; 4] {
        [
            QubitPair::computational(false, false),
            QubitPair::computational(false, true),
            QubitPair::computational(true, false),
            QubitPair::computational(true, true),
        ]
    }
}

/// Noise parameters of a gate run.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// Squared cross-source wavepacket overlap, in [0, 1].
    pub cross_overlap: f64,
    /// Fidelity of the ancilla pair to the singlet, in [0.25, 1].
    pub ancilla_fidelity: f64,
    /// Wrong-port power fraction of the on-chip splitters, in [0, 0.5]
    /// (an extinction ratio of 50:1 is a leakage of 1/51).
    #[serde(default)]
    pub pbs_leakage: f64,
}

impl NoiseConfig {
    pub const IDEAL: NoiseConfig = NoiseConfig {
        cross_overlap: 1.0,
        ancilla_fidelity: 1.0,
        pbs_leakage: 0.0,
    };

    /// Defaults matching the measured source and chip quality: visibility
    /// 0.88, ancilla fidelity 0.945, splitter extinction 50:1.
    pub const CALIBRATED: NoiseConfig = NoiseConfig {
        cross_overlap: 0.88,
        ancilla_fidelity: 0.945,
        pbs_leakage: 1.0 / 51.0,
    };

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.cross_overlap) || !self.cross_overlap.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "cross_overlap must be in [0, 1], got {}",
                self.cross_overlap
            )));
        }
        if !(0.25..=1.0).contains(&self.ancilla_fidelity) || !self.ancilla_fidelity.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "ancilla_fidelity must be in [0.25, 1], got {}",
                self.ancilla_fidelity
            )));
        }
        if !(0.0..=0.5).contains(&self.pbs_leakage) || !self.pbs_leakage.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "pbs_leakage must be in [0, 0.5], got {}",
                self.pbs_leakage
            )));
        }
        Ok(())
    }

    /// Number of internal wavepacket labels needed for this configuration.
    pub fn n_internal(&self) -> usize {
        if self.cross_overlap < 1.0 {
            2
        } else {
            1
        }
    }

    /// Ancilla wavepacket amplitudes over the internal labels.
    pub fn ancilla_wavepacket(&self) -> Vec<f64> {
        let x = self.cross_overlap;
        if x < 1.0 {
            vec![x.sqrt(), (1.0 - x).sqrt()]
        } else {
            vec![1.0]
        }
    }
}

/// One pure component of the ancilla mixture: 2x2 polarization amplitudes
/// `psi[p_a1][p_a2]` with statistical weight `weight`.
#[derive(Debug, Clone)]
pub struct AncillaComponent {
    pub weight: f64,
    pub psi: [[Complex64; 2]; 2],
    pub label: &'static str,
}

/// Pure-state decomposition of the Werner-like degraded ancilla.
///
/// The state is `F′·|Ψ⁻⟩⟨Ψ⁻| + (1−F′)·I/4` with `F′ = (4F−1)/3` so the
/// singlet fidelity equals `F`. The white-noise part is decomposed into the
/// four circular products `|L⟩,|R⟩ ⊗ |L⟩,|R⟩` rather than Bell states:
/// double-pair emission from a Bell-state source never produces four-fold
/// coincidences here (the H,V pair entering each splitter bunches), so a
/// Bell decomposition would keep that noise channel at exactly zero even for
/// F < 1. Circular products split at both splitters and reproduce the
/// observed residual double-pair noise. Predictions for single-pair emission
/// depend only on the mixture itself, not on the decomposition.
pub fn ancilla_ensemble(fidelity: f64) -> Vec<AncillaComponent> {
    // Werner weight: F = F′ + (1−F′)/4 since the circular products LR and RL
    // each overlap the singlet with probability 1/2.
    let werner = (4.0 * fidelity - 1.0) / 3.0;
    let s = 1.0 / 2.0f64.sqrt();
    let singlet = AncillaComponent {
        weight: werner,
        psi: [
            [c(0.0, 0.0), c(s, 0.0)],
            [c(-s, 0.0), c(0.0, 0.0)],
        ],
        label: "singlet",
    };
    if fidelity >= 1.0 {
        return vec![singlet];
    }
    let contaminant_weight = (1.0 - werner) / 4.0;
    let mut components = vec![singlet];
    let circ = [(ket_l(), "L"), (ket_r(), "R")];
    for (k1, n1) in &circ {
        for (k2, n2) in &circ {
            let mut psi = [[c(0.0, 0.0); 2]; 2];
            for p1 in 0..2 {
                for p2 in 0..2 {
                    psi[p1][p2] = k1[p1] * k2[p2];
                }
            }
            let label: &'static str = match (*n1, *n2) {
                ("L", "L") => "noise_LL",
                ("L", "R") => "noise_LR",
                ("R", "L") => "noise_RL",
                _ => "noise_RR",
            };
            components.push(AncillaComponent {
                weight: contaminant_weight,
                psi,
                label,
            });
        }
    }
    components
}

/// Detector outcome for the first ancilla (analyzed in D/A).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Ancilla1Result {
    D,
    A,
}

/// Detector outcome for the second ancilla (analyzed in H/V).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Ancilla2Result {
    H,
    V,
}

pub const HERALD_OUTCOMES: [(Ancilla1Result, Ancilla2Result); 4] = [
    (Ancilla1Result::D, Ancilla2Result::H),
    (Ancilla1Result::D, Ancilla2Result::V),
    (Ancilla1Result::A, Ancilla2Result::H),
    (Ancilla1Result::A, Ancilla2Result::V),
];

/// One of the four herald branches: detection pattern, probability and the
/// control-target state conditioned on it (before feed-forward).
#[derive(Debug, Clone)]
pub struct HeraldOutcome {
    pub ancilla1: Ancilla1Result,
    pub ancilla2: Ancilla2Result,
    pub probability: f64,
    pub conditional: TwoQubitDensity,
}

/// Pauli correction on the control qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ControlPauli {
    I,
    Z,
}

/// Pauli correction on the target qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TargetPauli {
    I,
    X,
}

/// Feed-forward table: which Pauli pair each herald outcome needs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeedForwardRule {
    entries: [(Ancilla1Result, Ancilla2Result, ControlPauli, TargetPauli); 4],
}

impl FeedForwardRule {
    pub fn new(
        entries: [(Ancilla1Result, Ancilla2Result, ControlPauli, TargetPauli); 4],
    ) -> FeedForwardRule {
        FeedForwardRule { entries }
    }

    pub fn paulis(&self, a1: Ancilla1Result, a2: Ancilla2Result) -> (ControlPauli, TargetPauli) {
        self.entries
            .iter()
            .find(|(e1, e2, _, _)| *e1 == a1 && *e2 == a2)
            .map(|(_, _, pc, pt)| (*pc, *pt))
            .expect("rule covers all four outcomes")
    }

    pub fn entries(
        &self,
    ) -> &[(Ancilla1Result, Ancilla2Result, ControlPauli, TargetPauli); 4] {
        &self.entries
    }

    pub fn correction_matrix(&self, a1: Ancilla1Result, a2: Ancilla2Result) -> Matrix4<Complex64> {
        let (pc, pt) = self.paulis(a1, a2);
        let mc = match pc {
            ControlPauli::I => pauli_i(),
            ControlPauli::Z => pauli_z(),
        };
        let mt = match pt {
            TargetPauli::I => pauli_i(),
            TargetPauli::X => pauli_x(),
        };
        kron_op(&mc, &mt)
    }
}

/// The feed-forward table for the default element conventions, frozen from a
/// full simulation of the ideal gate (see the regression test alongside this
/// module): D heralds need no control correction, A heralds need σz; an H
/// click on the second ancilla needs no target correction, a V click needs
/// σx.
pub const STANDARD_FEED_FORWARD: FeedForwardRule = FeedForwardRule {
    entries: [
        (Ancilla1Result::D, Ancilla2Result::H, ControlPauli::I, TargetPauli::I),
        (Ancilla1Result::D, Ancilla2Result::V, ControlPauli::I, TargetPauli::X),
        (Ancilla1Result::A, Ancilla2Result::H, ControlPauli::Z, TargetPauli::I),
        (Ancilla1Result::A, Ancilla2Result::V, ControlPauli::Z, TargetPauli::X),
    ],
};

/// Bell states produced in each herald branch for the |D,H⟩ input before
/// feed-forward, frozen from the ideal simulation (regression-tested).
pub const BRANCH_BELL_STATES: [(Ancilla1Result, Ancilla2Result, BellState); 4] = [
    (Ancilla1Result::D, Ancilla2Result::H, BellState::PhiPlus),
    (Ancilla1Result::D, Ancilla2Result::V, BellState::PsiPlus),
    (Ancilla1Result::A, Ancilla2Result::H, BellState::PhiMinus),
    (Ancilla1Result::A, Ancilla2Result::V, BellState::PsiMinus),
];

pub fn branch_bell_state(a1: Ancilla1Result, a2: Ancilla2Result) -> BellState {
    BRANCH_BELL_STATES
        .iter()
        .find(|(e1, e2, _)| *e1 == a1 && *e2 == a2)
        .map(|(_, _, b)| *b)
        .expect("table covers all four outcomes")
}

/// Build the four-photon gate input for one ancilla component.
///
/// Control and target photons occupy internal label 0; both ancilla photons
/// occupy the cross-source wavepacket.
pub fn gate_input(
    space: &ModeSpace,
    pair: &QubitPair,
    psi_ancilla: &[[Complex64; 2]; 2],
    wavepacket: &[f64],
) -> PureState {
    let (alpha, beta) = pair.control;
    let (gamma, delta) = pair.target;
    let control_op = vec![
        (space.index_of(Spatial::C, Polarization::H, 0), alpha),
        (space.index_of(Spatial::C, Polarization::V, 0), beta),
    ];
    let target_op = vec![
        (space.index_of(Spatial::T, Polarization::H, 0), gamma),
        (space.index_of(Spatial::T, Polarization::V, 0), delta),
    ];
    let pair_op = ancilla_pair_operator(space, psi_ancilla, wavepacket);
    PureState::vacuum(space.dim())
        .apply_creation(&control_op)
        .apply_creation(&target_op)
        .apply_creation_sum(&pair_op)
}

/// The two-photon creation operator of one ancilla pair component:
/// `Σ ψ[p1][p2] a†_{a1,p1,w} a†_{a2,p2,w}` expanded over internal labels.
pub fn ancilla_pair_operator(
    space: &ModeSpace,
    psi: &[[Complex64; 2]; 2],
    wavepacket: &[f64],
) -> Vec<(Complex64, Vec<usize>)> {
    let mut ops = Vec::new();
    for (p1, pol1) in Polarization::BOTH.iter().enumerate() {
        for (p2, pol2) in Polarization::BOTH.iter().enumerate() {
            if psi[p1][p2].norm_sqr() == 0.0 {
                continue;
            }
            for (i1, w1) in wavepacket.iter().enumerate() {
                for (i2, w2) in wavepacket.iter().enumerate() {
                    ops.push((
                        psi[p1][p2] * c(w1 * w2, 0.0),
                        vec![
                            space.index_of(Spatial::A1, *pol1, i1),
                            space.index_of(Spatial::A2, *pol2, i2),
                        ],
                    ));
                }
            }
        }
    }
    ops
}

/// The interferometer followed by the D/A analyzer rotation on `a1`, so all
/// herald detectors project in H/V.
pub fn circuit_with_herald_analyzer(space: &ModeSpace, pbs_leakage: f64) -> ModeUnitary {
    basis_rotation(space, Spatial::A1, MeasBasis::DA).compose(&build_cnot_circuit_with_leakage(
        space,
        PbsConvention::Chip,
        pbs_leakage,
    ))
}

/// Detection pattern for one herald outcome: the clicked ancilla detectors
/// see exactly one photon, their partners none, and the control and target
/// outputs one photon each (any polarization).
pub fn herald_pattern(
    space: &ModeSpace,
    a1: Ancilla1Result,
    a2: Ancilla2Result,
) -> DetectionPattern {
    // After the D/A analyzer rotation, a D click is an H click on a1.
    let a1_pol = match a1 {
        Ancilla1Result::D => Polarization::H,
        Ancilla1Result::A => Polarization::V,
    };
    let a2_pol = match a2 {
        Ancilla2Result::H => Polarization::H,
        Ancilla2Result::V => Polarization::V,
    };
    DetectionPattern::new(vec![
        (space.detector_group(Spatial::A1, a1_pol), 1),
        (space.detector_group(Spatial::A1, a1_pol.other()), 0),
        (space.detector_group(Spatial::A2, a2_pol), 1),
        (space.detector_group(Spatial::A2, a2_pol.other()), 0),
        (space.spatial_group(Spatial::C), 1),
        (space.spatial_group(Spatial::T), 1),
    ])
}

/// Run the heralded gate on a product input.
///
/// Returns the four herald outcomes in the fixed order (D,H), (D,V), (A,H),
/// (A,V). Probabilities are per gate attempt; conditional states are the
/// control-target density matrices before feed-forward. For the ideal
/// configuration every probability is 1/16 and each conditional state is the
/// pure CNOT output up to the branch's Pauli correction.
pub fn run_gate(pair: &QubitPair, noise: &NoiseConfig) -> Result<Vec<HeraldOutcome>> {
    noise.validate()?;
    let space = ModeSpace::new(noise.n_internal());
    let circuit = circuit_with_herald_analyzer(&space, noise.pbs_leakage);
    let wavepacket = noise.ancilla_wavepacket();

    let mut probabilities = [0.0f64; 4];
    let mut accumulated = [
        TwoQubitDensity::zeros(),
        TwoQubitDensity::zeros(),
        TwoQubitDensity::zeros(),
        TwoQubitDensity::zeros(),
    ];
    for component in ancilla_ensemble(noise.ancilla_fidelity) {
        let input = gate_input(&space, pair, &component.psi, &wavepacket);
        let output = evolve(&input, &circuit)?;
        for (slot, (a1, a2)) in HERALD_OUTCOMES.iter().enumerate() {
            let pattern = herald_pattern(&space, *a1, *a2);
            let (p, conditional) = project_pattern(&output, &pattern)?;
            if p > 0.0 {
                let rho = reduce_to_qubits(&conditional, &space, [Spatial::C, Spatial::T])?;
                probabilities[slot] += component.weight * p;
                accumulated[slot].add_scaled(&rho, component.weight * p);
            }
        }
    }

    Ok(HERALD_OUTCOMES
        .iter()
        .zip(probabilities.iter().zip(accumulated.iter()))
        .map(|((a1, a2), (&p, rho))| HeraldOutcome {
            ancilla1: *a1,
            ancilla2: *a2,
            probability: p,
            conditional: if p > 0.0 {
                rho.scaled(1.0 / p).hermitized()
            } else {
                TwoQubitDensity::zeros()
            },
        })
        .collect())
}

/// Total probability that the herald fires, summed over the four outcomes.
pub fn herald_probability(pair: &QubitPair, noise: &NoiseConfig) -> Result<f64> {
    Ok(run_gate(pair, noise)?.iter().map(|o| o.probability).sum())
}

/// Apply a feed-forward rule's Pauli pair to an outcome's conditional state.
pub fn apply_feedforward(outcome: &HeraldOutcome, rule: &FeedForwardRule) -> TwoQubitDensity {
    let u = rule.correction_matrix(outcome.ancilla1, outcome.ancilla2);
    outcome.conditional.conjugated(&u)
}

/// The ideal CNOT truth table (rows HH, HV, VH, VV; columns likewise).
pub fn cnot_ideal_table() -> [[f64; 4]; 4] {
    let mut t = [[0.0; 4]; 4];
    t[0][0] = 1.0;
    t[1][1] = 1.0;
    t[2][3] = 1.0;
    t[3][2] = 1.0;
    t
}

/// Herald-conditioned computational-basis truth table with feed-forward.
///
/// Row `i` is input `HH, HV, VH, VV`; each row sums to 1.
pub fn truth_table(noise: &NoiseConfig) -> Result<[[f64; 4]; 4]> {
    let mut table = [[0.0; 4]; 4];
    for (row, pair) in QubitPair::all_computational().iter().enumerate() {
        let outcomes = run_gate(pair, noise)?;
        let total: f64 = outcomes.iter().map(|o| o.probability).sum();
        for outcome in &outcomes {
            let corrected = apply_feedforward(&outcome, &STANDARD_FEED_FORWARD);
            let populations = corrected.populations();
            for (col, p) in populations.iter().enumerate() {
                table[row][col] += outcome.probability * p;
            }
        }
        for col in 0..4 {
            table[row][col] /= total;
        }
    }
    Ok(table)
}

/// Mean over the four inputs of the probability assigned to the ideal
/// output: `(1/4) Σ_ij ideal[i][j]·measured[i][j]`.
pub fn truth_table_overlap(measured: &[[f64; 4]; 4], ideal: &[[f64; 4]; 4]) -> f64 {
    let mut total = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            total += ideal[i][j] * measured[i][j];
        }
    }
    total / 4.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qubit::{kron_ket, ket_d, ket_h, ket_v, random_pure_state};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn qubit_pair_validates_normalization() {
        assert!(QubitPair::new((c(1.0, 0.0), c(0.1, 0.0)), (c(1.0, 0.0), c(0.0, 0.0))).is_err());
        assert!(QubitPair::new((c(0.6, 0.0), c(0.0, 0.8)), (c(1.0, 0.0), c(0.0, 0.0))).is_ok());
    }

    #[test]
    fn noise_config_validates_ranges() {
        assert!(NoiseConfig {
            cross_overlap: 1.2,
            ancilla_fidelity: 1.0,
            pbs_leakage: 0.0,
        }
        .validate()
        .is_err());
        assert!(NoiseConfig {
            cross_overlap: 0.5,
            ancilla_fidelity: 0.2,
            pbs_leakage: 0.0,
        }
        .validate()
        .is_err());
        assert!(NoiseConfig::CALIBRATED.validate().is_ok());
    }

    #[test]
    fn ancilla_ensemble_weights_and_fidelity() {
        let f = 0.945;
        let ensemble = ancilla_ensemble(f);
        assert_eq!(ensemble.len(), 5);
        let total: f64 = ensemble.iter().map(|m| m.weight).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
        // fidelity of the mixture to the singlet equals the configured value
        let singlet = BellState::PsiMinus.ket();
        let mut fidelity = 0.0;
        for m in &ensemble {
            let ket = nalgebra::Vector4::new(m.psi[0][0], m.psi[0][1], m.psi[1][0], m.psi[1][1]);
            fidelity += m.weight * (singlet.adjoint() * ket)[(0, 0)].norm_sqr();
        }
        assert_abs_diff_eq!(fidelity, f, epsilon = 1e-12);
    }

    #[test]
    fn ideal_herald_probability_is_one_quarter() {
        for pair in [
            QubitPair::computational(false, false),
            QubitPair::d_h(),
            QubitPair::new((c(0.6, 0.0), c(0.0, 0.8)), (c(0.28, 0.0), c(0.0, -0.96))).unwrap(),
        ] {
            let p = herald_probability(&pair, &NoiseConfig::IDEAL).unwrap();
            assert_abs_diff_eq!(p, 0.25, epsilon = 1e-9);
        }
    }

    #[test]
    fn ideal_outcomes_are_uniform_and_pure() {
        let outcomes = run_gate(&QubitPair::d_h(), &NoiseConfig::IDEAL).unwrap();
        for o in &outcomes {
            assert_abs_diff_eq!(o.probability, 1.0 / 16.0, epsilon = 1e-9);
            assert_abs_diff_eq!(o.conditional.purity(), 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn computational_truth_table_is_cnot() {
        let table = truth_table(&NoiseConfig::IDEAL).unwrap();
        let ideal = cnot_ideal_table();
        for i in 0..4 {
            for j in 0..4 {
                assert_abs_diff_eq!(table[i][j], ideal[i][j], epsilon = 1e-9);
            }
        }
        assert_abs_diff_eq!(truth_table_overlap(&table, &ideal), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn vv_input_flips_target_after_feedforward() {
        let outcomes = run_gate(&QubitPair::computational(true, true), &NoiseConfig::IDEAL).unwrap();
        let vh = kron_ket(&ket_v(), &ket_h());
        for o in &outcomes {
            let corrected = apply_feedforward(o, &STANDARD_FEED_FORWARD);
            assert_abs_diff_eq!(corrected.fidelity(&vh), 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn dh_input_yields_bell_states_and_phi_plus_after_feedforward() {
        let outcomes = run_gate(&QubitPair::d_h(), &NoiseConfig::IDEAL).unwrap();
        let phi_plus = BellState::PhiPlus.ket();
        for o in &outcomes {
            let bell = branch_bell_state(o.ancilla1, o.ancilla2);
            assert_abs_diff_eq!(o.conditional.fidelity(&bell.ket()), 1.0, epsilon = 1e-9);
            let corrected = apply_feedforward(o, &STANDARD_FEED_FORWARD);
            assert_abs_diff_eq!(corrected.fidelity(&phi_plus), 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn feedforward_table_matches_simulation() {
        // Re-derive the frozen table: for each branch, exactly one Pauli
        // pair turns the ideal conditional states of probe inputs into the
        // ideal CNOT output.
        let probes = [
            QubitPair::computational(false, true),
            QubitPair::computational(true, false),
            QubitPair::d_h(),
            QubitPair::from_kets(&ket_d(), &ket_d()).unwrap(),
        ];
        let mut derived: Vec<(Ancilla1Result, Ancilla2Result, ControlPauli, TargetPauli)> =
            Vec::new();
        for (a1, a2) in HERALD_OUTCOMES {
            let mut candidates = Vec::new();
            for pc in [ControlPauli::I, ControlPauli::Z] {
                for pt in [TargetPauli::I, TargetPauli::X] {
                    let rule = FeedForwardRule::new([
                        (a1, a2, pc, pt),
                        (a1, a2, pc, pt),
                        (a1, a2, pc, pt),
                        (a1, a2, pc, pt),
                    ]);
                    let ok = probes.iter().all(|pair| {
                        let outcomes = run_gate(pair, &NoiseConfig::IDEAL).unwrap();
                        let o = outcomes
                            .iter()
                            .find(|o| o.ancilla1 == a1 && o.ancilla2 == a2)
                            .unwrap();
                        let corrected = apply_feedforward(o, &rule);
                        (corrected.fidelity(&pair.ideal_cnot_output()) - 1.0).abs() < 1e-9
                    });
                    if ok {
                        candidates.push((pc, pt));
                    }
                }
            }
            assert_eq!(candidates.len(), 1, "branch {:?} {:?}", a1, a2);
            derived.push((a1, a2, candidates[0].0, candidates[0].1));
        }
        assert_eq!(&derived[..], STANDARD_FEED_FORWARD.entries());
    }

    #[test]
    fn feedforward_applied_twice_is_identity() {
        let outcomes = run_gate(&QubitPair::d_h(), &NoiseConfig::IDEAL).unwrap();
        for o in &outcomes {
            let once = apply_feedforward(o, &STANDARD_FEED_FORWARD);
            let twice = HeraldOutcome {
                conditional: once,
                ..o.clone()
            };
            let back = apply_feedforward(&twice, &STANDARD_FEED_FORWARD);
            assert_abs_diff_eq!(back.trace_distance(&o.conditional), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn branch_independence_for_random_ideal_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let control = random_pure_state(&mut rng);
            // use only the first two amplitudes, renormalized, per qubit
            let cn = (control[0].norm_sqr() + control[1].norm_sqr()).sqrt();
            let tn = (control[2].norm_sqr() + control[3].norm_sqr()).sqrt();
            let pair = QubitPair::new(
                (control[0] / cn, control[1] / cn),
                (control[2] / tn, control[3] / tn),
            )
            .unwrap();
            let outcomes = run_gate(&pair, &NoiseConfig::IDEAL).unwrap();
            let reference = apply_feedforward(&outcomes[0], &STANDARD_FEED_FORWARD);
            for o in &outcomes[1..] {
                let corrected = apply_feedforward(o, &STANDARD_FEED_FORWARD);
                assert_abs_diff_eq!(corrected.trace_distance(&reference), 0.0, epsilon = 1e-9);
            }
            let ideal = pair.ideal_cnot_output();
            assert_abs_diff_eq!(reference.fidelity(&ideal), 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn overlap_of_uniform_table_is_one_quarter() {
        let uniform = [[0.25; 4]; 4];
        assert_abs_diff_eq!(
            truth_table_overlap(&uniform, &cnot_ideal_table()),
            0.25,
            epsilon = 1e-12
        );
    }

    #[test]
    fn cross_overlap_degrades_overlap_monotonically() {
        let mut previous = f64::INFINITY;
        for x in [1.0, 0.8, 0.5, 0.2, 0.0] {
            let noise = NoiseConfig {
                cross_overlap: x,
                ancilla_fidelity: 1.0,
                pbs_leakage: 0.0,
            };
            let overlap = truth_table_overlap(&truth_table(&noise).unwrap(), &cnot_ideal_table());
            assert!(
                overlap <= previous + 1e-12,
                "overlap increased from {previous} to {overlap} at x={x}"
            );
            previous = overlap;
        }
    }

    #[test]
    fn distinguishable_crosstalk_matches_analytic_rate() {
        // For a computational input the only two-photon interference is at
        // the second splitter; the wrong-target rate per row is (1-x)/2.
        for x in [0.88, 0.5] {
            let noise = NoiseConfig {
                cross_overlap: x,
                ancilla_fidelity: 1.0,
                pbs_leakage: 0.0,
            };
            let table = truth_table(&noise).unwrap();
            assert_abs_diff_eq!(table[0][1], (1.0 - x) / 2.0, epsilon = 1e-9);
            assert_abs_diff_eq!(table[0][0], 1.0 - (1.0 - x) / 2.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn hh_input_is_unchanged_in_every_branch() {
        let outcomes = run_gate(&QubitPair::computational(false, false), &NoiseConfig::IDEAL).unwrap();
        let hh = kron_ket(&ket_h(), &ket_h());
        for o in &outcomes {
            let corrected = apply_feedforward(o, &STANDARD_FEED_FORWARD);
            assert_abs_diff_eq!(corrected.fidelity(&hh), 1.0, epsilon = 1e-9);
        }
    }
}
