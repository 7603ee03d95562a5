//! Pair-source emission statistics: double-pair noise classes, blocked-source
//! rates and two-photon interference visibility.
//!
//! Four-fold coincidences come from three leading-order emission patterns:
//! two pairs from the control-target source, two pairs from the ancilla
//! source, or one pair from each. Both double-pair classes scale as p² like
//! the signal, so they are measured by blocking one source at a time and
//! subtracted.
//!
//! Double-pair states are the second-order term of the entangled-pair
//! squeezing operator, not two independent pairs: for a perfect singlet
//! source the second-order term is
//! `(|2_H 2_V⟩ − |1111⟩ + |2_V 2_H⟩)/√3`, whose bosonic structure is what
//! makes ancilla double emission invisible to the herald.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{evolve, project_pattern, DetectionPattern, ModeUnitary, PureState};
use crate::modes::{ModeSpace, Polarization, Spatial};
use crate::protocol::{ancilla_ensemble, ancilla_pair_operator, NoiseConfig};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Configuration of one pair source.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SourceConfig {
    /// Probability of emitting one pair per pulse.
    pub pair_probability: f64,
    /// Fidelity of the emitted pair to the singlet.
    pub state_fidelity: f64,
}

impl SourceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=0.1).contains(&self.pair_probability) || !self.pair_probability.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "pair_probability must be in [0, 0.1], got {}",
                self.pair_probability
            )));
        }
        if !(0.25..=1.0).contains(&self.state_fidelity) {
            return Err(Error::InvalidParameter(format!(
                "state_fidelity must be in [0.25, 1], got {}",
                self.state_fidelity
            )));
        }
        Ok(())
    }
}

/// Cross-source distinguishability: squared wavepacket overlap between the
/// two sources' photons. Photons from the same source are mutually ideal.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DistinguishabilityModel {
    pub cross_overlap: f64,
}

impl DistinguishabilityModel {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.cross_overlap) || !self.cross_overlap.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "cross_overlap must be in [0, 1], got {}",
                self.cross_overlap
            )));
        }
        Ok(())
    }

    pub fn n_internal(&self) -> usize {
        if self.cross_overlap < 1.0 {
            2
        } else {
            1
        }
    }

    /// Ancilla-source wavepacket over internal labels; the control-target
    /// source occupies label 0.
    pub fn ancilla_wavepacket(&self) -> Vec<f64> {
        let x = self.cross_overlap;
        if x < 1.0 {
            vec![x.sqrt(), (1.0 - x).sqrt()]
        } else {
            vec![1.0]
        }
    }
}

/// Which four-photon emission pattern produced an event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EmissionClass {
    /// Two pairs from the control-target source.
    CtDouble,
    /// Two pairs from the ancilla source.
    AncDouble,
    /// One pair from each source.
    OneEach,
}

/// One pure four-photon emission component with its statistical weight.
///
/// Degraded sources are mixtures, so a class can expand into several events
/// (one per pure component); with ideal sources there are exactly three.
#[derive(Debug, Clone)]
pub struct EmissionEvent {
    pub class: EmissionClass,
    pub weight: f64,
    pub input: PureState,
}

/// Second-order emission of a pair source: `(S†)²|0⟩` normalized, where
/// `S† = Σ ψ[p1][p2] a†_{m1,p1,w} a†_{m2,p2,w}`.
///
/// Also returns the weight factor `‖(S†)²|0⟩‖² / (4‖S†|0⟩‖⁴)` that converts
/// the squared single-pair probability into the double-pair probability
/// (3/4 for a singlet source, 1 for a product-state source).
pub fn second_order_pair_state(
    space: &ModeSpace,
    modes: (Spatial, Spatial),
    psi: &[[Complex64; 2]; 2],
    wavepacket: &[f64],
) -> (PureState, f64) {
    let op = pair_operator(space, modes, psi, wavepacket);
    let once = PureState::vacuum(space.dim()).apply_creation_sum(&op);
    let single_norm_sqr = once.norm_sqr();
    let twice = once.apply_creation_sum(&op);
    let double_norm_sqr = twice.norm_sqr();
    let weight_factor = double_norm_sqr / (4.0 * single_norm_sqr * single_norm_sqr);
    (twice.normalized(), weight_factor)
}

/// Pair creation operator on arbitrary spatial modes.
pub fn pair_operator(
    space: &ModeSpace,
    modes: (Spatial, Spatial),
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
                            space.index_of(modes.0, *pol1, i1),
                            space.index_of(modes.1, *pol2, i2),
                        ],
                    ));
                }
            }
        }
    }
    ops
}

/// The three leading-order four-photon emission classes.
///
/// The control-target source emits into `(c, t)` with internal label 0, the
/// ancilla source into `(a1, a2)` with the cross-source wavepacket. Weights
/// are `w·p²` for the double classes (`w` from [`second_order_pair_state`])
/// and `p_ct·p_anc` for one-each; class probabilities of the same order
/// whenever the pair probabilities are comparable. Degraded sources expand
/// into one event per pure mixture component.
pub fn emission_ensemble(
    ct: &SourceConfig,
    anc: &SourceConfig,
    d: &DistinguishabilityModel,
) -> Result<Vec<EmissionEvent>> {
    ct.validate()?;
    anc.validate()?;
    d.validate()?;
    let space = ModeSpace::new(d.n_internal());
    let ct_wavepacket = vec![1.0];
    let anc_wavepacket = d.ancilla_wavepacket();
    let mut events = Vec::new();

    // control-target doubles
    for member in ancilla_ensemble(ct.state_fidelity) {
        let (state, factor) = second_order_pair_state(
            &space,
            (Spatial::C, Spatial::T),
            &member.psi,
            &ct_wavepacket,
        );
        events.push(EmissionEvent {
            class: EmissionClass::CtDouble,
            weight: member.weight * factor * ct.pair_probability.powi(2),
            input: state,
        });
    }
    // ancilla doubles
    for member in ancilla_ensemble(anc.state_fidelity) {
        let (state, factor) = second_order_pair_state(
            &space,
            (Spatial::A1, Spatial::A2),
            &member.psi,
            &anc_wavepacket,
        );
        events.push(EmissionEvent {
            class: EmissionClass::AncDouble,
            weight: member.weight * factor * anc.pair_probability.powi(2),
            input: state,
        });
    }
    // one pair from each source
    for ct_member in ancilla_ensemble(ct.state_fidelity) {
        for anc_member in ancilla_ensemble(anc.state_fidelity) {
            let ct_op = pair_operator(&space, (Spatial::C, Spatial::T), &ct_member.psi, &ct_wavepacket);
            let anc_op = ancilla_pair_operator(&space, &anc_member.psi, &anc_wavepacket);
            let state = PureState::vacuum(space.dim())
                .apply_creation_sum(&ct_op)
                .apply_creation_sum(&anc_op)
                .normalized();
            events.push(EmissionEvent {
                class: EmissionClass::OneEach,
                weight: ct_member.weight * anc_member.weight * ct.pair_probability * anc.pair_probability,
                input: state,
            });
        }
    }
    Ok(events)
}

/// Per-class probabilities of a set of detection patterns.
#[derive(Debug, Clone, Default)]
pub struct ClassRates {
    pub ct_double: Vec<f64>,
    pub anc_double: Vec<f64>,
    pub one_each: Vec<f64>,
}

impl ClassRates {
    /// Raw rate: all classes summed, per pattern.
    pub fn raw(&self) -> Vec<f64> {
        (0..self.one_each.len())
            .map(|i| self.ct_double[i] + self.anc_double[i] + self.one_each[i])
            .collect()
    }

    /// Rate with the control-target source blocked.
    pub fn blocked_ct(&self) -> &[f64] {
        &self.anc_double
    }

    /// Rate with the ancilla source blocked.
    pub fn blocked_anc(&self) -> &[f64] {
        &self.ct_double
    }

    pub fn total(&self, class: EmissionClass) -> f64 {
        match class {
            EmissionClass::CtDouble => self.ct_double.iter().sum(),
            EmissionClass::AncDouble => self.anc_double.iter().sum(),
            EmissionClass::OneEach => self.one_each.iter().sum(),
        }
    }
}

/// Evolve every emission event through a circuit and accumulate the weighted
/// probability of each detection pattern, per class.
///
/// `raw − blocked_ct − blocked_anc` recovers the one-each class exactly at
/// this truncation order.
pub fn four_fold_rates(
    events: &[EmissionEvent],
    circuit: &ModeUnitary,
    patterns: &[DetectionPattern],
) -> Result<ClassRates> {
    let mut rates = ClassRates {
        ct_double: vec![0.0; patterns.len()],
        anc_double: vec![0.0; patterns.len()],
        one_each: vec![0.0; patterns.len()],
    };
    for event in events {
        let output = evolve(&event.input, circuit)?;
        let slot = match event.class {
            EmissionClass::CtDouble => &mut rates.ct_double,
            EmissionClass::AncDouble => &mut rates.anc_double,
            EmissionClass::OneEach => &mut rates.one_each,
        };
        for (i, pattern) in patterns.iter().enumerate() {
            let (p, _) = project_pattern(&output, pattern)?;
            slot[i] += event.weight * p;
        }
    }
    Ok(rates)
}

/// Cross-source two-photon interference visibility.
///
/// Simulates the interference experiment: one photon from each source,
/// both projected to H, meeting at a 50:50 splitter. The coincidence rate is
/// compared against the fully distinguishable case (infinite relative delay,
/// overlap 0) and `V = (C_max − C_min)/C_max`, which for pure wavepackets
/// equals the squared overlap.
pub fn hom_visibility(d: &DistinguishabilityModel) -> Result<f64> {
    d.validate()?;
    let c_min = hom_coincidence_probability(d.cross_overlap)?;
    let c_max = hom_coincidence_probability(0.0)?;
    Ok((c_max - c_min) / c_max)
}

/// Coincidence probability of the two-source interference experiment at a
/// given squared overlap.
pub fn hom_coincidence_probability(overlap: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&overlap) || !overlap.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "overlap must be in [0, 1], got {overlap}"
        )));
    }
    // Two spatial modes x two internal labels; H polarization only.
    let s = 1.0 / 2.0f64.sqrt();
    let mut m = nalgebra::DMatrix::<Complex64>::zeros(4, 4);
    for internal in 0..2 {
        let in1 = internal;
        let in2 = 2 + internal;
        m[(in1, in1)] = c(s, 0.0);
        m[(in2, in2)] = c(s, 0.0);
        m[(in1, in2)] = c(0.0, s);
        m[(in2, in1)] = c(0.0, s);
    }
    let bs = ModeUnitary::new(m).expect("splitter is unitary");
    let state = PureState::vacuum(4)
        .apply_creation(&[(0, c(1.0, 0.0))])
        .apply_creation(&[
            (2, c(overlap.sqrt(), 0.0)),
            (3, c((1.0 - overlap).sqrt(), 0.0)),
        ]);
    let out = evolve(&state, &bs)?;
    let pattern = DetectionPattern::new(vec![(vec![0, 1], 1), (vec![2, 3], 1)]);
    Ok(project_pattern(&out, &pattern)?.0)
}

/// Same-source double-pair background of the interference experiment: two
/// identical photons entering one splitter port produce a coincidence with
/// probability 1/2, independent of any delay.
pub fn hom_double_pair_coincidence() -> Result<f64> {
    let s = 1.0 / 2.0f64.sqrt();
    let m = nalgebra::DMatrix::from_row_slice(
        2,
        2,
        &[c(s, 0.0), c(0.0, s), c(0.0, s), c(s, 0.0)],
    );
    let bs = ModeUnitary::new(m).expect("splitter is unitary");
    let state = PureState::vacuum(2)
        .apply_creation(&[(0, c(1.0, 0.0))])
        .apply_creation(&[(0, c(1.0, 0.0))])
        .normalized();
    let out = evolve(&state, &bs)?;
    let pattern = DetectionPattern::new(vec![(vec![0], 1), (vec![1], 1)]);
    Ok(project_pattern(&out, &pattern)?.0)
}

/// Interference-scan point including double-pair background, without
/// noise subtraction: signal weight `p_ct·p_anc`, background weight from
/// each source's double emission.
pub fn hom_raw_coincidence(
    overlap: f64,
    ct: &SourceConfig,
    anc: &SourceConfig,
) -> Result<f64> {
    let signal = hom_coincidence_probability(overlap)?;
    let background = hom_double_pair_coincidence()?;
    // second-order weight factors for the two sources' double emissions
    let space = ModeSpace::new(1);
    let mut bg_weight = 0.0;
    for (cfg, modes) in [
        (ct, (Spatial::C, Spatial::T)),
        (anc, (Spatial::A1, Spatial::A2)),
    ] {
        for member in ancilla_ensemble(cfg.state_fidelity) {
            let (_, factor) = second_order_pair_state(&space, modes, &member.psi, &[1.0]);
            bg_weight += member.weight * factor * cfg.pair_probability.powi(2);
        }
    }
    let signal_weight = ct.pair_probability * anc.pair_probability;
    Ok(signal_weight * signal + bg_weight * background)
}

/// Visibility of the raw (unsubtracted) interference scan.
pub fn hom_raw_visibility(
    d: &DistinguishabilityModel,
    ct: &SourceConfig,
    anc: &SourceConfig,
) -> Result<f64> {
    let c_min = hom_raw_coincidence(d.cross_overlap, ct, anc)?;
    let c_max = hom_raw_coincidence(0.0, ct, anc)?;
    Ok((c_max - c_min) / c_max)
}

/// Convenience: noise-model pieces for a [`NoiseConfig`] with equal pair
/// probabilities and an ideal control-target source.
pub fn default_sources(noise: &NoiseConfig, pair_probability: f64) -> (SourceConfig, SourceConfig, DistinguishabilityModel) {
    (
        SourceConfig {
            pair_probability,
            state_fidelity: 1.0,
        },
        SourceConfig {
            pair_probability,
            state_fidelity: noise.ancilla_fidelity,
        },
        DistinguishabilityModel {
            cross_overlap: noise.cross_overlap,
        },
    )
}
