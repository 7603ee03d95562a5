//! End-to-end simulated experiments: rate tables for the three emission
//! classes, Poissonian count generation, blocked-source subtraction,
//! feed-forward bookkeeping and per-branch tomography.
//!
//! The control-target photons pass preparation optics (a projection and a
//! rotation) before the chip, so the prepared states entering the gate are
//! `ψ⊗φ` for single emission and `|2ψ⟩_c|2φ⟩_t` for double emission. For a
//! singlet-type source the preparation transmits any single pair with
//! probability 1/2 and any double pair with probability 1/3 regardless of
//! the prepared polarizations, so the class weights below carry fixed
//! factors 1/2 (one-each) and 3/4·1/3 = 1/4 (control-target doubles)
//! relative to the raw emission probabilities.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::elements::MeasBasis;
use crate::error::{Error, Result};
use crate::fock::{evolve, project_pattern, reduce_to_qubits, PureState};
use crate::modes::{ModeSpace, Polarization, Spatial};
use crate::protocol::{
    ancilla_ensemble, apply_feedforward, branch_bell_state, circuit_with_herald_analyzer,
    gate_input, herald_pattern, run_gate, Ancilla1Result, Ancilla2Result, NoiseConfig, QubitPair,
    HERALD_OUTCOMES, STANDARD_FEED_FORWARD,
};
use crate::qubit::{BellState, TwoQubitDensity};
use crate::source::{second_order_pair_state, EmissionClass, EmissionEvent};
use crate::stats::{monte_carlo, noise_subtract, poisson_draw, CountRecord};
use crate::tomography::{
    all_settings, compensate_local_unitaries, fidelity, mle_reconstruct, MeasurementSetting,
    SettingCounts, OUTCOME_LABELS,
};

/// Conversion from emission probabilities to detected four-fold rates.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RateModel {
    /// Pair probability per pulse, control-target source.
    pub pair_probability_ct: f64,
    /// Pair probability per pulse, ancilla source.
    pub pair_probability_anc: f64,
    /// Pump pulse rate in Hz.
    pub pulse_rate_hz: f64,
    /// Uniform per-mode transmission; four-folds scale with its 4th power.
    pub mode_transmission: f64,
}

impl Default for RateModel {
    fn default() -> Self {
        // Defaults put the subtracted four-fold rate at the 100 mHz scale.
        RateModel {
            pair_probability_ct: 0.002,
            pair_probability_anc: 0.002,
            pulse_rate_hz: 8.0e7,
            mode_transmission: 0.2,
        }
    }
}

impl RateModel {
    pub fn validate(&self) -> Result<()> {
        for (name, v, hi) in [
            ("pair_probability_ct", self.pair_probability_ct, 0.1),
            ("pair_probability_anc", self.pair_probability_anc, 0.1),
            ("mode_transmission", self.mode_transmission, 1.0),
        ] {
            if !(0.0..=hi).contains(&v) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be in [0, {hi}], got {v}"
                )));
            }
        }
        if self.pulse_rate_hz <= 0.0 || !self.pulse_rate_hz.is_finite() {
            return Err(Error::InvalidParameter(
                "pulse_rate_hz must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Detected-rate prefactor for a four-photon coincidence.
    pub fn four_fold_scale(&self) -> f64 {
        self.pulse_rate_hz * self.mode_transmission.powi(4)
    }
}

/// The four-photon event classes entering the gate for a prepared input.
pub fn prepared_events(
    pair: &QubitPair,
    noise: &NoiseConfig,
    rates: &RateModel,
) -> Result<Vec<EmissionEvent>> {
    noise.validate()?;
    rates.validate()?;
    let space = ModeSpace::new(noise.n_internal());
    let wavepacket = noise.ancilla_wavepacket();
    let mut events = Vec::new();

    // one pair from each source, prepared
    let one_each_weight = 0.5 * rates.pair_probability_ct * rates.pair_probability_anc;
    for member in ancilla_ensemble(noise.ancilla_fidelity) {
        events.push(EmissionEvent {
            class: EmissionClass::OneEach,
            weight: one_each_weight * member.weight,
            input: gate_input(&space, pair, &member.psi, &wavepacket),
        });
    }

    // double emission from the control-target source, prepared: both control
    // photons in ψ, both target photons in φ
    let (alpha, beta) = pair.control();
    let (gamma, delta) = pair.target();
    let control_op = vec![
        (space.index_of(Spatial::C, Polarization::H, 0), alpha),
        (space.index_of(Spatial::C, Polarization::V, 0), beta),
    ];
    let target_op = vec![
        (space.index_of(Spatial::T, Polarization::H, 0), gamma),
        (space.index_of(Spatial::T, Polarization::V, 0), delta),
    ];
    let ct_double = PureState::vacuum(space.dim())
        .apply_creation(&control_op)
        .apply_creation(&control_op)
        .apply_creation(&target_op)
        .apply_creation(&target_op)
        .normalized();
    events.push(EmissionEvent {
        class: EmissionClass::CtDouble,
        weight: 0.25 * rates.pair_probability_ct.powi(2),
        input: ct_double,
    });

    // double emission from the ancilla source (no preparation in its path)
    for member in ancilla_ensemble(noise.ancilla_fidelity) {
        let (state, factor) =
            second_order_pair_state(&space, (Spatial::A1, Spatial::A2), &member.psi, &wavepacket);
        events.push(EmissionEvent {
            class: EmissionClass::AncDouble,
            weight: member.weight * factor * rates.pair_probability_anc.powi(2),
            input: state,
        });
    }
    Ok(events)
}

/// Branch labels used in count records, in [`HERALD_OUTCOMES`] order.
pub const BRANCH_LABELS: [&str; 4] = ["DH", "DV", "AH", "AV"];

pub fn branch_label(a1: Ancilla1Result, a2: Ancilla2Result) -> &'static str {
    let idx = HERALD_OUTCOMES
        .iter()
        .position(|(b1, b2)| *b1 == a1 && *b2 == a2)
        .expect("branch exists");
    BRANCH_LABELS[idx]
}

/// Weighted four-fold yield of one emission class in one herald branch: the
/// summed `weight·P(herald)` and the correspondingly weighted control-target
/// density matrix. Outcome rates for any analyzer setting follow as Born
/// probabilities, so each event only has to be evolved once.
#[derive(Debug, Clone)]
pub struct BranchYield {
    pub weighted_probability: f64,
    pub weighted_rho: TwoQubitDensity,
}

impl BranchYield {
    fn zero() -> BranchYield {
        BranchYield {
            weighted_probability: 0.0,
            weighted_rho: TwoQubitDensity::zeros(),
        }
    }

    /// Weighted probability of one measurement outcome of this branch.
    pub fn outcome_rate(&self, projector: &nalgebra::Matrix4<num_complex::Complex64>) -> f64 {
        (projector * self.weighted_rho.matrix()).trace().re.max(0.0)
    }
}

/// Per-class, per-branch four-fold yields of an event ensemble.
pub struct ClassYields {
    /// `[class][branch]` with classes ordered ct-double, anc-double,
    /// one-each and branches in [`HERALD_OUTCOMES`] order.
    pub by_class: [[BranchYield; 4]; 3],
}

fn class_slot(class: EmissionClass) -> usize {
    match class {
        EmissionClass::CtDouble => 0,
        EmissionClass::AncDouble => 1,
        EmissionClass::OneEach => 2,
    }
}

impl ClassYields {
    pub fn branch(&self, class: EmissionClass, branch_slot: usize) -> &BranchYield {
        &self.by_class[class_slot(class)][branch_slot]
    }

    /// Raw (all classes), blocked-control-target (ancilla doubles only) and
    /// blocked-ancilla (control-target doubles only) outcome rates.
    pub fn rates_for(
        &self,
        branch_slot: usize,
        projector: &nalgebra::Matrix4<num_complex::Complex64>,
    ) -> RawBlocked {
        let ct = self.by_class[0][branch_slot].outcome_rate(projector);
        let anc = self.by_class[1][branch_slot].outcome_rate(projector);
        let one = self.by_class[2][branch_slot].outcome_rate(projector);
        RawBlocked {
            raw: ct + anc + one,
            blocked_ct: anc,
            blocked_anc: ct,
            one_each: one,
        }
    }

    pub fn class_total(&self, class: EmissionClass) -> f64 {
        self.by_class[class_slot(class)]
            .iter()
            .map(|y| y.weighted_probability)
            .sum()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RawBlocked {
    pub raw: f64,
    pub blocked_ct: f64,
    pub blocked_anc: f64,
    pub one_each: f64,
}

/// Evolve every event through the interferometer once and collect the
/// herald-branch yields per emission class.
pub fn class_yields(
    events: &[EmissionEvent],
    space: &ModeSpace,
    pbs_leakage: f64,
) -> Result<ClassYields> {
    let circuit = circuit_with_herald_analyzer(space, pbs_leakage);
    let mut by_class: [[BranchYield; 4]; 3] = std::array::from_fn(|_| {
        [
            BranchYield::zero(),
            BranchYield::zero(),
            BranchYield::zero(),
            BranchYield::zero(),
        ]
    });
    for event in events {
        let output = evolve(&event.input, &circuit)?;
        for (slot, (a1, a2)) in HERALD_OUTCOMES.iter().enumerate() {
            let pattern = herald_pattern(space, *a1, *a2);
            let (p, conditional) = project_pattern(&output, &pattern)?;
            if p <= 0.0 {
                continue;
            }
            let rho = reduce_to_qubits(&conditional, space, [Spatial::C, Spatial::T])?;
            let yield_ = &mut by_class[class_slot(event.class)][slot];
            yield_.weighted_probability += event.weight * p;
            yield_.weighted_rho.add_scaled(&rho, event.weight * p);
        }
    }
    Ok(ClassYields { by_class })
}

/// Projectors of one analyzer setting rotated into the measured bases
/// (outcome order 00, 01, 10, 11).
fn setting_projectors(
    setting: &MeasurementSetting,
) -> [nalgebra::Matrix4<num_complex::Complex64>; 4] {
    crate::tomography::projectors(setting)
}

/// Simulated truth-table experiment: analytic table, sampled counts with
/// blocked-source runs, the noise-subtracted estimate and its Monte-Carlo
/// error.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TruthTableExperiment {
    /// Exact herald-conditioned table with feed-forward (no counting noise,
    /// double-pair classes exactly subtracted).
    pub analytic_table: [[f64; 4]; 4],
    pub analytic_overlap: f64,
    /// Sampled count records; setting_q1 is the input label, setting_q2 the
    /// herald branch.
    pub records: Vec<CountRecord>,
    /// Table estimated from the subtracted counts.
    pub estimated_table: [[f64; 4]; 4],
    pub estimated_overlap: f64,
    /// Monte-Carlo standard deviations.
    pub overlap_std: f64,
    pub table_std: [[f64; 4]; 4],
    pub mc_rejected: usize,
}

pub const INPUT_LABELS: [&str; 4] = ["HH", "HV", "VH", "VV"];

pub fn truth_table_experiment(
    noise: &NoiseConfig,
    rates: &RateModel,
    integration_time_s: f64,
    mc_samples: usize,
    seed: u64,
) -> Result<TruthTableExperiment> {
    let analytic_table = crate::protocol::truth_table(noise)?;
    let analytic_overlap =
        crate::protocol::truth_table_overlap(&analytic_table, &crate::protocol::cnot_ideal_table());

    let space = ModeSpace::new(noise.n_internal());
    let scale = rates.four_fold_scale();
    let computational = MeasurementSetting {
        q1: MeasBasis::HV,
        q2: MeasBasis::HV,
    };
    let projectors = setting_projectors(&computational);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::with_capacity(64);
    for (input_idx, pair) in QubitPair::all_computational().iter().enumerate() {
        let events = prepared_events(pair, noise, rates)?;
        let yields = class_yields(&events, &space, noise.pbs_leakage)?;
        for (slot, _) in HERALD_OUTCOMES.iter().enumerate() {
            for (outcome, projector) in projectors.iter().enumerate() {
                let r = yields.rates_for(slot, projector);
                let mean = |rate: f64| rate * scale * integration_time_s;
                records.push(CountRecord::new(
                    INPUT_LABELS[input_idx],
                    BRANCH_LABELS[slot],
                    OUTCOME_LABELS[outcome],
                    poisson_draw(mean(r.raw), &mut rng),
                    poisson_draw(mean(r.blocked_ct), &mut rng),
                    poisson_draw(mean(r.blocked_anc), &mut rng),
                    integration_time_s,
                ));
            }
        }
    }

    let estimator = |recs: &[CountRecord]| -> Result<Vec<f64>> {
        let (table, overlap) = truth_table_from_records(recs)?;
        let mut out = Vec::with_capacity(17);
        out.push(overlap);
        out.extend(table.iter().flatten());
        Ok(out)
    };
    let point = estimator(&records)?;
    let mc = monte_carlo(&records, estimator, mc_samples, seed)?;

    let unflatten = |v: &[f64]| -> [[f64; 4]; 4] {
        let mut t = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                t[i][j] = v[1 + 4 * i + j];
            }
        }
        t
    };
    Ok(TruthTableExperiment {
        analytic_table,
        analytic_overlap,
        records,
        estimated_table: unflatten(&point),
        estimated_overlap: point[0],
        overlap_std: mc.std[0],
        table_std: unflatten(&[vec![0.0], mc.std[1..].to_vec()].concat()),
        mc_rejected: mc.n_rejected,
    })
}

/// Noise-subtracted, feed-forward-corrected table from truth-table records.
///
/// Each record's branch and outcome are relabelled through the standard
/// feed-forward rule (a V click on the second ancilla flips the recorded
/// target bit; the control correction is diagonal and leaves computational
/// outcomes unchanged), then rows are normalized. Rows whose subtracted
/// total is not positive fail the estimate.
pub fn truth_table_from_records(records: &[CountRecord]) -> Result<([[f64; 4]; 4], f64)> {
    let mut table = [[0.0f64; 4]; 4];
    for record in records {
        let input = INPUT_LABELS
            .iter()
            .position(|l| *l == record.setting_q1)
            .ok_or_else(|| Error::Estimator(format!("unknown input {}", record.setting_q1)))?;
        let branch = BRANCH_LABELS
            .iter()
            .position(|l| *l == record.setting_q2)
            .ok_or_else(|| Error::Estimator(format!("unknown branch {}", record.setting_q2)))?;
        let outcome = OUTCOME_LABELS
            .iter()
            .position(|l| *l == record.outcome)
            .ok_or_else(|| Error::Estimator(format!("unknown outcome {}", record.outcome)))?;
        let flip_target = HERALD_OUTCOMES[branch].1 == Ancilla2Result::V;
        let corrected = if flip_target { outcome ^ 0b01 } else { outcome };
        table[input][corrected] += noise_subtract(record);
    }
    for row in &mut table {
        let total: f64 = row.iter().sum();
        if total <= 0.0 {
            return Err(Error::Estimator(
                "subtracted row total is not positive".into(),
            ));
        }
        for v in row.iter_mut() {
            *v /= total;
        }
    }
    let overlap =
        crate::protocol::truth_table_overlap(&table, &crate::protocol::cnot_ideal_table());
    Ok((table, overlap))
}

/// Tomography of one herald branch of the |D,H⟩ run.
#[derive(Debug, Clone)]
pub struct BranchTomography {
    pub ancilla1: Ancilla1Result,
    pub ancilla2: Ancilla2Result,
    /// Bell state this branch produces (no feed-forward applied).
    pub target: BellState,
    /// 36 sampled count records in the CSV exchange format.
    pub records: Vec<CountRecord>,
    /// Reconstruction from the noise-subtracted counts.
    pub rho: TwoQubitDensity,
    /// After local-phase compensation toward the target.
    pub rho_compensated: TwoQubitDensity,
    pub compensation_phases: (f64, f64),
    pub fidelity: f64,
    pub fidelity_std: f64,
    pub mc_rejected: usize,
    /// Fidelity of the exact branch state (no counting noise).
    pub analytic_fidelity: f64,
    pub mle_converged: bool,
}

#[derive(Debug, Clone)]
pub struct BellTomoExperiment {
    pub branches: Vec<BranchTomography>,
}

/// Simulate the |D,H⟩ entangling run: per-branch count tables over the nine
/// analyzer settings, maximum-likelihood reconstruction of each branch (no
/// feed-forward), local-phase compensation and Monte-Carlo errors.
pub fn bell_tomo_experiment(
    noise: &NoiseConfig,
    rates: &RateModel,
    integration_time_s: f64,
    mc_samples: usize,
    seed: u64,
) -> Result<BellTomoExperiment> {
    let pair = QubitPair::d_h();
    let space = ModeSpace::new(noise.n_internal());
    let events = prepared_events(&pair, noise, rates)?;
    let scale = rates.four_fold_scale();

    // exact branch states for the analytic fidelities
    let exact_outcomes = run_gate(&pair, noise)?;

    // one evolution per event; outcome rates are Born probabilities
    let settings = all_settings();
    let yields = class_yields(&events, &space, noise.pbs_leakage)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut branches = Vec::with_capacity(4);
    for (slot, (a1, a2)) in HERALD_OUTCOMES.iter().enumerate() {
        let mut records = Vec::with_capacity(36);
        for setting in settings.iter() {
            let projectors = setting_projectors(setting);
            for (outcome, projector) in projectors.iter().enumerate() {
                let r = yields.rates_for(slot, projector);
                let mean = |rate: f64| rate * scale * integration_time_s;
                records.push(CountRecord::new(
                    setting.q1.letter(),
                    setting.q2.letter(),
                    OUTCOME_LABELS[outcome],
                    poisson_draw(mean(r.raw), &mut rng),
                    poisson_draw(mean(r.blocked_ct), &mut rng),
                    poisson_draw(mean(r.blocked_anc), &mut rng),
                    integration_time_s,
                ));
            }
        }
        let target = branch_bell_state(*a1, *a2);
        let estimator = |recs: &[CountRecord]| -> Result<Vec<f64>> {
            let counts = setting_counts_from_records(recs)?;
            let mle = mle_reconstruct(&counts)?;
            let (compensated, _) = compensate_local_unitaries(&mle.rho, &target.ket());
            Ok(vec![fidelity(&compensated, &target.ket())])
        };
        let counts = setting_counts_from_records(&records)?;
        let mle = mle_reconstruct(&counts)?;
        let (rho_compensated, compensation_phases) =
            compensate_local_unitaries(&mle.rho, &target.ket());
        let branch_fidelity = fidelity(&rho_compensated, &target.ket());
        let mc = monte_carlo(&records, estimator, mc_samples, seed ^ (slot as u64 + 1))?;
        branches.push(BranchTomography {
            ancilla1: *a1,
            ancilla2: *a2,
            target,
            records,
            rho: mle.rho,
            rho_compensated,
            compensation_phases,
            fidelity: branch_fidelity,
            fidelity_std: mc.std[0],
            mc_rejected: mc.n_rejected,
            analytic_fidelity: fidelity(&exact_outcomes[slot].conditional, &target.ket()),
            mle_converged: mle.converged,
        });
    }
    Ok(BellTomoExperiment { branches })
}

/// Aggregate count records (CSV layout) into the 9x4 tomography matrix of
/// noise-subtracted values, in [`all_settings`] order.
pub fn setting_counts_from_records(records: &[CountRecord]) -> Result<SettingCounts> {
    let settings = all_settings();
    let mut counts = [[0.0; 4]; 9];
    let mut seen = [[false; 4]; 9];
    for record in records {
        let q1 = MeasBasis::parse(&record.setting_q1).ok_or_else(|| Error::Estimator(
            format!("unknown analyzer setting {:?}", record.setting_q1),
        ))?;
        let q2 = MeasBasis::parse(&record.setting_q2).ok_or_else(|| Error::Estimator(
            format!("unknown analyzer setting {:?}", record.setting_q2),
        ))?;
        let s = settings
            .iter()
            .position(|x| x.q1 == q1 && x.q2 == q2)
            .expect("all basis pairs are enumerated");
        let o = OUTCOME_LABELS
            .iter()
            .position(|l| *l == record.outcome)
            .ok_or_else(|| Error::Estimator(format!("unknown outcome {:?}", record.outcome)))?;
        counts[s][o] += noise_subtract(record);
        seen[s][o] = true;
    }
    if seen.iter().flatten().any(|s| !s) {
        return Err(Error::Estimator(
            "count table does not cover all 9 settings x 4 outcomes".into(),
        ));
    }
    Ok(counts)
}

/// One point of the interference scan.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HomPoint {
    pub overlap: f64,
    /// Coincidence probability of the signal pairs alone.
    pub signal: f64,
    /// Weighted coincidence rate including double-pair background
    /// (arbitrary units of the signal weight).
    pub raw: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HomScan {
    pub points: Vec<HomPoint>,
    /// Visibility after noise subtraction, evaluated at the configured
    /// overlap; equals the overlap itself for pure wavepackets.
    pub v_subtracted: f64,
    /// Visibility without subtraction, degraded by double-pair emission.
    pub v_raw: f64,
}

pub fn hom_scan(noise: &NoiseConfig, rates: &RateModel, n_points: usize) -> Result<HomScan> {
    if n_points < 2 {
        return Err(Error::InvalidParameter("scan needs at least 2 points".into()));
    }
    let d = crate::source::DistinguishabilityModel {
        cross_overlap: noise.cross_overlap,
    };
    let (ct, anc, _) = crate::source::default_sources(noise, rates.pair_probability_ct);
    let anc = crate::source::SourceConfig {
        pair_probability: rates.pair_probability_anc,
        ..anc
    };
    let mut points = Vec::with_capacity(n_points);
    for i in 0..n_points {
        let overlap = i as f64 / (n_points - 1) as f64;
        points.push(HomPoint {
            overlap,
            signal: crate::source::hom_coincidence_probability(overlap)?,
            raw: crate::source::hom_raw_coincidence(overlap, &ct, &anc)?,
        });
    }
    Ok(HomScan {
        points,
        v_subtracted: crate::source::hom_visibility(&d)?,
        v_raw: crate::source::hom_raw_visibility(&d, &ct, &anc)?,
    })
}

/// Feed-forward-corrected mean output state of an ideal-input run; used by
/// the regression tests and the command-line report.
pub fn corrected_mean_state(pair: &QubitPair, noise: &NoiseConfig) -> Result<TwoQubitDensity> {
    let outcomes = run_gate(pair, noise)?;
    let total: f64 = outcomes.iter().map(|o| o.probability).sum();
    let mut mean = TwoQubitDensity::zeros();
    for o in &outcomes {
        let corrected = apply_feedforward(o, &STANDARD_FEED_FORWARD);
        mean.add_scaled(&corrected, o.probability / total);
    }
    Ok(mean)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn prepared_event_weights() {
        let rates = RateModel::default();
        let events =
            prepared_events(&QubitPair::d_h(), &NoiseConfig::IDEAL, &rates).unwrap();
        assert_eq!(events.len(), 3);
        let p = rates.pair_probability_ct;
        let by_class = |class: EmissionClass| {
            events
                .iter()
                .filter(|e| e.class == class)
                .map(|e| e.weight)
                .sum::<f64>()
        };
        assert_abs_diff_eq!(by_class(EmissionClass::OneEach), 0.5 * p * p, epsilon = 1e-18);
        assert_abs_diff_eq!(by_class(EmissionClass::CtDouble), 0.25 * p * p, epsilon = 1e-18);
        assert_abs_diff_eq!(by_class(EmissionClass::AncDouble), 0.75 * p * p, epsilon = 1e-18);
    }

    #[test]
    fn computational_ct_doubles_never_herald() {
        // definite-polarization control photons bunch at the first splitter
        let rates = RateModel::default();
        let space = ModeSpace::new(2);
        for pair in QubitPair::all_computational() {
            let events = prepared_events(&pair, &NoiseConfig::CALIBRATED, &rates).unwrap();
            let yields = class_yields(&events, &space, 0.0).unwrap();
            assert_abs_diff_eq!(yields.class_total(EmissionClass::CtDouble), 0.0, epsilon = 1e-18);
            assert!(yields.class_total(EmissionClass::AncDouble) > 0.0);
        }
    }

    #[test]
    fn superposition_input_ct_doubles_do_herald() {
        let rates = RateModel::default();
        let space = ModeSpace::new(1);
        let events = prepared_events(&QubitPair::d_h(), &NoiseConfig::IDEAL, &rates).unwrap();
        let yields = class_yields(&events, &space, 0.0).unwrap();
        assert!(yields.class_total(EmissionClass::CtDouble) > 0.0);
    }

    #[test]
    fn subtracted_table_matches_protocol_table() {
        // The rate pipeline with exact subtraction must reproduce the pure
        // gate-level table.
        let noise = NoiseConfig {
            cross_overlap: 0.9,
            ancilla_fidelity: 0.97,
            pbs_leakage: 0.0,
        };
        let rates = RateModel::default();
        let space = ModeSpace::new(noise.n_internal());
        let expected = crate::protocol::truth_table(&noise).unwrap();
        let computational = MeasurementSetting {
            q1: MeasBasis::HV,
            q2: MeasBasis::HV,
        };
        let projectors = setting_projectors(&computational);
        for (i, pair) in QubitPair::all_computational().iter().enumerate() {
            let events = prepared_events(&pair, &noise, &rates).unwrap();
            let yields = class_yields(&events, &space, noise.pbs_leakage).unwrap();
            // subtracted = one_each; aggregate with feed-forward
            let mut row = [0.0f64; 4];
            for (slot, (_, a2)) in HERALD_OUTCOMES.iter().enumerate() {
                for (outcome, projector) in projectors.iter().enumerate() {
                    let corrected = if *a2 == Ancilla2Result::V {
                        outcome ^ 0b01
                    } else {
                        outcome
                    };
                    row[corrected] += yields.rates_for(slot, projector).one_each;
                }
            }
            let total: f64 = row.iter().sum();
            for (j, v) in row.iter().enumerate() {
                assert_abs_diff_eq!(v / total, expected[i][j], epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn truth_table_experiment_ideal_short_run() {
        let exp = truth_table_experiment(
            &NoiseConfig::IDEAL,
            &RateModel::default(),
            3600.0,
            50,
            42,
        )
        .unwrap();
        assert_abs_diff_eq!(exp.analytic_overlap, 1.0, epsilon = 1e-9);
        assert!(exp.estimated_overlap > 0.97, "overlap {}", exp.estimated_overlap);
        assert_eq!(exp.records.len(), 64);
        // determinism
        let again = truth_table_experiment(
            &NoiseConfig::IDEAL,
            &RateModel::default(),
            3600.0,
            50,
            42,
        )
        .unwrap();
        assert_eq!(exp.records, again.records);
        assert_eq!(exp.estimated_overlap, again.estimated_overlap);
        assert_eq!(exp.overlap_std, again.overlap_std);
    }

    #[test]
    fn hom_scan_visibilities() {
        let scan = hom_scan(&NoiseConfig::CALIBRATED, &RateModel::default(), 5).unwrap();
        assert_abs_diff_eq!(scan.v_subtracted, 0.88, epsilon = 1e-9);
        assert!(scan.v_raw < scan.v_subtracted);
        assert_eq!(scan.points.len(), 5);
        assert_abs_diff_eq!(scan.points[0].overlap, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(scan.points[4].overlap, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn corrected_mean_state_is_cnot_output() {
        let pair = QubitPair::d_h();
        let mean = corrected_mean_state(&pair, &NoiseConfig::IDEAL).unwrap();
        assert_abs_diff_eq!(
            mean.fidelity(&BellState::PhiPlus.ket()),
            1.0,
            epsilon = 1e-9
        );
    }
}
