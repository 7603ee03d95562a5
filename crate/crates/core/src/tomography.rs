//! Two-qubit state tomography from the nine mutually unbiased analyzer
//! settings, with maximum-likelihood reconstruction and local-phase
//! compensation.
//!
//! The reconstruction is the iterative fixed-point scheme
//! `ρ → R(ρ) ρ R(ρ) / tr(...)` with `R(ρ) = Σ (f_j / p_j(ρ)) Π_j`. Each full
//! step that would lower the likelihood is replaced by a diluted step
//! `(I + λR) ρ (I + λR)` with λ halved until the likelihood improves, so the
//! likelihood is non-decreasing and every iterate stays physical.

use nalgebra::Matrix4;
use num_complex::Complex64;

use crate::elements::MeasBasis;
use crate::error::{Error, Result};
use crate::qubit::{ket_a, ket_d, ket_h, ket_l, ket_r, ket_v, kron_ket, Ket2, Ket4, TwoQubitDensity};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// One two-photon analyzer setting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MeasurementSetting {
    pub q1: MeasBasis,
    pub q2: MeasBasis,
}

/// The nine settings in a fixed order (H, D, L per qubit).
pub fn all_settings() -> [MeasurementSetting; 9] {
    let mut settings = [MeasurementSetting {
        q1: MeasBasis::HV,
        q2: MeasBasis::HV,
    }; 9];
    let mut k = 0;
    for q1 in MeasBasis::ALL {
        for q2 in MeasBasis::ALL {
            settings[k] = MeasurementSetting { q1, q2 };
            k += 1;
        }
    }
    settings
}

fn basis_kets(basis: MeasBasis) -> [Ket2; 2] {
    match basis {
        MeasBasis::HV => [ket_h(), ket_v()],
        MeasBasis::DA => [ket_d(), ket_a()],
        MeasBasis::LR => [ket_l(), ket_r()],
    }
}

/// Outcome labels in the CSV exchange format, in projector order.
pub const OUTCOME_LABELS: [&str; 4] = ["00", "01", "10", "11"];

/// The four rank-1 projectors of one setting, outcome order 00, 01, 10, 11
/// (0 = first basis state of the analyzer). They sum to the identity.
pub fn projectors(setting: &MeasurementSetting) -> [Matrix4<Complex64>; 4] {
    let k1 = basis_kets(setting.q1);
    let k2 = basis_kets(setting.q2);
    let mut out = [Matrix4::zeros(); 4];
    for o1 in 0..2 {
        for o2 in 0..2 {
            let ket: Ket4 = kron_ket(&k1[o1], &k2[o2]);
            out[2 * o1 + o2] = ket * ket.adjoint();
        }
    }
    out
}

/// Counts for the nine settings (rows, in [`all_settings`] order) and four
/// outcomes (columns, in projector order). Post-subtraction values are
/// allowed to be fractional and negative.
pub type SettingCounts = [[f64; 4]; 9];

/// Result of a maximum-likelihood reconstruction.
#[derive(Debug, Clone)]
pub struct MleResult {
    pub rho: TwoQubitDensity,
    pub iterations: usize,
    pub converged: bool,
    /// Negative input counts were clamped to zero before the fit.
    pub clamped_negative: bool,
    pub log_likelihood: f64,
}

/// Convergence threshold on the log-likelihood improvement.
pub const MLE_TOLERANCE: f64 = 1e-10;
/// Iteration cap; hitting it returns the best iterate with `converged: false`.
pub const MLE_MAX_ITERATIONS: usize = 100_000;

/// Maximum-likelihood reconstruction of a two-qubit state from the 36
/// counts. Counts are treated as multinomial per setting (uniform
/// integration time); the output is always Hermitian, positive
/// semidefinite and unit trace.
pub fn mle_reconstruct(counts: &SettingCounts) -> Result<MleResult> {
    let settings = all_settings();
    let mut clamped_negative = false;
    let mut f = [[0.0f64; 4]; 9];
    let mut total = 0.0;
    for s in 0..9 {
        for o in 0..4 {
            let v = counts[s][o];
            if v < 0.0 {
                clamped_negative = true;
            } else {
                f[s][o] = v;
                total += v;
            }
        }
    }
    if total <= 0.0 {
        return Err(Error::EmptyCounts);
    }
    for row in &mut f {
        for v in row.iter_mut() {
            *v /= total;
        }
    }
    // Rank-1 projectors as kets: tr(Π ρ) = ⟨k|ρ|k⟩. Flat buffers keep the
    // iteration cheap; this loop dominates Monte-Carlo error propagation.
    let mut kets: Vec<([Complex64; 4], f64)> = Vec::with_capacity(36);
    for (s, setting) in settings.iter().enumerate() {
        let k1 = basis_kets(setting.q1);
        let k2 = basis_kets(setting.q2);
        for o1 in 0..2 {
            for o2 in 0..2 {
                let ket = kron_ket(&k1[o1], &k2[o2]);
                kets.push(([ket[0], ket[1], ket[2], ket[3]], f[s][2 * o1 + o2]));
            }
        }
    }
    type Flat = [Complex64; 16];
    let expectation = |rho: &Flat, ket: &[Complex64; 4]| -> f64 {
        let mut p = c(0.0, 0.0);
        for i in 0..4 {
            let mut row = c(0.0, 0.0);
            for j in 0..4 {
                row += rho[4 * i + j] * ket[j];
            }
            p += ket[i].conj() * row;
        }
        p.re
    };
    let log_likelihood = |rho: &Flat| -> f64 {
        kets.iter()
            .filter(|(_, freq)| *freq > 0.0)
            .map(|(ket, freq)| freq * expectation(rho, ket).max(1e-300).ln())
            .sum()
    };
    let r_operator = |rho: &Flat| -> Flat {
        let mut r = [c(0.0, 0.0); 16];
        for (ket, freq) in &kets {
            if *freq > 0.0 {
                let p = expectation(rho, ket).max(1e-12);
                let w = freq / p;
                for i in 0..4 {
                    let wi = ket[i] * w;
                    for j in 0..4 {
                        r[4 * i + j] += wi * ket[j].conj();
                    }
                }
            }
        }
        r
    };
    let matmul = |a: &Flat, b: &Flat| -> Flat {
        let mut m = [c(0.0, 0.0); 16];
        for i in 0..4 {
            for k in 0..4 {
                let aik = a[4 * i + k];
                if aik.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..4 {
                    m[4 * i + j] += aik * b[4 * k + j];
                }
            }
        }
        m
    };
    let normalized = |m: &Flat| -> Flat {
        let t = (m[0] + m[5] + m[10] + m[15]).re;
        let mut out = *m;
        for v in &mut out {
            *v /= t;
        }
        out
    };

    let mut rho: Flat = [c(0.0, 0.0); 16];
    for i in 0..4 {
        rho[4 * i + i] = c(0.25, 0.0);
    }
    let mut ll = log_likelihood(&rho);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < MLE_MAX_ITERATIONS {
        iterations += 1;
        let r = r_operator(&rho);
        let full = normalized(&matmul(&matmul(&r, &rho), &r));
        let full_ll = log_likelihood(&full);
        let (next, next_ll) = if full_ll + MLE_TOLERANCE >= ll {
            (full, full_ll)
        } else {
            // Diluted step: (I + λR) ρ (I + λR), λ halved on failure. Small
            // enough λ always improves the likelihood away from a fixed
            // point.
            let mut lambda = 0.5;
            let mut chosen = None;
            while lambda > 1e-8 {
                let mut m = r;
                for v in &mut m {
                    *v *= lambda;
                }
                for i in 0..4 {
                    m[4 * i + i] += c(1.0, 0.0);
                }
                let candidate = normalized(&matmul(&matmul(&m, &rho), &m));
                let cand_ll = log_likelihood(&candidate);
                if cand_ll > ll {
                    chosen = Some((candidate, cand_ll));
                    break;
                }
                lambda *= 0.5;
            }
            match chosen {
                Some(step) => step,
                None => {
                    // No direction improves: we are at the maximum.
                    converged = true;
                    break;
                }
            }
        };
        let improvement = next_ll - ll;
        rho = next;
        ll = next_ll;
        if improvement.abs() < MLE_TOLERANCE {
            converged = true;
            break;
        }
    }
    let rho_m = Matrix4::from_fn(|i, j| rho[4 * i + j]);
    Ok(MleResult {
        rho: TwoQubitDensity::new(rho_m).hermitized(),
        iterations,
        converged,
        clamped_negative,
        log_likelihood: ll,
    })
}

/// Exact outcome probabilities of a state, in [`SettingCounts`] layout and
/// normalized per setting. Useful for generating synthetic counts.
pub fn outcome_probabilities(rho: &TwoQubitDensity) -> SettingCounts {
    let mut out = [[0.0; 4]; 9];
    for (s, setting) in all_settings().iter().enumerate() {
        for (o, projector) in projectors(setting).iter().enumerate() {
            out[s][o] = (projector * rho.matrix()).trace().re.max(0.0);
        }
    }
    out
}

/// ⟨ψ|ρ|ψ⟩.
pub fn fidelity(rho: &TwoQubitDensity, target: &Ket4) -> f64 {
    rho.fidelity(target).clamp(0.0, 1.0)
}

/// Compensate unknown per-qubit H/V phase shifts (the form waveguide
/// birefringence takes) by conjugating with
/// `diag(1, e^{iφ1}) ⊗ diag(1, e^{iφ2})` chosen to maximize fidelity to the
/// target. Returns the rotated state and the phases; the fidelity never
/// decreases since the identity is among the candidates.
pub fn compensate_local_unitaries(
    rho: &TwoQubitDensity,
    target: &Ket4,
) -> (TwoQubitDensity, (f64, f64)) {
    // With U = diag(1, e^{iφ2}, e^{iφ1}, e^{i(φ1+φ2)}), matrix element (i,j)
    // of UρU† picks up e^{i(δ1φ1 + δ2φ2)} with δ = bit(i) − bit(j) per
    // qubit, so the fidelity is a 5-coefficient trigonometric polynomial:
    //   F = c00 + 2Re[e^{iφ1}c10 + e^{iφ2}c01 + e^{i(φ1+φ2)}c11
    //              + e^{i(φ1−φ2)}c1m]
    let mut c00 = 0.0;
    let mut c10 = c(0.0, 0.0);
    let mut c01 = c(0.0, 0.0);
    let mut c11 = c(0.0, 0.0);
    let mut c1m = c(0.0, 0.0);
    for i in 0..4usize {
        for j in 0..4usize {
            let m = target[i].conj() * rho.matrix()[(i, j)] * target[j];
            let d1 = (i >> 1) as i32 - (j >> 1) as i32;
            let d2 = (i & 1) as i32 - (j & 1) as i32;
            match (d1, d2) {
                (0, 0) => c00 += m.re,
                (1, 0) => c10 += m,
                (0, 1) => c01 += m,
                (1, 1) => c11 += m,
                (1, -1) => c1m += m,
                _ => {} // conjugate partners of the above
            }
        }
    }
    let fidelity_at = |phi1: f64, phi2: f64| -> f64 {
        let e1 = Complex64::from_polar(1.0, phi1);
        let e2 = Complex64::from_polar(1.0, phi2);
        c00 + 2.0 * (e1 * c10 + e2 * c01 + e1 * e2 * c11 + e1 * e2.conj() * c1m).re
    };
    // Multi-start grid, then exact coordinate ascent: with one phase fixed
    // the fidelity is const + 2Re(z e^{iφ}), maximized at φ = −arg(z).
    let mut best = (0.0, 0.0, fidelity_at(0.0, 0.0));
    let n_grid = 32;
    for i in 0..n_grid {
        for j in 0..n_grid {
            let phi1 = 2.0 * std::f64::consts::PI * i as f64 / n_grid as f64;
            let phi2 = 2.0 * std::f64::consts::PI * j as f64 / n_grid as f64;
            let f = fidelity_at(phi1, phi2);
            if f > best.2 {
                best = (phi1, phi2, f);
            }
        }
    }
    let (mut phi1, mut phi2, mut best_f) = best;
    for _ in 0..200 {
        let z1 = c10 + Complex64::from_polar(1.0, phi2) * c11
            + Complex64::from_polar(1.0, -phi2) * c1m;
        let cand1 = if z1.norm() > 0.0 { -z1.arg() } else { phi1 };
        if fidelity_at(cand1, phi2) > best_f {
            phi1 = cand1;
            best_f = fidelity_at(phi1, phi2);
        }
        let z2 = c01 + Complex64::from_polar(1.0, phi1) * c11
            + Complex64::from_polar(1.0, -phi1) * c1m.conj();
        let cand2 = if z2.norm() > 0.0 { -z2.arg() } else { phi2 };
        if fidelity_at(phi1, cand2) > best_f + 1e-15 {
            phi2 = cand2;
            best_f = fidelity_at(phi1, phi2);
        } else {
            break;
        }
    }
    (
        rho.conjugated(&phase_unitary(phi1, phi2)).hermitized(),
        (phi1, phi2),
    )
}

fn phase_unitary(phi1: f64, phi2: f64) -> Matrix4<Complex64> {
    let mut u = Matrix4::zeros();
    let e1 = Complex64::from_polar(1.0, phi1);
    let e2 = Complex64::from_polar(1.0, phi2);
    u[(0, 0)] = c(1.0, 0.0);
    u[(1, 1)] = e2;
    u[(2, 2)] = e1;
    u[(3, 3)] = e1 * e2;
    u
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qubit::{random_density_matrix, random_pure_state, BellState};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn counts_from_state(rho: &TwoQubitDensity, per_setting: f64) -> SettingCounts {
        let mut counts = outcome_probabilities(rho);
        for row in &mut counts {
            for v in row.iter_mut() {
                *v *= per_setting;
            }
        }
        counts
    }

    #[test]
    fn projectors_are_complete_and_match_basis_states() {
        for setting in all_settings() {
            let sum: Matrix4<Complex64> = projectors(&setting).iter().sum();
            assert!((sum - Matrix4::identity()).norm() < 1e-12);
        }
        // (DA, DA) outcome 00 is |DD⟩⟨DD|
        let setting = MeasurementSetting {
            q1: MeasBasis::DA,
            q2: MeasBasis::DA,
        };
        let dd = kron_ket(&ket_d(), &ket_d());
        let p00 = projectors(&setting)[0];
        assert!((p00 - dd * dd.adjoint()).norm() < 1e-12);
    }

    #[test]
    fn mle_recovers_bell_state() {
        let rho = TwoQubitDensity::from_pure(&BellState::PhiPlus.ket());
        let counts = counts_from_state(&rho, 1e6);
        let result = mle_reconstruct(&counts).unwrap();
        assert!(result.converged);
        assert!(result.rho.is_physical(1e-9));
        assert!(fidelity(&result.rho, &BellState::PhiPlus.ket()) >= 0.999);
    }

    #[test]
    fn mle_recovers_maximally_mixed() {
        let rho = TwoQubitDensity::maximally_mixed();
        let counts = counts_from_state(&rho, 1e6);
        let result = mle_reconstruct(&counts).unwrap();
        assert!(result.rho.purity() <= 0.26);
    }

    #[test]
    fn mle_rejects_all_zero_counts() {
        let counts = [[0.0; 4]; 9];
        assert!(matches!(mle_reconstruct(&counts), Err(Error::EmptyCounts)));
    }

    #[test]
    fn mle_clamps_negative_counts_with_flag() {
        let rho = TwoQubitDensity::from_pure(&BellState::PsiMinus.ket());
        let mut counts = counts_from_state(&rho, 1000.0);
        counts[3][2] = -4.0;
        let result = mle_reconstruct(&counts).unwrap();
        assert!(result.clamped_negative);
        assert!(result.rho.is_physical(1e-9));
    }

    #[test]
    fn mle_output_is_physical_for_noisy_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..10 {
            let mut counts = [[0.0; 4]; 9];
            for row in &mut counts {
                for v in row.iter_mut() {
                    *v = (rng.random::<f64>() * 50.0).floor();
                }
            }
            if counts.iter().flatten().sum::<f64>() == 0.0 {
                continue;
            }
            let result = mle_reconstruct(&counts).unwrap();
            assert!(result.rho.is_physical(1e-9));
        }
    }

    #[test]
    fn tomography_roundtrip_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let rho = random_density_matrix(&mut rng);
            let counts = counts_from_state(&rho, 1e6);
            let result = mle_reconstruct(&counts).unwrap();
            let distance = result.rho.trace_distance(&rho);
            assert!(distance < 0.01, "trace distance {distance}");
        }
    }

    #[test]
    fn fidelity_examples() {
        let psi = BellState::PsiMinus.ket();
        let pure = TwoQubitDensity::from_pure(&psi);
        assert_abs_diff_eq!(fidelity(&pure, &psi), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            fidelity(&TwoQubitDensity::maximally_mixed(), &psi),
            0.25,
            epsilon = 1e-12
        );
        // Werner-like mixture at 0.945
        let f = 0.945;
        let werner = (4.0 * f - 1.0) / 3.0;
        let mut rho = TwoQubitDensity::maximally_mixed().scaled(1.0 - werner);
        rho.add_scaled(&pure, werner);
        assert_abs_diff_eq!(fidelity(&rho, &psi), f, epsilon = 1e-12);
    }

    #[test]
    fn compensation_roundtrip_recovers_fidelity() {
        let target = BellState::PhiPlus.ket();
        let rho = TwoQubitDensity::from_pure(&target);
        let rotated = rho.conjugated(&phase_unitary(1.9, 1.0));
        assert!(rotated.fidelity(&target) < 0.1);
        let (compensated, phases) = compensate_local_unitaries(&rotated, &target);
        assert!(
            compensated.fidelity(&target) > 1.0 - 1e-6,
            "fidelity {} phases {:?}",
            compensated.fidelity(&target),
            phases
        );
    }

    #[test]
    fn compensation_never_reduces_fidelity() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let rho = random_density_matrix(&mut rng);
            let target = random_pure_state(&mut rng);
            let before = rho.fidelity(&target);
            let (after, _) = compensate_local_unitaries(&rho, &target);
            assert!(after.fidelity(&target) >= before - 1e-12);
        }
    }

    #[test]
    fn compensation_is_a_noop_at_the_optimum() {
        let target = BellState::PhiMinus.ket();
        let rho = TwoQubitDensity::from_pure(&target);
        let (after, (phi1, phi2)) = compensate_local_unitaries(&rho, &target);
        assert_abs_diff_eq!(after.fidelity(&target), 1.0, epsilon = 1e-9);
        // phases equivalent to zero modulo 2π
        for phi in [phi1, phi2] {
            let wrapped = (phi.sin()).abs();
            assert!(wrapped < 1e-6, "phase {phi}");
        }
    }
}
