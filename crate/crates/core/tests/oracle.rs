//! Cross-checks of the permanent-based evolution against a brute-force
//! creation-operator expansion that never touches a permanent.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use opticnot::fock::{evolve, FockState, ModeUnitary, PureState};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Haar-ish random unitary from the QR decomposition of a complex Gaussian
/// matrix.
fn random_unitary(dim: usize, rng: &mut ChaCha8Rng) -> ModeUnitary {
    let gauss = DMatrix::from_fn(dim, dim, |_, _| {
        let u1: f64 = rng.random::<f64>().max(1e-300);
        let u2: f64 = rng.random();
        let r = (-2.0 * u1.ln()).sqrt();
        c(
            r * (2.0 * std::f64::consts::PI * u2).cos(),
            r * (2.0 * std::f64::consts::PI * u2).sin(),
        )
    });
    let q = gauss.qr().q();
    ModeUnitary::new(q).expect("Q factor is unitary")
}

/// Independent evolution: write each Fock term as a product of creation
/// operators, map each operator through the matrix columnwise and reapply
/// the transformed product to the vacuum.
fn evolve_by_operator_expansion(state: &PureState, u: &ModeUnitary) -> PureState {
    let dim = state.dim();
    let mut out = PureState::zero(dim);
    for (fock, amp) in state.terms() {
        let mut term = PureState::vacuum(dim).scaled(*amp);
        let mut norm = 1.0f64;
        for mode in 0..dim {
            for k in 0..fock.occupation(mode) {
                norm *= (k as f64 + 1.0).sqrt();
                let transformed: Vec<(usize, Complex64)> = (0..dim)
                    .map(|j| (j, u.matrix()[(j, mode)]))
                    .collect();
                term = term.apply_creation(&transformed);
            }
        }
        out = out.add(&term.scaled(c(1.0 / norm, 0.0)));
    }
    out
}

fn random_state(dim: usize, photons: u32, rng: &mut ChaCha8Rng) -> PureState {
    // random superposition of up to three Fock terms with the same total
    let mut state = PureState::zero(dim);
    for _ in 0..rng.random_range(1..=3usize) {
        let mut occ = vec![0u8; dim];
        for _ in 0..photons {
            occ[rng.random_range(0..dim)] += 1;
        }
        let amp = c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
        state = state.add(&PureState::from_terms(
            dim,
            [(FockState::new(occ), amp)].into_iter().collect(),
        ));
    }
    if state.norm_sqr() == 0.0 {
        return PureState::vacuum(dim);
    }
    state.normalized()
}

fn max_amplitude_difference(a: &PureState, b: &PureState) -> f64 {
    let mut worst = 0.0f64;
    for (fock, amp) in a.terms() {
        worst = worst.max((amp - b.amplitude(fock)).norm());
    }
    for (fock, amp) in b.terms() {
        worst = worst.max((amp - a.amplitude(fock)).norm());
    }
    worst
}

#[test]
fn permanent_evolution_matches_operator_expansion() {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut cases = 0;
    for dim in 1..=4usize {
        for photons in 0..=3u32 {
            for _ in 0..45 {
                let u = random_unitary(dim, &mut rng);
                let state = random_state(dim, photons, &mut rng);
                let fast = evolve(&state, &u).expect("dimensions match");
                let slow = evolve_by_operator_expansion(&state, &u);
                let diff = max_amplitude_difference(&fast, &slow);
                assert!(
                    diff < 1e-9,
                    "dim {dim}, photons {photons}: amplitude difference {diff}"
                );
                cases += 1;
            }
        }
    }
    assert!(cases >= 500, "only {cases} cases");
}

#[test]
fn evolution_composes() {
    let mut rng = ChaCha8Rng::seed_from_u64(405);
    for _ in 0..25 {
        let u1 = random_unitary(4, &mut rng);
        let u2 = random_unitary(4, &mut rng);
        let state = random_state(4, 3, &mut rng);
        let two_step = evolve(&evolve(&state, &u1).unwrap(), &u2).unwrap();
        let one_step = evolve(&state, &u2.compose(&u1)).unwrap();
        let diff = max_amplitude_difference(&two_step, &one_step);
        assert!(diff < 1e-9, "composition mismatch {diff}");
    }
}

#[test]
fn evolution_preserves_norm_on_random_cases() {
    let mut rng = ChaCha8Rng::seed_from_u64(406);
    for _ in 0..50 {
        let dim = rng.random_range(2..=4usize);
        let photons = rng.random_range(1..=3u32);
        let u = random_unitary(dim, &mut rng);
        let state = random_state(dim, photons, &mut rng);
        let out = evolve(&state, &u).unwrap();
        assert!((out.norm_sqr() - 1.0).abs() < 1e-9);
        assert_eq!(out.total_photons(), Some(photons));
    }
}
