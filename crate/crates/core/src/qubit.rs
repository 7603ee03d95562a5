//! Two-qubit kets, density matrices and Pauli algebra.
//!
//! Basis order is `HH, HV, VH, VV` (control qubit first); `H` is logic 0.

use nalgebra::{Matrix2, Matrix4, Vector2, Vector4};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

pub type Ket2 = Vector2<Complex64>;
pub type Ket4 = Vector4<Complex64>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn ket_h() -> Ket2 {
    Vector2::new(c(1.0, 0.0), c(0.0, 0.0))
}

pub fn ket_v() -> Ket2 {
    Vector2::new(c(0.0, 0.0), c(1.0, 0.0))
}

/// |D⟩ = (|H⟩+|V⟩)/√2
pub fn ket_d() -> Ket2 {
    Vector2::new(c(1.0, 0.0), c(1.0, 0.0)) / c(2.0f64.sqrt(), 0.0)
}

/// |A⟩ = (|H⟩−|V⟩)/√2
pub fn ket_a() -> Ket2 {
    Vector2::new(c(1.0, 0.0), c(-1.0, 0.0)) / c(2.0f64.sqrt(), 0.0)
}

/// |L⟩ = (|H⟩+i|V⟩)/√2
pub fn ket_l() -> Ket2 {
    Vector2::new(c(1.0, 0.0), c(0.0, 1.0)) / c(2.0f64.sqrt(), 0.0)
}

/// |R⟩ = (|H⟩−i|V⟩)/√2
pub fn ket_r() -> Ket2 {
    Vector2::new(c(1.0, 0.0), c(0.0, -1.0)) / c(2.0f64.sqrt(), 0.0)
}

pub fn kron_ket(a: &Ket2, b: &Ket2) -> Ket4 {
    Vector4::new(a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1])
}

pub fn kron_op(a: &Matrix2<Complex64>, b: &Matrix2<Complex64>) -> Matrix4<Complex64> {
    let mut m = Matrix4::zeros();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    m[(2 * i + k, 2 * j + l)] = a[(i, j)] * b[(k, l)];
                }
            }
        }
    }
    m
}

pub fn pauli_i() -> Matrix2<Complex64> {
    Matrix2::identity()
}

pub fn pauli_x() -> Matrix2<Complex64> {
    Matrix2::new(c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0))
}

pub fn pauli_z() -> Matrix2<Complex64> {
    Matrix2::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0))
}

/// The four maximally entangled two-qubit states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BellState {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellState {
    pub const ALL: [BellState; 4] = [
        BellState::PhiPlus,
        BellState::PhiMinus,
        BellState::PsiPlus,
        BellState::PsiMinus,
    ];

    pub fn ket(self) -> Ket4 {
        let s = c(1.0 / 2.0f64.sqrt(), 0.0);
        match self {
            BellState::PhiPlus => Vector4::new(s, c(0.0, 0.0), c(0.0, 0.0), s),
            BellState::PhiMinus => Vector4::new(s, c(0.0, 0.0), c(0.0, 0.0), -s),
            BellState::PsiPlus => Vector4::new(c(0.0, 0.0), s, s, c(0.0, 0.0)),
            BellState::PsiMinus => Vector4::new(c(0.0, 0.0), s, -s, c(0.0, 0.0)),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BellState::PhiPlus => "phi_plus",
            BellState::PhiMinus => "phi_minus",
            BellState::PsiPlus => "psi_plus",
            BellState::PsiMinus => "psi_minus",
        }
    }
}

/// A 4x4 two-qubit density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoQubitDensity {
    m: Matrix4<Complex64>,
}

impl TwoQubitDensity {
    pub fn new(m: Matrix4<Complex64>) -> TwoQubitDensity {
        TwoQubitDensity { m }
    }

    pub fn zeros() -> TwoQubitDensity {
        TwoQubitDensity { m: Matrix4::zeros() }
    }

    pub fn maximally_mixed() -> TwoQubitDensity {
        TwoQubitDensity {
            m: Matrix4::identity() * c(0.25, 0.0),
        }
    }

    pub fn from_pure(ket: &Ket4) -> TwoQubitDensity {
        TwoQubitDensity {
            m: ket * ket.adjoint(),
        }
    }

    pub fn matrix(&self) -> &Matrix4<Complex64> {
        &self.m
    }

    pub fn trace(&self) -> f64 {
        self.m.trace().re
    }

    pub fn add_scaled(&mut self, other: &TwoQubitDensity, weight: f64) {
        self.m += other.m * c(weight, 0.0);
    }

    pub fn scaled(&self, factor: f64) -> TwoQubitDensity {
        TwoQubitDensity {
            m: self.m * c(factor, 0.0),
        }
    }

    pub fn normalized(&self) -> TwoQubitDensity {
        let t = self.trace();
        assert!(t > 0.0, "cannot normalize a traceless density matrix");
        self.scaled(1.0 / t)
    }

    /// Force exact Hermiticity by averaging with the adjoint.
    pub fn hermitized(&self) -> TwoQubitDensity {
        TwoQubitDensity {
            m: (self.m + self.m.adjoint()) * c(0.5, 0.0),
        }
    }

    pub fn purity(&self) -> f64 {
        (self.m * self.m).trace().re
    }

    /// ⟨ψ|ρ|ψ⟩ for a pure target.
    pub fn fidelity(&self, target: &Ket4) -> f64 {
        (target.adjoint() * self.m * target)[(0, 0)].re
    }

    /// Conjugate by a (unitary) 4x4 operator: `U ρ U†`.
    pub fn conjugated(&self, u: &Matrix4<Complex64>) -> TwoQubitDensity {
        TwoQubitDensity {
            m: u * self.m * u.adjoint(),
        }
    }

    /// Diagonal in the computational basis, as probabilities.
    pub fn populations(&self) -> [f64; 4] {
        [
            self.m[(0, 0)].re,
            self.m[(1, 1)].re,
            self.m[(2, 2)].re,
            self.m[(3, 3)].re,
        ]
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> [f64; 4] {
        let herm = self.hermitized();
        let eig = herm.m.symmetric_eigen();
        let mut vals = [0.0; 4];
        for (i, v) in eig.eigenvalues.iter().enumerate() {
            vals[i] = *v;
        }
        vals.sort_by(|a, b| a.total_cmp(b));
        vals
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn is_physical(&self, tol: f64) -> bool {
        (self.trace() - 1.0).abs() <= tol
            && (self.m - self.m.adjoint()).norm() <= tol
            && self.min_eigenvalue() >= -tol
    }

    /// Trace distance ½·Tr|ρ−σ|.
    pub fn trace_distance(&self, other: &TwoQubitDensity) -> f64 {
        let diff = TwoQubitDensity {
            m: self.m - other.m,
        };
        0.5 * diff.eigenvalues().iter().map(|v| v.abs()).sum::<f64>()
    }

    /// Row-major nested `[re, im]` pairs, the wire format for density
    /// matrices.
    pub fn to_nested(&self) -> Vec<Vec<[f64; 2]>> {
        (0..4)
            .map(|i| (0..4).map(|j| [self.m[(i, j)].re, self.m[(i, j)].im]).collect())
            .collect()
    }

    pub fn from_nested(nested: &[Vec<[f64; 2]>]) -> Option<TwoQubitDensity> {
        if nested.len() != 4 || nested.iter().any(|row| row.len() != 4) {
            return None;
        }
        let mut m = Matrix4::zeros();
        for i in 0..4 {
            for j in 0..4 {
                m[(i, j)] = c(nested[i][j][0], nested[i][j][1]);
            }
        }
        Some(TwoQubitDensity { m })
    }
}

/// Haar-ish random pure two-qubit state (normalized complex Gaussian).
pub fn random_pure_state<R: Rng>(rng: &mut R) -> Ket4 {
    let mut v = Vector4::zeros();
    for i in 0..4 {
        v[i] = c(gaussian(rng), gaussian(rng));
    }
    let n = v.norm();
    v / c(n, 0.0)
}

/// Random full-rank density matrix (normalized Wishart, GG†/Tr).
pub fn random_density_matrix<R: Rng>(rng: &mut R) -> TwoQubitDensity {
    let g = Matrix4::from_fn(|_, _| c(gaussian(rng), gaussian(rng)));
    let w = g * g.adjoint();
    TwoQubitDensity::new(w).normalized()
}

fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    // Box-Muller; avoids pulling a distributions dependency in here.
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bell_states_are_orthonormal() {
        for (i, a) in BellState::ALL.iter().enumerate() {
            for (j, b) in BellState::ALL.iter().enumerate() {
                let ip = (a.ket().adjoint() * b.ket())[(0, 0)].norm();
                let expected = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(ip, expected, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn fidelity_of_pure_and_mixed() {
        let phi = BellState::PhiPlus.ket();
        assert_abs_diff_eq!(
            TwoQubitDensity::from_pure(&phi).fidelity(&phi),
            1.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            TwoQubitDensity::maximally_mixed().fidelity(&phi),
            0.25,
            epsilon = 1e-12
        );
    }

    #[test]
    fn trace_distance_of_orthogonal_pure_states_is_one() {
        let a = TwoQubitDensity::from_pure(&kron_ket(&ket_h(), &ket_h()));
        let b = TwoQubitDensity::from_pure(&kron_ket(&ket_v(), &ket_v()));
        assert_abs_diff_eq!(a.trace_distance(&b), 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(a.trace_distance(&a), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn random_density_matrices_are_physical() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let rho = random_density_matrix(&mut rng);
            assert!(rho.is_physical(1e-9));
        }
    }

    #[test]
    fn nested_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rho = random_density_matrix(&mut rng);
        let back = TwoQubitDensity::from_nested(&rho.to_nested()).unwrap();
        assert_abs_diff_eq!(rho.trace_distance(&back), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn pauli_conjugation_flips_target() {
        let hh = kron_ket(&ket_h(), &ket_h());
        let hv = kron_ket(&ket_h(), &ket_v());
        let rho = TwoQubitDensity::from_pure(&hh);
        let flipped = rho.conjugated(&kron_op(&pauli_i(), &pauli_x()));
        assert_abs_diff_eq!(flipped.fidelity(&hv), 1.0, epsilon = 1e-12);
    }
}
