//! Optical elements compiled to mode unitaries, and the gate interferometer.
//!
//! Conventions, used consistently everywhere:
//!
//! * 50:50 splitter: symmetric, transmission `1/√2`, reflection `i/√2`.
//! * Polarizing splitter: the crossing polarization picks up phase `i`; in
//!   the `Chip` convention H crosses and V stays (the on-chip couplers send
//!   all H light to the other mode while V returns), in `FreeSpace` the
//!   roles are swapped.
//! * `HWP(θ)`: `H → cos2θ·H + sin2θ·V`, `V → sin2θ·H − cos2θ·V`.
//! * `QWP(θ)`: fast axis at θ, π/2 retardation; `QWP(45°)|H⟩ ∝ |R⟩`.
//!
//! Residual element phases are local unitaries on the outputs and are
//! compensated downstream, so gate outcomes after feed-forward do not depend
//! on the convention choice. All elements act as the identity on internal
//! wavepacket labels.

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::ModeUnitary;
use crate::modes::{ModeSpace, Polarization, Spatial};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Which polarization crosses at a polarizing splitter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum PbsConvention {
    /// H crosses to the other mode, V stays.
    Chip,
    /// V crosses to the other mode, H stays.
    FreeSpace,
}

impl PbsConvention {
    fn crossing(self) -> Polarization {
        match self {
            PbsConvention::Chip => Polarization::H,
            PbsConvention::FreeSpace => Polarization::V,
        }
    }
}

/// Waveplate retardation kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WaveplateKind {
    Half,
    Quarter,
}

/// Measurement/analyzer basis for one photon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub enum MeasBasis {
    /// H/V (computational)
    HV,
    /// D/A (diagonal)
    DA,
    /// L/R (circular)
    LR,
}

impl MeasBasis {
    pub const ALL: [MeasBasis; 3] = [MeasBasis::HV, MeasBasis::DA, MeasBasis::LR];

    /// Single-letter setting label (first basis state).
    pub fn letter(self) -> &'static str {
        match self {
            MeasBasis::HV => "H",
            MeasBasis::DA => "D",
            MeasBasis::LR => "L",
        }
    }

    pub fn parse(s: &str) -> Option<MeasBasis> {
        match s {
            "H" => Some(MeasBasis::HV),
            "D" => Some(MeasBasis::DA),
            "L" => Some(MeasBasis::LR),
            _ => None,
        }
    }

    /// Jones matrix mapping the basis states onto H/V, so a polarizer in H/V
    /// after it measures in this basis.
    pub fn jones(self) -> Matrix2<Complex64> {
        let s = 1.0 / 2.0f64.sqrt();
        match self {
            MeasBasis::HV => Matrix2::identity(),
            // |D⟩→|H⟩, |A⟩→|V⟩
            MeasBasis::DA => Matrix2::new(c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)),
            // |L⟩→|H⟩, |R⟩→|V⟩
            MeasBasis::LR => Matrix2::new(c(s, 0.0), c(0.0, -s), c(s, 0.0), c(0.0, s)),
        }
    }
}

/// Write a 2x2 Jones matrix onto the (H, V) block of one spatial mode, for
/// every internal label.
fn apply_jones(
    matrix: &mut DMatrix<Complex64>,
    space: &ModeSpace,
    mode: Spatial,
    jones: &Matrix2<Complex64>,
) {
    for internal in 0..space.n_internal() {
        let idx = [
            space.index_of(mode, Polarization::H, internal),
            space.index_of(mode, Polarization::V, internal),
        ];
        for r in 0..2 {
            for col in 0..2 {
                matrix[(idx[r], idx[col])] = jones[(r, col)];
            }
        }
    }
}

/// Polarizing splitter between two spatial modes in the H/V basis.
pub fn pbs_hv(
    space: &ModeSpace,
    m1: Spatial,
    m2: Spatial,
    convention: PbsConvention,
) -> ModeUnitary {
    leaky_pbs_hv(space, m1, m2, convention, 0.0)
}

/// Polarizing splitter with finite extinction: `leakage` is the wrong-port
/// power fraction for either polarization (an extinction ratio of 50:1 is a
/// leakage of 1/51). Each polarization sees a lossless splitter with the
/// corresponding splitting ratio, so the element stays unitary.
pub fn leaky_pbs_hv(
    space: &ModeSpace,
    m1: Spatial,
    m2: Spatial,
    convention: PbsConvention,
    leakage: f64,
) -> ModeUnitary {
    assert_ne!(m1, m2, "polarizing splitter needs two distinct modes");
    assert!(
        (0.0..=0.5).contains(&leakage),
        "leakage must be in [0, 0.5]"
    );
    let mut matrix = DMatrix::<Complex64>::identity(space.dim(), space.dim());
    let crossing = convention.crossing();
    // cross amplitude i·sinθ, stay amplitude cosθ
    let cross_pol = (1.0 - leakage).sqrt(); // sinθ for the crossing pol
    let cross_stay = leakage.sqrt();
    let stay_pol = leakage.sqrt(); // sinθ for the staying pol
    let stay_stay = (1.0 - leakage).sqrt();
    for internal in 0..space.n_internal() {
        for pol in Polarization::BOTH {
            let (sin_t, cos_t) = if pol == crossing {
                (cross_pol, cross_stay)
            } else {
                (stay_pol, stay_stay)
            };
            if sin_t == 0.0 {
                continue;
            }
            let i1 = space.index_of(m1, pol, internal);
            let i2 = space.index_of(m2, pol, internal);
            matrix[(i1, i1)] = c(cos_t, 0.0);
            matrix[(i2, i2)] = c(cos_t, 0.0);
            matrix[(i1, i2)] = c(0.0, sin_t);
            matrix[(i2, i1)] = c(0.0, sin_t);
        }
    }
    ModeUnitary::new(matrix).expect("splitter matrix is unitary by construction")
}

/// Polarization-independent 50:50 splitter, symmetric convention.
pub fn bs5050(space: &ModeSpace, m1: Spatial, m2: Spatial) -> ModeUnitary {
    assert_ne!(m1, m2, "splitter needs two distinct modes");
    let s = 1.0 / 2.0f64.sqrt();
    let mut matrix = DMatrix::<Complex64>::identity(space.dim(), space.dim());
    for pol in Polarization::BOTH {
        for internal in 0..space.n_internal() {
            let i1 = space.index_of(m1, pol, internal);
            let i2 = space.index_of(m2, pol, internal);
            matrix[(i1, i1)] = c(s, 0.0);
            matrix[(i2, i2)] = c(s, 0.0);
            matrix[(i1, i2)] = c(0.0, s);
            matrix[(i2, i1)] = c(0.0, s);
        }
    }
    ModeUnitary::new(matrix).expect("splitter matrix is unitary by construction")
}

pub fn waveplate_jones(kind: WaveplateKind, angle: f64) -> Matrix2<Complex64> {
    let cos2 = (2.0 * angle).cos();
    let sin2 = (2.0 * angle).sin();
    match kind {
        WaveplateKind::Half => Matrix2::new(c(cos2, 0.0), c(sin2, 0.0), c(sin2, 0.0), c(-cos2, 0.0)),
        WaveplateKind::Quarter => {
            let cs = angle.cos() * angle.sin();
            Matrix2::new(
                c(angle.cos().powi(2), angle.sin().powi(2)),
                c(cs, -cs),
                c(cs, -cs),
                c(angle.sin().powi(2), angle.cos().powi(2)),
            )
        }
    }
}

/// Waveplate on one spatial mode with its fast axis at `angle` radians.
pub fn waveplate(space: &ModeSpace, mode: Spatial, kind: WaveplateKind, angle: f64) -> ModeUnitary {
    assert!(angle.is_finite(), "waveplate angle must be finite");
    let mut matrix = DMatrix::<Complex64>::identity(space.dim(), space.dim());
    apply_jones(&mut matrix, space, mode, &waveplate_jones(kind, angle));
    ModeUnitary::new(matrix).expect("waveplate matrix is unitary by construction")
}

/// Relative phase `e^{iφ}` on the V component of one spatial mode (the form
/// chip birefringence takes).
pub fn phase_shift(space: &ModeSpace, mode: Spatial, phi: f64) -> ModeUnitary {
    let jones = Matrix2::new(
        c(1.0, 0.0),
        c(0.0, 0.0),
        c(0.0, 0.0),
        Complex64::from_polar(1.0, phi),
    );
    let mut matrix = DMatrix::<Complex64>::identity(space.dim(), space.dim());
    apply_jones(&mut matrix, space, mode, &jones);
    ModeUnitary::new(matrix).expect("phase matrix is unitary by construction")
}

/// Analyzer rotation mapping a measurement basis onto H/V on one mode.
pub fn basis_rotation(space: &ModeSpace, mode: Spatial, basis: MeasBasis) -> ModeUnitary {
    let mut matrix = DMatrix::<Complex64>::identity(space.dim(), space.dim());
    apply_jones(&mut matrix, space, mode, &basis.jones());
    ModeUnitary::new(matrix).expect("basis rotation is unitary by construction")
}

/// Polarizing splitter acting in the D/A basis: half-wave plates at 22.5° on
/// both modes, the H/V splitter, then half-wave plates again.
pub fn rotated_pbs(
    space: &ModeSpace,
    m1: Spatial,
    m2: Spatial,
    convention: PbsConvention,
) -> ModeUnitary {
    leaky_rotated_pbs(space, m1, m2, convention, 0.0)
}

/// [`rotated_pbs`] with finite extinction, see [`leaky_pbs_hv`].
pub fn leaky_rotated_pbs(
    space: &ModeSpace,
    m1: Spatial,
    m2: Spatial,
    convention: PbsConvention,
    leakage: f64,
) -> ModeUnitary {
    let hwp_angle = std::f64::consts::FRAC_PI_8;
    let rotate = waveplate(space, m1, WaveplateKind::Half, hwp_angle)
        .compose(&waveplate(space, m2, WaveplateKind::Half, hwp_angle));
    rotate
        .compose(&leaky_pbs_hv(space, m1, m2, convention, leakage))
        .compose(&rotate)
}

/// The full gate interferometer: an H/V polarizing splitter on (a1, c) and a
/// D/A one on (a2, t).
pub fn build_cnot_circuit(space: &ModeSpace, convention: PbsConvention) -> ModeUnitary {
    build_cnot_circuit_with_leakage(space, convention, 0.0)
}

/// Gate interferometer with the splitters at finite extinction.
pub fn build_cnot_circuit_with_leakage(
    space: &ModeSpace,
    convention: PbsConvention,
    leakage: f64,
) -> ModeUnitary {
    let first = leaky_pbs_hv(space, Spatial::A1, Spatial::C, convention, leakage);
    let second = leaky_rotated_pbs(space, Spatial::A2, Spatial::T, convention, leakage);
    second.compose(&first)
}

/// Declarative element description, compilable to a mode unitary.
#[derive(Debug, Clone)]
pub struct ElementSpec {
    pub kind: ElementKind,
    pub modes: Vec<Spatial>,
    pub angle: f64,
    pub convention: PbsConvention,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementKind {
    PbsHv,
    PbsRotated,
    Bs5050,
    Hwp,
    Qwp,
    Phase,
}

impl ElementSpec {
    pub fn compile(&self, space: &ModeSpace) -> Result<ModeUnitary> {
        let two = |spec: &ElementSpec| -> Result<(Spatial, Spatial)> {
            if spec.modes.len() != 2 || spec.modes[0] == spec.modes[1] {
                return Err(Error::InvalidParameter(format!(
                    "{:?} needs two distinct spatial modes",
                    spec.kind
                )));
            }
            Ok((spec.modes[0], spec.modes[1]))
        };
        let one = |spec: &ElementSpec| -> Result<Spatial> {
            if spec.modes.len() != 1 {
                return Err(Error::InvalidParameter(format!(
                    "{:?} acts on exactly one spatial mode",
                    spec.kind
                )));
            }
            Ok(spec.modes[0])
        };
        Ok(match self.kind {
            ElementKind::PbsHv => {
                let (m1, m2) = two(self)?;
                pbs_hv(space, m1, m2, self.convention)
            }
            ElementKind::PbsRotated => {
                let (m1, m2) = two(self)?;
                rotated_pbs(space, m1, m2, self.convention)
            }
            ElementKind::Bs5050 => {
                let (m1, m2) = two(self)?;
                bs5050(space, m1, m2)
            }
            ElementKind::Hwp => waveplate(space, one(self)?, WaveplateKind::Half, self.angle),
            ElementKind::Qwp => waveplate(space, one(self)?, WaveplateKind::Quarter, self.angle),
            ElementKind::Phase => phase_shift(space, one(self)?, self.angle),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{evolve, project_pattern, DetectionPattern, FockState, PureState};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_4;

    fn single_photon(space: &ModeSpace, mode: Spatial, pol: Polarization) -> PureState {
        PureState::vacuum(space.dim())
            .apply_creation(&[(space.index_of(mode, pol, 0), c(1.0, 0.0))])
    }

    #[test]
    fn chip_pbs_routes_h_across_and_keeps_v() {
        let space = ModeSpace::new(1);
        let pbs = pbs_hv(&space, Spatial::A1, Spatial::C, PbsConvention::Chip);

        let h_in = single_photon(&space, Spatial::A1, Polarization::H);
        let out = evolve(&h_in, &pbs).unwrap();
        let crossed = FockState::single(space.dim(), space.index_of(Spatial::C, Polarization::H, 0));
        assert_abs_diff_eq!(out.amplitude(&crossed).norm(), 1.0, epsilon = 1e-12);

        let v_in = single_photon(&space, Spatial::A1, Polarization::V);
        let out = evolve(&v_in, &pbs).unwrap();
        let stayed = FockState::single(space.dim(), space.index_of(Spatial::A1, Polarization::V, 0));
        assert_abs_diff_eq!(out.amplitude(&stayed).norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn diagonal_photon_splits_at_chip_pbs() {
        let space = ModeSpace::new(1);
        let pbs = pbs_hv(&space, Spatial::A1, Spatial::C, PbsConvention::Chip);
        let d_in = PureState::vacuum(space.dim()).apply_creation(&[
            (
                space.index_of(Spatial::A1, Polarization::H, 0),
                c(1.0 / 2.0f64.sqrt(), 0.0),
            ),
            (
                space.index_of(Spatial::A1, Polarization::V, 0),
                c(1.0 / 2.0f64.sqrt(), 0.0),
            ),
        ]);
        let out = evolve(&d_in, &pbs).unwrap();
        let h_crossed =
            FockState::single(space.dim(), space.index_of(Spatial::C, Polarization::H, 0));
        let v_stayed =
            FockState::single(space.dim(), space.index_of(Spatial::A1, Polarization::V, 0));
        assert_abs_diff_eq!(out.amplitude(&h_crossed).norm_sqr(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(out.amplitude(&v_stayed).norm_sqr(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn hwp_rotations() {
        // HWP(22.5°) maps H to D
        let jones = waveplate_jones(WaveplateKind::Half, std::f64::consts::FRAC_PI_8);
        let d = jones * nalgebra::Vector2::new(c(1.0, 0.0), c(0.0, 0.0));
        assert_abs_diff_eq!(d[0].re, 1.0 / 2.0f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(d[1].re, 1.0 / 2.0f64.sqrt(), epsilon = 1e-12);
        // HWP(0) maps V to -V (a global phase on that component)
        let jones0 = waveplate_jones(WaveplateKind::Half, 0.0);
        let v = jones0 * nalgebra::Vector2::new(c(0.0, 0.0), c(1.0, 0.0));
        assert_abs_diff_eq!((v[1] - c(-1.0, 0.0)).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn qwp_at_45_makes_circular() {
        // QWP(45°)|H⟩ ∝ |R⟩ = (|H⟩ - i|V⟩)/√2
        let jones = waveplate_jones(WaveplateKind::Quarter, FRAC_PI_4);
        let out = jones * nalgebra::Vector2::new(c(1.0, 0.0), c(0.0, 0.0));
        let ratio = out[1] / out[0];
        assert_abs_diff_eq!((ratio - c(0.0, -1.0)).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn rotated_pbs_equals_conjugated_pbs() {
        let space = ModeSpace::new(2);
        let direct = rotated_pbs(&space, Spatial::A2, Spatial::T, PbsConvention::Chip);
        let hwp_angle = std::f64::consts::FRAC_PI_8;
        let rotate = waveplate(&space, Spatial::A2, WaveplateKind::Half, hwp_angle)
            .compose(&waveplate(&space, Spatial::T, WaveplateKind::Half, hwp_angle));
        let conjugated = rotate
            .compose(&pbs_hv(&space, Spatial::A2, Spatial::T, PbsConvention::Chip))
            .compose(&rotate);
        assert!((direct.matrix() - conjugated.matrix()).norm() < 1e-12);
    }

    #[test]
    fn rotated_pbs_splits_d_and_a() {
        let space = ModeSpace::new(1);
        let pbs = rotated_pbs(&space, Spatial::A2, Spatial::T, PbsConvention::Chip);
        let s = 1.0 / 2.0f64.sqrt();
        // |D⟩ in a2 crosses to t
        let d_in = PureState::vacuum(space.dim()).apply_creation(&[
            (space.index_of(Spatial::A2, Polarization::H, 0), c(s, 0.0)),
            (space.index_of(Spatial::A2, Polarization::V, 0), c(s, 0.0)),
        ]);
        let out = evolve(&d_in, &pbs).unwrap();
        let t_pattern = DetectionPattern::new(vec![(space.spatial_group(Spatial::T), 1)]);
        assert_abs_diff_eq!(project_pattern(&out, &t_pattern).unwrap().0, 1.0, epsilon = 1e-12);
        // |A⟩ in a2 stays
        let a_in = PureState::vacuum(space.dim()).apply_creation(&[
            (space.index_of(Spatial::A2, Polarization::H, 0), c(s, 0.0)),
            (space.index_of(Spatial::A2, Polarization::V, 0), c(-s, 0.0)),
        ]);
        let out = evolve(&a_in, &pbs).unwrap();
        let a2_pattern = DetectionPattern::new(vec![(space.spatial_group(Spatial::A2), 1)]);
        assert_abs_diff_eq!(project_pattern(&out, &a2_pattern).unwrap().0, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn bs_hom_dip_and_distinguishable_coincidence() {
        let space = ModeSpace::new(2);
        let bs = bs5050(&space, Spatial::C, Spatial::T);
        let pattern = DetectionPattern::new(vec![
            (space.spatial_group(Spatial::C), 1),
            (space.spatial_group(Spatial::T), 1),
        ]);

        // identical photons: no coincidences
        let same = PureState::vacuum(space.dim())
            .apply_creation(&[(space.index_of(Spatial::C, Polarization::H, 0), c(1.0, 0.0))])
            .apply_creation(&[(space.index_of(Spatial::T, Polarization::H, 0), c(1.0, 0.0))]);
        let out = evolve(&same, &bs).unwrap();
        assert_abs_diff_eq!(project_pattern(&out, &pattern).unwrap().0, 0.0, epsilon = 1e-12);

        // orthogonal internal labels: coincidence probability 1/2
        let orthogonal = PureState::vacuum(space.dim())
            .apply_creation(&[(space.index_of(Spatial::C, Polarization::H, 0), c(1.0, 0.0))])
            .apply_creation(&[(space.index_of(Spatial::T, Polarization::H, 1), c(1.0, 0.0))]);
        let out = evolve(&orthogonal, &bs).unwrap();
        assert_abs_diff_eq!(project_pattern(&out, &pattern).unwrap().0, 0.5, epsilon = 1e-9);
    }

    #[test]
    fn all_elements_are_identity_on_internal_labels() {
        // An element must never mix internal labels: check block structure.
        let space = ModeSpace::new(2);
        let elements = [
            pbs_hv(&space, Spatial::A1, Spatial::C, PbsConvention::Chip),
            rotated_pbs(&space, Spatial::A2, Spatial::T, PbsConvention::FreeSpace),
            bs5050(&space, Spatial::C, Spatial::T),
            waveplate(&space, Spatial::C, WaveplateKind::Quarter, 0.3),
            phase_shift(&space, Spatial::T, 1.1),
        ];
        for u in &elements {
            for r in 0..space.dim() {
                for col in 0..space.dim() {
                    if space.label(r).internal != space.label(col).internal {
                        assert_eq!(u.matrix()[(r, col)], c(0.0, 0.0));
                    }
                }
            }
        }
    }

    #[test]
    fn circuit_is_unitary_and_routes_control_h() {
        let space = ModeSpace::new(2);
        // ModeUnitary::new validates unitarity; compile must succeed.
        let u = build_cnot_circuit(&space, PbsConvention::Chip);
        assert_eq!(u.dim(), 16);
        // A lone H control photon exits in a1 (chip convention: H crosses).
        let space1 = ModeSpace::new(1);
        let u1 = build_cnot_circuit(&space1, PbsConvention::Chip);
        let h_control = single_photon(&space1, Spatial::C, Polarization::H);
        let out = evolve(&h_control, &u1).unwrap();
        let a1_pattern = DetectionPattern::new(vec![(space1.spatial_group(Spatial::A1), 1)]);
        assert_abs_diff_eq!(project_pattern(&out, &a1_pattern).unwrap().0, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn element_spec_validates_mode_counts() {
        let space = ModeSpace::new(1);
        let bad = ElementSpec {
            kind: ElementKind::Hwp,
            modes: vec![Spatial::C, Spatial::T],
            angle: 0.1,
            convention: PbsConvention::Chip,
        };
        assert!(bad.compile(&space).is_err());
        let good = ElementSpec {
            kind: ElementKind::PbsHv,
            modes: vec![Spatial::A1, Spatial::C],
            angle: 0.0,
            convention: PbsConvention::Chip,
        };
        assert!(good.compile(&space).is_ok());
    }
}
