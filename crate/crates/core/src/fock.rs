//! Exact multi-photon states and their evolution through linear optics.
//!
//! States are superpositions of occupation-number (Fock) basis states over a
//! flat list of modes. A linear-optical element is a unitary on the mode
//! space; the multi-photon transition amplitude between two Fock states is a
//! matrix permanent of the corresponding row/column-repeated submatrix,
//!
//! ```text
//! ⟨n′| U |n⟩ = per(U[n′, n]) / sqrt(∏ nᵢ! ∏ n′ⱼ!)
//! ```
//!
//! All types are immutable after construction and all operations are pure
//! functions.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, Matrix4};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::modes::{ModeSpace, Polarization, Spatial};
use crate::qubit::TwoQubitDensity;

/// Terms whose squared amplitude falls below this after an evolution are
/// dropped to bound state growth.
pub const AMPLITUDE_CUTOFF: f64 = 1e-14;

/// One occupation-number basis state; `occ[k]` photons in mode `k`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FockState {
    occ: Vec<u8>,
}

impl FockState {
    pub fn new(occ: Vec<u8>) -> FockState {
        FockState { occ }
    }

    pub fn vacuum(dim: usize) -> FockState {
        FockState { occ: vec![0; dim] }
    }

    /// Single photon in mode `mode`.
    pub fn single(dim: usize, mode: usize) -> FockState {
        let mut occ = vec![0; dim];
        occ[mode] = 1;
        FockState { occ }
    }

    pub fn dim(&self) -> usize {
        self.occ.len()
    }

    pub fn occupation(&self, mode: usize) -> u8 {
        self.occ[mode]
    }

    pub fn occupations(&self) -> &[u8] {
        &self.occ
    }

    pub fn total_photons(&self) -> u32 {
        self.occ.iter().map(|&n| n as u32).sum()
    }

    fn factorial_product(&self) -> f64 {
        self.occ.iter().map(|&n| factorial(n as u32)).product()
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// A pure state: complex amplitudes over Fock basis states.
///
/// Normalized states have squared norm 1; sub-normalized states represent
/// post-selected branches and carry their probability in the norm.
#[derive(Debug, Clone)]
pub struct PureState {
    dim: usize,
    terms: BTreeMap<FockState, Complex64>,
}

impl PureState {
    /// The zero-photon vacuum with unit amplitude.
    pub fn vacuum(dim: usize) -> PureState {
        let mut terms = BTreeMap::new();
        terms.insert(FockState::vacuum(dim), Complex64::new(1.0, 0.0));
        PureState { dim, terms }
    }

    /// The zero state (no terms). Represents an impossible branch.
    pub fn zero(dim: usize) -> PureState {
        PureState {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn from_terms(dim: usize, terms: BTreeMap<FockState, Complex64>) -> PureState {
        debug_assert!(terms.keys().all(|f| f.dim() == dim));
        PureState { dim, terms }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> impl Iterator<Item = (&FockState, &Complex64)> {
        self.terms.iter()
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn amplitude(&self, fock: &FockState) -> Complex64 {
        self.terms
            .get(fock)
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().map(|a| a.norm_sqr()).sum()
    }

    /// Total photon number if it is sharp across all terms.
    pub fn total_photons(&self) -> Option<u32> {
        let mut iter = self.terms.keys();
        let first = iter.next()?.total_photons();
        iter.all(|f| f.total_photons() == first).then_some(first)
    }

    pub fn scaled(&self, factor: Complex64) -> PureState {
        PureState {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .map(|(f, a)| (f.clone(), a * factor))
                .collect(),
        }
    }

    pub fn normalized(&self) -> PureState {
        let n = self.norm_sqr().sqrt();
        assert!(n > 0.0, "cannot normalize the zero state");
        self.scaled(Complex64::new(1.0 / n, 0.0))
    }

    pub fn add(&self, other: &PureState) -> PureState {
        assert_eq!(self.dim, other.dim);
        let mut terms = self.terms.clone();
        for (f, a) in &other.terms {
            *terms.entry(f.clone()).or_insert(Complex64::new(0.0, 0.0)) += a;
        }
        PureState { dim: self.dim, terms }
    }

    /// Apply a sum of creation-operator products to this state.
    ///
    /// Each term is `(coefficient, [mode, mode, ...])` standing for
    /// `coefficient · a†_{m1} a†_{m2} ...`; the result is the (generally
    /// unnormalized) state after applying the full sum.
    pub fn apply_creation_sum(&self, ops: &[(Complex64, Vec<usize>)]) -> PureState {
        let mut out: BTreeMap<FockState, Complex64> = BTreeMap::new();
        for (fock, amp) in &self.terms {
            for (coeff, modes) in ops {
                let mut occ = fock.occ.clone();
                let mut factor = *coeff * amp;
                for &m in modes {
                    factor *= ((occ[m] as f64) + 1.0).sqrt();
                    occ[m] += 1;
                }
                if factor.norm_sqr() > 0.0 {
                    *out.entry(FockState::new(occ))
                        .or_insert(Complex64::new(0.0, 0.0)) += factor;
                }
            }
        }
        out.retain(|_, a| a.norm_sqr() > 0.0);
        PureState {
            dim: self.dim,
            terms: out,
        }
    }

    /// Apply a single-photon creation operator `Σ c_k a†_k`.
    pub fn apply_creation(&self, op: &[(usize, Complex64)]) -> PureState {
        let ops: Vec<(Complex64, Vec<usize>)> =
            op.iter().map(|&(m, c)| (c, vec![m])).collect();
        self.apply_creation_sum(&ops)
    }

    fn drop_small(mut self, cutoff: f64) -> PureState {
        self.terms.retain(|_, a| a.norm_sqr() >= cutoff);
        self
    }
}

/// A unitary on the mode space. Checked for `U†U = I` at construction.
#[derive(Debug, Clone)]
pub struct ModeUnitary {
    matrix: DMatrix<Complex64>,
}

impl ModeUnitary {
    pub const UNITARITY_TOL: f64 = 1e-10;

    pub fn new(matrix: DMatrix<Complex64>) -> Result<ModeUnitary> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::NonSquareMatrix {
                rows: matrix.nrows(),
                cols: matrix.ncols(),
            });
        }
        let n = matrix.nrows();
        let product = matrix.adjoint() * &matrix;
        let mut deviation = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let expected = if i == j { 1.0 } else { 0.0 };
                deviation = deviation.max((product[(i, j)] - expected).norm());
            }
        }
        if deviation > Self::UNITARITY_TOL {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(ModeUnitary { matrix })
    }

    pub fn identity(dim: usize) -> ModeUnitary {
        ModeUnitary {
            matrix: DMatrix::identity(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    /// `self ∘ first`: the unitary that applies `first`, then `self`.
    pub fn compose(&self, first: &ModeUnitary) -> ModeUnitary {
        assert_eq!(self.dim(), first.dim());
        ModeUnitary {
            matrix: &self.matrix * &first.matrix,
        }
    }
}

/// Matrix permanent by Ryser's inclusion-exclusion formula with Gray-code
/// updates, O(2ⁿ·n). Exact up to floating point for the small matrices used
/// here (n ≤ 8).
pub fn permanent(m: &DMatrix<Complex64>) -> Result<Complex64> {
    if m.nrows() != m.ncols() {
        return Err(Error::NonSquareMatrix {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    let n = m.nrows();
    let mut buf = [Complex64::new(0.0, 0.0); 64];
    for r in 0..n {
        for col in 0..n {
            buf[r * n + col] = m[(r, col)];
        }
    }
    Ok(permanent_flat(n, &buf))
}

/// Permanent of an `n x n` matrix stored row-major in `flat` (`n ≤ 8`).
fn permanent_flat(n: usize, flat: &[Complex64]) -> Complex64 {
    debug_assert!(n <= 8);
    if n == 0 {
        return Complex64::new(1.0, 0.0);
    }
    // Row sums over the current column subset, updated one column at a time.
    let mut sums = [Complex64::new(0.0, 0.0); 8];
    let mut total = Complex64::new(0.0, 0.0);
    let mut gray: u64 = 0;
    for k in 1u64..(1 << n) {
        let next_gray = k ^ (k >> 1);
        let changed = (gray ^ next_gray).trailing_zeros() as usize;
        let added = next_gray & (1 << changed) != 0;
        for (i, s) in sums.iter_mut().enumerate().take(n) {
            let entry = flat[i * n + changed];
            if added {
                *s += entry;
            } else {
                *s -= entry;
            }
        }
        gray = next_gray;
        let mut prod = sums[0];
        for s in sums.iter().take(n).skip(1) {
            prod *= *s;
        }
        let sign = if (n as u32 - next_gray.count_ones()) % 2 == 0 {
            1.0
        } else {
            -1.0
        };
        total += prod * sign;
    }
    total
}

/// Evolve a state through a mode unitary.
///
/// Photon number is conserved and the squared norm is preserved up to the
/// amplitude cutoff. Errors if the state and unitary dimensions differ.
pub fn evolve(state: &PureState, u: &ModeUnitary) -> Result<PureState> {
    if state.dim() != u.dim() {
        return Err(Error::DimensionMismatch {
            state: state.dim(),
            operator: u.dim(),
        });
    }
    let dim = state.dim();
    let mut out: BTreeMap<FockState, Complex64> = BTreeMap::new();
    for (fock_in, amp) in state.terms() {
        let n = fock_in.total_photons();
        if n == 0 {
            *out.entry(fock_in.clone())
                .or_insert(Complex64::new(0.0, 0.0)) += amp;
            continue;
        }
        if n > 8 {
            return Err(Error::InvalidParameter(format!(
                "evolution supports at most 8 photons per term, got {n}"
            )));
        }
        let cols: Vec<usize> = (0..dim)
            .flat_map(|m| std::iter::repeat_n(m, fock_in.occupation(m) as usize))
            .collect();
        let in_norm = fock_in.factorial_product().sqrt();
        // Only output modes reachable from the occupied inputs can carry
        // photons; everything else has a zero permanent.
        let reachable: Vec<usize> = (0..dim)
            .filter(|&j| cols.iter().any(|&i| u.matrix()[(j, i)].norm_sqr() > 0.0))
            .collect();
        let n = n as usize;
        let mut rows = Vec::with_capacity(n);
        let mut sub = [Complex64::new(0.0, 0.0); 64];
        for_each_composition(n, reachable.len(), &mut |counts| {
            let mut occ = vec![0u8; dim];
            rows.clear();
            for (slot, &count) in counts.iter().enumerate() {
                if count > 0 {
                    let mode = reachable[slot];
                    occ[mode] = count as u8;
                    rows.extend(std::iter::repeat_n(mode, count));
                }
            }
            for (r, &row) in rows.iter().enumerate() {
                for (k, &col) in cols.iter().enumerate() {
                    sub[r * n + k] = u.matrix()[(row, col)];
                }
            }
            let per = permanent_flat(n, &sub);
            if per.norm_sqr() == 0.0 {
                return;
            }
            let fock_out = FockState::new(occ);
            let out_norm = fock_out.factorial_product().sqrt();
            *out.entry(fock_out).or_insert(Complex64::new(0.0, 0.0)) +=
                amp * per / (in_norm * out_norm);
        });
    }
    Ok(PureState { dim, terms: out }.drop_small(AMPLITUDE_CUTOFF))
}

/// Call `f` with every way of distributing `total` photons over `slots`
/// modes, in a fixed lexicographic order.
fn for_each_composition(total: usize, slots: usize, f: &mut impl FnMut(&[usize])) {
    if slots == 0 {
        if total == 0 {
            f(&[]);
        }
        return;
    }
    let mut counts = vec![0usize; slots];
    fn recurse(
        counts: &mut Vec<usize>,
        slot: usize,
        remaining: usize,
        f: &mut impl FnMut(&[usize]),
    ) {
        if slot == counts.len() - 1 {
            counts[slot] = remaining;
            f(counts);
            return;
        }
        for here in (0..=remaining).rev() {
            counts[slot] = here;
            recurse(counts, slot + 1, remaining - here, f);
        }
        counts[slot] = 0;
    }
    recurse(&mut counts, 0, total, f);
}

/// One detector group with the exact photon count it must register.
///
/// A group is the set of mode indices behind one detector (all internal
/// labels of one spatial+polarization output, say), or any other disjoint
/// set of modes.
#[derive(Debug, Clone)]
pub struct DetectionPattern {
    pub groups: Vec<(Vec<usize>, u32)>,
}

impl DetectionPattern {
    pub fn new(groups: Vec<(Vec<usize>, u32)>) -> DetectionPattern {
        DetectionPattern { groups }
    }
}

/// Project a state onto a detection pattern.
///
/// Returns the branch probability (squared norm of the matching component)
/// and the renormalized conditional state. Modes not covered by any group
/// are unconstrained. A zero-probability branch returns the zero state.
pub fn project_pattern(state: &PureState, pattern: &DetectionPattern) -> Result<(f64, PureState)> {
    let mut seen = vec![false; state.dim()];
    for (group, _) in &pattern.groups {
        for &m in group {
            if m >= state.dim() {
                return Err(Error::DimensionMismatch {
                    state: state.dim(),
                    operator: m + 1,
                });
            }
            if seen[m] {
                return Err(Error::OverlappingGroups { mode: m });
            }
            seen[m] = true;
        }
    }
    let mut terms: BTreeMap<FockState, Complex64> = BTreeMap::new();
    let mut probability = 0.0;
    for (fock, amp) in state.terms() {
        let matches = pattern.groups.iter().all(|(group, count)| {
            group
                .iter()
                .map(|&m| fock.occupation(m) as u32)
                .sum::<u32>()
                == *count
        });
        if matches {
            probability += amp.norm_sqr();
            terms.insert(fock.clone(), *amp);
        }
    }
    if probability <= 0.0 {
        return Ok((0.0, PureState::zero(state.dim())));
    }
    let conditional = PureState {
        dim: state.dim(),
        terms,
    }
    .scaled(Complex64::new(1.0 / probability.sqrt(), 0.0));
    Ok((probability, conditional))
}

/// Reduce a state holding exactly one photon in each of two spatial modes to
/// the 4x4 polarization density matrix of those two photons.
///
/// Internal labels and the occupations of all other modes are traced out, so
/// partial distinguishability shows up as reduced purity. Basis order is
/// `HH, HV, VH, VV` with the first requested mode as the first qubit.
pub fn reduce_to_qubits(
    state: &PureState,
    space: &ModeSpace,
    spatial: [Spatial; 2],
) -> Result<TwoQubitDensity> {
    // environment key -> 2x2 polarization amplitudes of (first, second) photon
    let mut branches: BTreeMap<Vec<u8>, [[Complex64; 2]; 2]> = BTreeMap::new();
    let groups = [space.spatial_group(spatial[0]), space.spatial_group(spatial[1])];
    for (fock, amp) in state.terms() {
        let mut pol = [Polarization::H; 2];
        let mut internal = [0usize; 2];
        for (slot, group) in groups.iter().enumerate() {
            let mut found = 0u32;
            for &m in group {
                let n = fock.occupation(m) as u32;
                if n > 0 {
                    found += n;
                    let label = space.label(m);
                    pol[slot] = label.polarization;
                    internal[slot] = label.internal;
                }
            }
            if found != 1 {
                return Err(Error::PhotonCount { found });
            }
        }
        // Environment: occupations outside the two modes plus the internal
        // labels of the two system photons.
        let mut env: Vec<u8> = fock.occupations().to_vec();
        for group in &groups {
            for &m in group {
                env[m] = 0;
            }
        }
        env.push(internal[0] as u8);
        env.push(internal[1] as u8);
        let entry = branches
            .entry(env)
            .or_insert([[Complex64::new(0.0, 0.0); 2]; 2]);
        entry[pol[0].index()][pol[1].index()] += amp;
    }
    let mut rho = Matrix4::<Complex64>::zeros();
    for amps in branches.values() {
        for p1 in 0..2 {
            for p2 in 0..2 {
                for q1 in 0..2 {
                    for q2 in 0..2 {
                        rho[(2 * p1 + p2, 2 * q1 + q2)] +=
                            amps[p1][p2] * amps[q1][q2].conj();
                    }
                }
            }
        }
    }
    Ok(TwoQubitDensity::new(rho))
}
