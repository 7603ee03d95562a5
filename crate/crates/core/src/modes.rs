//! Labelled optical modes of the four-waveguide gate.
//!
//! A mode is identified by its waveguide (spatial mode), its polarization and
//! a small internal index labelling the temporal-spectral wavepacket. The
//! internal index is what lets two photons of equal polarization be partially
//! distinguishable: a photon in wavepacket `√x·|0⟩ + √(1-x)·|1⟩` has squared
//! overlap `x` with a photon in wavepacket `|0⟩`.
//!
//! The flat index order is fixed (spatial, then polarization, then internal)
//! so that matrices built on top of it are reproducible.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The four waveguides of the gate: control, target and the two ancillas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Spatial {
    C,
    T,
    A1,
    A2,
}

impl Spatial {
    pub const ALL: [Spatial; 4] = [Spatial::C, Spatial::T, Spatial::A1, Spatial::A2];

    pub fn index(self) -> usize {
        match self {
            Spatial::C => 0,
            Spatial::T => 1,
            Spatial::A1 => 2,
            Spatial::A2 => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Spatial::C => "c",
            Spatial::T => "t",
            Spatial::A1 => "a1",
            Spatial::A2 => "a2",
        }
    }

    pub fn parse(s: &str) -> Option<Spatial> {
        match s {
            "c" => Some(Spatial::C),
            "t" => Some(Spatial::T),
            "a1" => Some(Spatial::A1),
            "a2" => Some(Spatial::A2),
            _ => None,
        }
    }
}

/// Photon polarization. `H` encodes logic 0, `V` logic 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Polarization {
    H,
    V,
}

impl Polarization {
    pub const BOTH: [Polarization; 2] = [Polarization::H, Polarization::V];

    pub fn index(self) -> usize {
        match self {
            Polarization::H => 0,
            Polarization::V => 1,
        }
    }

    pub fn other(self) -> Polarization {
        match self {
            Polarization::H => Polarization::V,
            Polarization::V => Polarization::H,
        }
    }
}

/// Full label of one optical mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModeLabel {
    pub spatial: Spatial,
    pub polarization: Polarization,
    pub internal: usize,
}

/// The indexed mode space: 4 spatial modes x 2 polarizations x `n_internal`
/// wavepacket labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModeSpace {
    n_internal: usize,
}

impl ModeSpace {
    pub fn new(n_internal: usize) -> ModeSpace {
        assert!(
            n_internal >= 1,
            "mode space needs at least one internal label"
        );
        ModeSpace { n_internal }
    }

    pub fn n_internal(&self) -> usize {
        self.n_internal
    }

    /// Total number of modes.
    pub fn dim(&self) -> usize {
        8 * self.n_internal
    }

    /// Flat index of a label: spatial-major, then polarization, then internal.
    pub fn index(&self, label: ModeLabel) -> usize {
        debug_assert!(label.internal < self.n_internal);
        (label.spatial.index() * 2 + label.polarization.index()) * self.n_internal + label.internal
    }

    pub fn index_of(&self, spatial: Spatial, pol: Polarization, internal: usize) -> usize {
        self.index(ModeLabel {
            spatial,
            polarization: pol,
            internal,
        })
    }

    pub fn label(&self, index: usize) -> ModeLabel {
        debug_assert!(index < self.dim());
        let internal = index % self.n_internal;
        let rest = index / self.n_internal;
        let polarization = if rest % 2 == 0 {
            Polarization::H
        } else {
            Polarization::V
        };
        let spatial = Spatial::ALL[rest / 2];
        ModeLabel {
            spatial,
            polarization,
            internal,
        }
    }

    /// All internal-label indices behind one detector (one spatial output,
    /// one analyzer port). A threshold APD cannot resolve the internal label.
    pub fn detector_group(&self, spatial: Spatial, pol: Polarization) -> Vec<usize> {
        (0..self.n_internal)
            .map(|i| self.index_of(spatial, pol, i))
            .collect()
    }

    /// All mode indices of one waveguide (both polarizations, all internals).
    pub fn spatial_group(&self, spatial: Spatial) -> Vec<usize> {
        let mut v = self.detector_group(spatial, Polarization::H);
        v.extend(self.detector_group(spatial, Polarization::V));
        v
    }
}

/// Assignment of the four physical chip modes (top to bottom) to logical
/// roles. The chip couples physical modes (1,2) at the first splitter and
/// (3,4) at the second, so modes 1-2 must carry `{a1, c}` and modes 3-4
/// `{a2, t}` in either order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Wiring {
    pub roles: [Spatial; 4],
}

impl Default for Wiring {
    fn default() -> Self {
        Wiring {
            roles: [Spatial::A1, Spatial::C, Spatial::A2, Spatial::T],
        }
    }
}

impl Wiring {
    pub fn validate(&self) -> Result<()> {
        let first: std::collections::BTreeSet<Spatial> =
            [self.roles[0], self.roles[1]].into_iter().collect();
        let second: std::collections::BTreeSet<Spatial> =
            [self.roles[2], self.roles[3]].into_iter().collect();
        let want_first: std::collections::BTreeSet<Spatial> =
            [Spatial::A1, Spatial::C].into_iter().collect();
        let want_second: std::collections::BTreeSet<Spatial> =
            [Spatial::A2, Spatial::T].into_iter().collect();
        if first != want_first || second != want_second {
            return Err(Error::InvalidParameter(format!(
                "wiring {:?} does not couple a1 with c and a2 with t",
                self.roles.map(Spatial::name)
            )));
        }
        Ok(())
    }
}
