//! Simulator for a heralded linear-optical CNOT gate on polarization qubits.

pub mod design;
pub mod elements;
pub mod error;
pub mod experiment;
pub mod fock;
pub mod modes;
pub mod protocol;
pub mod qubit;
pub mod source;
pub mod stats;
pub mod tomography;

pub use error::{Error, Result};
