//! Quantum-optical description of high harmonic generation driven by
//! coherent, phase-averaged and photon-number driving fields.
//!
//! The pipeline runs: classical field of one coherent component
//! ([`field`]) → dipole response ([`dipole`]) → harmonic amplitudes and
//! spectra ([`harmonics`]), averaged over the Husimi distribution of the
//! driving state ([`phasespace`]); the harmonic mode states and their
//! coherence diagnostics live in [`quantum_state`].

pub mod cli;
pub mod config;
pub mod dipole;
pub mod error;
pub mod field;
pub mod harmonics;
pub mod io;
pub mod phasespace;
pub mod quantum_state;
pub mod scenarios;

pub use error::{Error, Result};
