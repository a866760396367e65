//! Coupled coherent states for second-quantized bosons.
//!
//! A wavefunction is a superposition of K multimode coherent states whose
//! labels follow classical trajectories while their amplitudes obey a
//! linear system built from coherent-state overlaps. Two model Hamiltonians
//! are provided: a tunnelling mode coupled to a bath of identical
//! oscillators, and interacting bosons in a displaced harmonic trap.

pub mod basis;
pub mod error;
pub mod hamiltonians;
pub mod observables;
pub mod oracle;
pub mod propagator;
pub mod sampling;

pub use error::{Error, Result};
