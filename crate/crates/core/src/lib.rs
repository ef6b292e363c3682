//! Pulse-level simulator for the Grover search protocol on Rydberg-blockaded
//! atoms.
//!
//! The crate compiles the microwave/laser pulse program for a marked element,
//! evolves quantum-jump (Monte Carlo wavefunction) trajectories under
//! realistic decay and dephasing, and cross-checks trajectory ensembles
//! against a dense Lindblad master-equation integrator. Both the
//! direct-blockade and ancilla-mediated interaction configurations are
//! supported for register sizes k ≤ 4.

pub mod analysis;
pub mod config;
pub mod error;
pub mod mcwf;
pub mod mesolve;
pub mod runner;
pub mod schedule;
pub mod hilbert;
pub mod linalg;
pub mod model;

pub use error::{Error, Result};
