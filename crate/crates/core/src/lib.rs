//! Simulation and analysis toolkit for verifiable measurement-only blind
//! quantum computing.
//!
//! The crate is organised bottom-up:
//!
//! * [`pauli`] phase-tracked Pauli strings, secret keys and the conjugations
//!   the client applies to an attack.
//! * [`circuit`] a small Clifford + measurement circuit description shared by
//!   the two simulators.
//! * [`dense`] exact state-vector / density-matrix engine for at most ten
//!   qubits, used as an independent oracle.
//! * [`stab`] bit-packed stabilizer tableau simulator with Pauli-frame
//!   corrections.
//! * [`lattice`] simplified Raussendorf-Harrington-Goyal lattice with defect
//!   tubes, syndromes, chain classification and code distance.
//! * [`analytics`] exact trap-avoidance probabilities and the fooling bounds.
//! * [`protocols`] the trap protocol and the topological protocol as Pauli
//!   frame state machines plus the Monte-Carlo estimator.
//! * [`verify`] suites that check identities against the dense engine,
//!   exhaustive enumeration and state-level simulation.

pub mod analytics;
pub mod circuit;
pub mod dense;
pub mod error;
pub mod lattice;
pub mod pauli;
pub mod protocols;
pub mod stab;
pub mod verify;

pub use error::{Error, Result};
