//! Fock-space simulation of heralded linear-optical gates.
//!
//! The crate covers sparse multimode Fock states, passive optical elements
//! with a permanent-based oracle, detector heralding with inefficient
//! detectors, builders for the nonlinear sign gate and two controlled-phase
//! constructions, parameter search, and the analysis routines that produce
//! success-probability tables, sweeps and fidelity curves.

pub mod analysis;
pub mod circuit;
pub mod elements;
pub mod error;
pub mod fock;
pub mod gates;
pub mod herald;
pub mod optimize;
pub mod rng;

pub use error::{Error, Result};
