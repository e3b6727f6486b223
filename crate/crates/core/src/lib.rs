//! Local unitary equivalence of multi-qudit quantum states.
//!
//! Necessary conditions come from spectral invariants over bipartitions
//! ([`invariants`]); sufficient conditions build explicit local unitaries
//! ([`constructors`]). [`pairability`] decides whether the entanglement
//! across a cut of a pure state is carried by independent two-qudit pairs.

pub mod catalog;
pub mod cli;
pub mod constructors;
pub mod error;
pub mod invariants;
pub mod io;
pub mod linalg;
pub mod pairability;
pub mod schmidt;
pub mod state;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, Spectrum};
pub use state::{Bipartition, MultiState, PartyDims, Side, StateKind};
