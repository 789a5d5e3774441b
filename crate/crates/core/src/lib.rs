//! Simulation of teleporting a physical qubit into the logical space of the
//! nine-qubit Shor code.
//!
//! The crate is organized bottom-up:
//!
//! * [`sim`]: state vectors, Pauli strings, gates and a dense density-operator oracle.
//! * [`shor`]: the (9,1,3) code: code words, stabilizers, logical operators, syndromes.
//! * [`protocol`]: resource-state circuit, Bell-state measurement, teleportation.
//! * [`noise`]: Pauli channels, noisy resource sampling, seeded trajectories.
//! * [`metrics`]: fidelities, CHSH, count tables and Poisson error bars.
//! * [`estimate`]: three routes to the headline observables (closed form,
//!   density oracle, trajectories) plus shot sampling.
//! * [`fit`]: calibration of the noise model against target values.
//! * [`experiment`]: configuration, scenarios, reports and validation.

pub mod error;
pub mod estimate;
pub mod experiment;
pub mod fit;
#[doc(hidden)]
pub mod fuzzing;
pub mod metrics;
pub mod noise;
pub mod protocol;
pub mod shor;
pub mod sim;

pub use error::{Error, Result};
