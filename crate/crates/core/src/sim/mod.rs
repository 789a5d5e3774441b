//! Pure-state and density-operator simulation kernel.
//!
//! Qubit `k` is bit `k` of a basis-state index, so qubit 0 is the least
//! significant bit: `|q1 q0⟩ = |1 0⟩` is index 2. This convention holds
//! everywhere in the crate.

mod density;
mod gate;
mod pauli;
mod state;

pub use density::{ChannelOp, DensityOperator, MAX_DENSITY_QUBITS};
pub use gate::Gate;
pub use pauli::{Pauli, PauliString, PauliSum, Phase};
pub use state::{Measurement, Projector, StateVector, MAX_QUBITS};

pub use num_complex::Complex64;

pub(crate) use state::{apply_half_projector, pauli_expectation, pauli_image};

/// Normalization tolerance for states and traces.
pub const NORM_TOL: f64 = 1e-10;
/// Tolerance for U†U = I.
pub const UNITARITY_TOL: f64 = 1e-12;
/// Branch probabilities below this are treated as zero.
pub const PROB_FLOOR: f64 = 1e-12;
/// Lowest eigenvalue accepted for a density operator.
pub const EIGEN_FLOOR: f64 = -1e-9;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);
