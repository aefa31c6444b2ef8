//! Exact simulation of small registers, pure or mixed.

mod channel;
mod device;
mod gates;
pub(crate) mod kernel;
mod measure;
mod noise;
mod state;

pub use channel::{apply_damping_channel, damping_params_from_coherence, KrausChannel};
pub use device::{khz_to_rad_per_ns, DeviceModel, EdgeSpec, QubitSpec, DEFAULT_CNOT_NS, DEFAULT_SQ_GATE_NS};
pub use gates::{pauli_x, pauli_z_rotation_circuit, rx, rz, Gate};
pub use kernel::M2;
pub use measure::{expectation_from_probabilities, expectation_value, sample_bitstrings, sample_indices};
pub use noise::{
    apply_noisy_gate, build_xi_generator, cr_evolution, cr_unitary, damping_after, ecr_two_pulse, ecr_unitary, noisy_cnot,
    noisy_cnot_unitary, run_circuit, CrParams, CrScheme, LocalUnitary, NoiseConfig, NoiseMode, XiTerm,
};
pub use state::{DensityMatrix, QuantumState, StateVector};

use thiserror::Error;

/// Largest register held as a dense density matrix.
pub const MAX_DENSITY_QUBITS: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("bad target qubits {0:?}")]
    BadTarget(Vec<usize>),
    #[error("bad qubit pair ({0}, {1})")]
    BadPair(usize, usize),
    #[error("empty qubit tuple")]
    EmptyTuple,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid coherence parameters: {0}")]
    InvalidCoherence(String),
    #[error("invalid channel: {0}")]
    InvalidChannel(String),
    #[error("channels need a density matrix")]
    NeedsDensityMatrix,
    #[error("{0} qubits exceed the density-matrix cap of {MAX_DENSITY_QUBITS}")]
    TooManyQubits(usize),
    #[error("schema error at {0}")]
    Schema(String),
    #[error("qubit {qubit}: T2 = {t2_us} us is not within (0, 2 T1 = {} us]", 2.0 * t1_us)]
    Coherence { qubit: usize, t1_us: f64, t2_us: f64 },
    #[error("mapping {0:?} is not injective into the device")]
    BadMapping(Vec<usize>),
    #[error("cannot sample: {0}")]
    InvalidDistribution(String),
    #[error("{0}")]
    Io(String),
}
