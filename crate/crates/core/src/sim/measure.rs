use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::state::QuantumState;
use super::SimError;
use crate::ising::Hamiltonian;

/// `<H>` from exact basis probabilities.
pub fn expectation_value<S: QuantumState + ?Sized>(state: &S, h: &Hamiltonian) -> Result<f64, SimError> {
    if state.n_qubits() != h.n_qubits() {
        return Err(SimError::DimensionMismatch { expected: h.n_qubits(), got: state.n_qubits() });
    }
    Ok(expectation_from_probabilities(&state.probabilities(), &h.diagonal()))
}

pub fn expectation_from_probabilities(probs: &[f64], diagonal: &[f64]) -> f64 {
    probs.iter().zip(diagonal).map(|(p, e)| p * e).sum()
}

/// Basis indices drawn i.i.d. from `probs`, reproducible for a given seed.
pub fn sample_indices(probs: &[f64], shots: usize, seed: u64) -> Result<Vec<u64>, SimError> {
    let weights: Vec<f64> = probs.iter().map(|p| p.max(0.0)).collect();
    let dist = WeightedIndex::new(&weights).map_err(|e| SimError::InvalidDistribution(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..shots).map(|_| dist.sample(&mut rng) as u64).collect())
}

pub fn sample_bitstrings<S: QuantumState + ?Sized>(state: &S, shots: usize, seed: u64) -> Result<Vec<u64>, SimError> {
    sample_indices(&state.probabilities(), shots, seed)
}
