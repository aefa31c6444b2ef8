//! Qubit and term counts for random biprimes, grouped by bit length.

use num_bigint::BigUint;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::factoring::{is_biprime, preprocess_number, RuleOptions};
use crate::ising::compile_hamiltonian;
use crate::Error;

/// One sampled number. `local1..local4` count Hamiltonian terms by locality.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScalingRow {
    #[serde(rename = "N")]
    pub number: u64,
    #[serde(rename = "n")]
    pub bits: u32,
    pub qubits_after: usize,
    pub local1: usize,
    pub local2: usize,
    pub local3: usize,
    pub local4: usize,
}

/// Odd biprimes with exactly `bits` bits, ascending.
pub fn odd_biprimes(bits: u32) -> Vec<u64> {
    if !(2..=40).contains(&bits) {
        return Vec::new();
    }
    ((1u64 << (bits - 1)) | 1..1u64 << bits).step_by(2).filter(|&n| is_biprime(n)).collect()
}

/// Up to `samples` odd biprimes of the given length, drawn without
/// replacement and returned ascending. Every candidate is returned when
/// there are no more than `samples`.
pub fn sample_biprimes(bits: u32, samples: usize, seed: u64) -> Vec<u64> {
    let all = odd_biprimes(bits);
    if all.len() <= samples {
        return all;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(u64::from(bits)));
    let mut picked: Vec<u64> = sample(&mut rng, all.len(), samples).into_iter().map(|i| all[i]).collect();
    picked.sort_unstable();
    picked
}

pub fn scaling_row(n: u64, max_passes: usize, opts: &RuleOptions) -> Result<ScalingRow, Error> {
    let (system, report) = preprocess_number(&BigUint::from(n), max_passes, opts)?;
    let hist = compile_hamiltonian(&system)?.locality_histogram();
    let count = |k| hist.get(&k).copied().unwrap_or(0);
    Ok(ScalingRow {
        number: n,
        bits: u64::BITS - n.leading_zeros(),
        qubits_after: report.unknowns_after,
        local1: count(1),
        local2: count(2),
        local3: count(3),
        local4: count(4),
    })
}

/// Rows for every bit length in `min_bits..=max_bits`, ordered by length
/// then by `N`.
pub fn scaling_study(
    min_bits: u32,
    max_bits: u32,
    samples: usize,
    seed: u64,
    max_passes: usize,
    opts: &RuleOptions,
) -> Result<Vec<ScalingRow>, Error> {
    let mut rows = Vec::new();
    for bits in min_bits..=max_bits {
        for n in sample_biprimes(bits, samples, seed) {
            rows.push(scaling_row(n, max_passes, opts)?);
        }
    }
    Ok(rows)
}
