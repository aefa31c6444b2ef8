use serde::{Deserialize, Serialize};

use super::{QaoaError, Schedule};
use crate::ising::Hamiltonian;
use crate::sim::{pauli_z_rotation_circuit, Gate};

/// Gate of the ansatz, with parametrized rotations left symbolic.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Slot {
    Fixed(Gate),
    /// `Rz(scale * gamma)`
    CostRz { qubit: usize, scale: f64 },
    /// `Rx(scale * beta)`
    MixerRx { qubit: usize, scale: f64 },
}

/// Slots of one layer: a ladder per non-identity term, then the mixer.
pub(crate) fn layer_slots(h: &Hamiltonian) -> Vec<Slot> {
    let mut out = Vec::new();
    for t in h.terms().iter().filter(|t| !t.qubits.is_empty()) {
        let ladder = pauli_z_rotation_circuit(&t.qubits, 1.0).expect("non-empty term");
        for g in ladder {
            out.push(match g {
                Gate::Rz(q, _) => Slot::CostRz { qubit: q, scale: 2.0 * t.coefficient },
                g => Slot::Fixed(g),
            });
        }
    }
    out.extend((0..h.n_qubits()).map(|q| Slot::MixerRx { qubit: q, scale: 2.0 }));
    out
}

pub(crate) fn prep_slots(n: usize) -> Vec<Slot> {
    (0..n).map(|q| Slot::Fixed(Gate::H(q))).collect()
}

/// Hadamard layer, then per layer `exp(-i gamma c Z..Z)` for every term
/// and `Rx(2 beta)` on every qubit.
pub fn build_ansatz_circuit(h: &Hamiltonian, s: &Schedule) -> Result<Vec<Gate>, QaoaError> {
    s.check()?;
    let layer = layer_slots(h);
    let mut out: Vec<Gate> = prep_slots(h.n_qubits())
        .into_iter()
        .map(|slot| match slot {
            Slot::Fixed(g) => g,
            _ => unreachable!(),
        })
        .collect();
    for (&gamma, &beta) in s.gammas.iter().zip(&s.betas) {
        out.extend(layer.iter().map(|slot| match slot {
            Slot::Fixed(g) => g.clone(),
            Slot::CostRz { qubit, scale } => Gate::Rz(*qubit, scale * gamma),
            Slot::MixerRx { qubit, scale } => Gate::Rx(*qubit, scale * beta),
        }));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircuitMetrics {
    pub cnots: usize,
    pub single_qubit: usize,
    /// Longest chain of gates sharing qubits.
    pub depth: usize,
}

pub fn circuit_metrics(gates: &[Gate]) -> CircuitMetrics {
    let mut m = CircuitMetrics::default();
    let mut front: Vec<usize> = Vec::new();
    for g in gates {
        let qs = g.qubits();
        if g.is_two_qubit() {
            m.cnots += 1;
        } else {
            m.single_qubit += 1;
        }
        let top = qs.iter().copied().max().unwrap_or(0);
        if front.len() <= top {
            front.resize(top + 1, 0);
        }
        let level = qs.iter().map(|&q| front[q]).max().unwrap_or(0) + 1;
        for &q in &qs {
            front[q] = level;
        }
        m.depth = m.depth.max(level);
    }
    m
}
