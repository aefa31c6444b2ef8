//! Variational quantum factoring.
//!
//! The pipeline runs in four stages:
//!
//! * [`factoring`] writes `p * q = N` as one integer clause per output bit and
//!   shrinks the clause set with classical deduction rules.
//! * [`ising`] squares and sums the surviving clauses into a diagonal
//!   Pauli-Z cost Hamiltonian.
//! * [`sim`] simulates circuits exactly, either as pure states or as density
//!   matrices with damping channels and a ZZ-perturbed cross-resonance CNOT.
//! * [`qaoa`] builds the alternating-operator ansatz and trains it layer by
//!   layer, reporting energy and success rate.

pub mod factoring;
pub mod ising;
pub mod instances;
pub mod qaoa;
pub mod scaling;
pub mod sim;

use thiserror::Error;

/// Any failure along the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Factoring(#[from] factoring::FactoringError),
    #[error(transparent)]
    Ising(#[from] ising::IsingError),
    #[error(transparent)]
    Sim(#[from] sim::SimError),
    #[error(transparent)]
    Qaoa(#[from] qaoa::QaoaError),
}
