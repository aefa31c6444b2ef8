use num_complex::Complex64 as C;
use num_traits::{One, Zero};

use super::channel::KrausChannel;
use super::gates::Gate;
use super::kernel::{self, M2};
use super::{SimError, MAX_DENSITY_QUBITS};

/// Operations shared by pure and mixed registers.
pub trait QuantumState {
    fn n_qubits(&self) -> usize;
    fn apply_gate(&mut self, gate: &Gate) -> Result<(), SimError>;
    /// Dense unitary on `qubits`, local bit `j` for `qubits[j]`.
    fn apply_unitary(&mut self, qubits: &[usize], m: &[C]) -> Result<(), SimError>;
    fn apply_channel(&mut self, channel: &KrausChannel) -> Result<(), SimError>;
    /// Computational-basis distribution.
    fn probabilities(&self) -> Vec<f64>;
}

fn check_qubits(qubits: &[usize], n: usize, dim: usize) -> Result<(), SimError> {
    let distinct = qubits.iter().enumerate().all(|(i, q)| !qubits[..i].contains(q));
    if qubits.is_empty() || !distinct || qubits.iter().any(|&q| q >= n) {
        return Err(SimError::BadTarget(qubits.to_vec()));
    }
    let side = 1usize << qubits.len();
    if dim != side * side {
        return Err(SimError::DimensionMismatch { expected: side * side, got: dim });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<C>,
}

impl StateVector {
    /// `|0...0>`
    pub fn new(n: usize) -> Self {
        Self::basis(n, 0)
    }

    pub fn basis(n: usize, index: usize) -> Self {
        let mut amps = vec![C::zero(); 1 << n];
        amps[index] = C::one();
        StateVector { n, amps }
    }

    /// `|+>^n`
    pub fn plus(n: usize) -> Self {
        let a = C::new((1.0 / (1u64 << n) as f64).sqrt(), 0.0);
        StateVector { n, amps: vec![a; 1 << n] }
    }

    pub fn from_amplitudes(amps: Vec<C>) -> Result<Self, SimError> {
        if !amps.len().is_power_of_two() {
            return Err(SimError::DimensionMismatch { expected: amps.len().next_power_of_two(), got: amps.len() });
        }
        Ok(StateVector { n: amps.len().trailing_zeros() as usize, amps })
    }

    pub fn amplitudes(&self) -> &[C] {
        &self.amps
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [C] {
        &mut self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn inner(&self, other: &StateVector) -> C {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }
}

impl QuantumState for StateVector {
    fn n_qubits(&self) -> usize {
        self.n
    }

    fn apply_gate(&mut self, gate: &Gate) -> Result<(), SimError> {
        gate.check(self.n)?;
        match *gate {
            Gate::Cnot { control, target } => kernel::apply_cnot(&mut self.amps, control, target),
            Gate::Unitary2(a, b, ref m) => kernel::apply_dense(&mut self.amps, &[a, b], &m[..]),
            ref g => {
                let m = g.matrix_1().expect("single-qubit gate");
                kernel::apply_1(&mut self.amps, g.qubits()[0], &m);
            }
        }
        Ok(())
    }

    fn apply_unitary(&mut self, qubits: &[usize], m: &[C]) -> Result<(), SimError> {
        check_qubits(qubits, self.n, m.len())?;
        kernel::apply_dense(&mut self.amps, qubits, m);
        Ok(())
    }

    fn apply_channel(&mut self, _: &KrausChannel) -> Result<(), SimError> {
        Err(SimError::NeedsDensityMatrix)
    }

    fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }
}

/// Row-major `2^n x 2^n` density matrix. Entry `(r, c)` sits at
/// `r * 2^n + c`, so the column index occupies bits `0..n` and the row index
/// bits `n..2n` of the flat position.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n: usize,
    data: Vec<C>,
}

impl DensityMatrix {
    pub fn new(n: usize) -> Self {
        Self::from_pure(&StateVector::new(n))
    }

    pub fn from_pure(psi: &StateVector) -> Self {
        let a = psi.amplitudes();
        let data = a.iter().flat_map(|r| a.iter().map(move |c| r * c.conj())).collect();
        DensityMatrix { n: psi.n_qubits(), data }
    }

    pub fn from_matrix(n: usize, data: Vec<C>) -> Result<Self, SimError> {
        let dim = 1usize << (2 * n);
        if data.len() != dim {
            return Err(SimError::DimensionMismatch { expected: dim, got: data.len() });
        }
        Ok(DensityMatrix { n, data })
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn get(&self, r: usize, c: usize) -> C {
        self.data[r * self.dim() + c]
    }

    /// Flat row-major entries.
    pub fn matrix(&self) -> &[C] {
        &self.data
    }

    pub(crate) fn matrix_mut(&mut self) -> &mut [C] {
        &mut self.data
    }

    pub fn trace(&self) -> C {
        (0..self.dim()).map(|i| self.get(i, i)).sum()
    }

    /// Largest `|rho - rho^dagger|` entry.
    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for r in 0..d {
            for c in r..d {
                worst = worst.max((self.get(r, c) - self.get(c, r).conj()).norm());
            }
        }
        worst
    }

    pub fn purity(&self) -> f64 {
        // tr(rho^2) = sum |rho_rc|^2 for Hermitian rho
        self.data.iter().map(|x| x.norm_sqr()).sum()
    }

    fn apply_both(&mut self, q: usize, m: &M2) {
        kernel::apply_1(&mut self.data, self.n + q, m);
        kernel::apply_1(&mut self.data, q, &kernel::conj_m2(m));
    }

    pub(crate) fn apply_superop(&mut self, q: usize, s: &[C; 16]) {
        kernel::apply_dense(&mut self.data, &[q, self.n + q], &s[..]);
    }
}

impl QuantumState for DensityMatrix {
    fn n_qubits(&self) -> usize {
        self.n
    }

    fn apply_gate(&mut self, gate: &Gate) -> Result<(), SimError> {
        gate.check(self.n)?;
        match *gate {
            Gate::Cnot { control, target } => {
                kernel::apply_cnot(&mut self.data, self.n + control, self.n + target);
                kernel::apply_cnot(&mut self.data, control, target);
            }
            Gate::Unitary2(a, b, ref m) => self.apply_unitary(&[a, b], &m[..])?,
            ref g => {
                let m = g.matrix_1().expect("single-qubit gate");
                self.apply_both(g.qubits()[0], &m);
            }
        }
        Ok(())
    }

    fn apply_unitary(&mut self, qubits: &[usize], m: &[C]) -> Result<(), SimError> {
        check_qubits(qubits, self.n, m.len())?;
        let rows: Vec<usize> = qubits.iter().map(|q| q + self.n).collect();
        kernel::apply_dense(&mut self.data, &rows, m);
        let conj: Vec<C> = m.iter().map(|x| x.conj()).collect();
        kernel::apply_dense(&mut self.data, qubits, &conj);
        Ok(())
    }

    fn apply_channel(&mut self, channel: &KrausChannel) -> Result<(), SimError> {
        if channel.qubit() >= self.n {
            return Err(SimError::BadTarget(vec![channel.qubit()]));
        }
        self.apply_superop(channel.qubit(), &channel.superoperator());
        Ok(())
    }

    fn probabilities(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.get(i, i).re).collect()
    }
}

impl DensityMatrix {
    /// Reject registers too large for dense storage.
    pub fn check_size(n: usize) -> Result<(), SimError> {
        if n > MAX_DENSITY_QUBITS {
            return Err(SimError::TooManyQubits(n));
        }
        Ok(())
    }
}
