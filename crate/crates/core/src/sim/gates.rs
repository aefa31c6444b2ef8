use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64 as C;
use num_traits::{One, Zero};

use super::kernel::M2;
use super::SimError;

/// Native gate set. Multi-qubit matrices use local index bit `j` for the
/// `j`-th listed qubit.
#[derive(Debug, Clone, PartialEq)]
pub enum Gate {
    X(usize),
    H(usize),
    /// `exp(-i theta Z / 2)`
    Rz(usize, f64),
    /// `exp(-i theta X / 2)`
    Rx(usize, f64),
    Cnot { control: usize, target: usize },
    Unitary1(usize, M2),
    Unitary2(usize, usize, Box<[C; 16]>),
}

impl Gate {
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::X(q) | Gate::H(q) | Gate::Rz(q, _) | Gate::Rx(q, _) | Gate::Unitary1(q, _) => vec![q],
            Gate::Cnot { control, target } => vec![control, target],
            Gate::Unitary2(a, b, _) => vec![a, b],
        }
    }

    pub fn is_two_qubit(&self) -> bool {
        self.qubits().len() == 2
    }

    /// Dense matrix in the local ordering of [`Gate::qubits`].
    pub fn matrix(&self) -> Vec<C> {
        match self {
            Gate::Cnot { .. } => {
                // control is local bit 0, target local bit 1
                let mut m = vec![C::zero(); 16];
                for i in 0..4usize {
                    let j = if i & 1 == 1 { i ^ 2 } else { i };
                    m[j * 4 + i] = C::one();
                }
                m
            }
            Gate::Unitary2(_, _, m) => m.to_vec(),
            g => {
                let m = g.matrix_1().expect("single-qubit gate");
                vec![m[0][0], m[0][1], m[1][0], m[1][1]]
            }
        }
    }

    pub(crate) fn matrix_1(&self) -> Option<M2> {
        Some(match *self {
            Gate::X(_) => pauli_x(),
            Gate::H(_) => {
                let h = C::new(FRAC_1_SQRT_2, 0.0);
                [[h, h], [h, -h]]
            }
            Gate::Rz(_, t) => rz(t),
            Gate::Rx(_, t) => rx(t),
            Gate::Unitary1(_, m) => m,
            _ => return None,
        })
    }

    pub(crate) fn check(&self, n_qubits: usize) -> Result<(), SimError> {
        let qs = self.qubits();
        if qs.iter().any(|&q| q >= n_qubits) || (qs.len() == 2 && qs[0] == qs[1]) {
            return Err(SimError::BadTarget(qs));
        }
        Ok(())
    }
}

pub fn pauli_x() -> M2 {
    [[C::zero(), C::one()], [C::one(), C::zero()]]
}

pub fn rz(theta: f64) -> M2 {
    let h = theta / 2.0;
    [[C::from_polar(1.0, -h), C::zero()], [C::zero(), C::from_polar(1.0, h)]]
}

pub fn rx(theta: f64) -> M2 {
    let (s, c) = (theta / 2.0).sin_cos();
    [[C::new(c, 0.0), C::new(0.0, -s)], [C::new(0.0, -s), C::new(c, 0.0)]]
}

/// `exp(-i angle Z...Z)` over `qubits` as a CNOT ladder onto the last qubit,
/// one `Rz(2 angle)`, and the mirrored ladder.
pub fn pauli_z_rotation_circuit(qubits: &[usize], angle: f64) -> Result<Vec<Gate>, SimError> {
    let (&last, rest) = qubits.split_last().ok_or(SimError::EmptyTuple)?;
    let ladder: Vec<Gate> = rest
        .iter()
        .zip(qubits.iter().skip(1))
        .map(|(&control, &target)| Gate::Cnot { control, target })
        .collect();
    let mut out = ladder.clone();
    out.push(Gate::Rz(last, 2.0 * angle));
    out.extend(ladder.into_iter().rev());
    Ok(out)
}
