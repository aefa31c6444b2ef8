//! Diagonal cost Hamiltonian `H = sum_i C_i^2` over the residual unknowns.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::factoring::{BitVar, ClauseSystem, LinExpr};

/// Largest register the brute-force oracles accept.
pub const MAX_QUBITS: usize = 24;

/// Largest register the symbolic expansion accepts (one mask bit per qubit).
pub const MAX_EXPANSION: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IsingError {
    #[error("{0} unknowns exceed the expansion bound of {MAX_EXPANSION}")]
    TooManyUnknowns(usize),
    #[error("{0} qubits exceed the brute-force bound of {MAX_QUBITS}")]
    TooManyQubits(usize),
    #[error("bitstring has length {got}, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("variable {0} has no qubit")]
    UnmappedVariable(BitVar),
    #[error("invalid hamiltonian document: {0}")]
    Schema(String),
}

/// `coefficient * Z_{q1} Z_{q2} ...`; an empty tuple is the identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PauliZTerm {
    pub qubits: Vec<usize>,
    pub coefficient: f64,
}

impl PauliZTerm {
    pub fn locality(&self) -> usize {
        self.qubits.len()
    }

    /// Bit mask over qubit indices.
    pub fn mask(&self) -> u64 {
        self.qubits.iter().fold(0, |m, &q| m | (1 << q))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    n_qubits: usize,
    terms: Vec<PauliZTerm>,
    qubit_map: BTreeMap<BitVar, usize>,
}

/// Polynomial in Z operators keyed by qubit mask. Coefficients are dyadic
/// rationals, which `f64` holds exactly at these sizes.
type ZPoly = BTreeMap<u64, f64>;

fn clause_to_z(c: &LinExpr, map: &BTreeMap<BitVar, usize>) -> Result<ZPoly, IsingError> {
    let mut out = ZPoly::new();
    *out.entry(0).or_default() += c.constant as f64;
    for (m, k) in c.terms() {
        // prod_v (1 - Z_v) / 2 expands over subsets of the monomial.
        let qubits = m
            .vars()
            .iter()
            .map(|v| map.get(v).copied().ok_or(IsingError::UnmappedVariable(*v)))
            .collect::<Result<Vec<_>, _>>()?;
        let scale = k as f64 / (1u64 << qubits.len()) as f64;
        for subset in 0u32..(1 << qubits.len()) {
            let mask = qubits
                .iter()
                .enumerate()
                .filter(|(i, _)| subset >> i & 1 == 1)
                .fold(0u64, |acc, (_, &q)| acc | 1 << q);
            let sign = if subset.count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            *out.entry(mask).or_default() += sign * scale;
        }
    }
    out.retain(|_, c| *c != 0.0);
    Ok(out)
}

fn square(p: &ZPoly) -> ZPoly {
    let mut out = ZPoly::new();
    for (&a, &x) in p {
        for (&b, &y) in p {
            *out.entry(a ^ b).or_default() += x * y;
        }
    }
    out
}

impl Hamiltonian {
    /// Compile clauses over the given variable order (qubit `i` is `order[i]`).
    pub fn from_clauses(clauses: &[LinExpr], order: &[BitVar]) -> Result<Self, IsingError> {
        if order.len() > MAX_EXPANSION {
            return Err(IsingError::TooManyUnknowns(order.len()));
        }
        let qubit_map: BTreeMap<BitVar, usize> = order.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut total = ZPoly::new();
        for c in clauses {
            for (mask, k) in square(&clause_to_z(c, &qubit_map)?) {
                *total.entry(mask).or_default() += k;
            }
        }
        Ok(Self::from_masks(order.len(), total, qubit_map))
    }

    fn from_masks(n_qubits: usize, poly: ZPoly, qubit_map: BTreeMap<BitVar, usize>) -> Self {
        let mut terms: Vec<PauliZTerm> = poly
            .into_iter()
            .filter(|(_, c)| *c != 0.0)
            .map(|(mask, coefficient)| PauliZTerm {
                qubits: (0..64).filter(|q| mask >> q & 1 == 1).collect(),
                coefficient,
            })
            .collect();
        terms.sort_by(|a, b| (a.qubits.len(), &a.qubits).cmp(&(b.qubits.len(), &b.qubits)));
        Hamiltonian { n_qubits, terms, qubit_map }
    }

    /// Build directly from terms; repeated qubit tuples are merged.
    pub fn from_terms(n_qubits: usize, terms: impl IntoIterator<Item = PauliZTerm>) -> Self {
        let mut poly = ZPoly::new();
        for t in terms {
            *poly.entry(t.mask()).or_default() += t.coefficient;
        }
        Self::from_masks(n_qubits, poly, BTreeMap::new())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Terms sorted by locality, identity first when present.
    pub fn terms(&self) -> &[PauliZTerm] {
        &self.terms
    }

    pub fn qubit_map(&self) -> &BTreeMap<BitVar, usize> {
        &self.qubit_map
    }

    /// Constant offset (coefficient of the identity).
    pub fn offset(&self) -> f64 {
        self.terms.iter().find(|t| t.qubits.is_empty()).map_or(0.0, |t| t.coefficient)
    }

    /// Energy of a basis state given as one bit per qubit.
    pub fn energy_of_bitstring(&self, bits: &[u8]) -> Result<f64, IsingError> {
        if bits.len() != self.n_qubits {
            return Err(IsingError::LengthMismatch { expected: self.n_qubits, got: bits.len() });
        }
        let index = bits.iter().enumerate().fold(0u64, |acc, (q, &b)| acc | ((b as u64 & 1) << q));
        Ok(self.energy_of_index(index))
    }

    /// Energy of the basis state whose bit `q` is qubit `q`.
    pub fn energy_of_index(&self, index: u64) -> f64 {
        self.terms
            .iter()
            .map(|t| if (t.mask() & index).count_ones() % 2 == 1 { -t.coefficient } else { t.coefficient })
            .sum()
    }

    /// All `2^n` diagonal entries, indexed like [`Self::energy_of_index`].
    /// Only sensible up to [`MAX_QUBITS`].
    pub fn diagonal(&self) -> Vec<f64> {
        // The diagonal is the Walsh-Hadamard transform of the coefficients.
        let mut diag = vec![0.0; 1usize << self.n_qubits];
        for t in &self.terms {
            diag[t.mask() as usize] += t.coefficient;
        }
        let mut h = 1;
        while h < diag.len() {
            for block in diag.chunks_mut(2 * h) {
                let (lo, hi) = block.split_at_mut(h);
                for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                    let (a, b) = (*x, *y);
                    *x = a + b;
                    *y = a - b;
                }
            }
            h *= 2;
        }
        diag
    }

    /// Indices of every zero-energy basis state, ascending.
    pub fn ground_state_indices(&self) -> Result<Vec<u64>, IsingError> {
        if self.n_qubits > MAX_QUBITS {
            return Err(IsingError::TooManyQubits(self.n_qubits));
        }
        Ok(self
            .diagonal()
            .iter()
            .enumerate()
            .filter(|(_, e)| e.abs() < 1e-9)
            .map(|(i, _)| i as u64)
            .collect())
    }

    /// Zero-energy bitstrings, one bit per qubit.
    pub fn ground_states_bruteforce(&self) -> Result<Vec<Vec<u8>>, IsingError> {
        Ok(self.ground_state_indices()?.into_iter().map(|i| index_to_bits(i, self.n_qubits)).collect())
    }

    /// Count of non-identity terms by locality.
    pub fn locality_histogram(&self) -> BTreeMap<usize, usize> {
        let mut out = BTreeMap::new();
        for t in self.terms.iter().filter(|t| !t.qubits.is_empty()) {
            *out.entry(t.locality()).or_default() += 1;
        }
        out
    }

    /// Values of the mapped variables for a basis index.
    pub fn assignment_of_index(&self, index: u64) -> BTreeMap<BitVar, u8> {
        self.qubit_map.iter().map(|(&v, &q)| (v, (index >> q & 1) as u8)).collect()
    }

    /// Basis index of an assignment of the mapped variables.
    pub fn index_of_assignment(&self, bits: &BTreeMap<BitVar, u8>) -> Result<u64, IsingError> {
        self.qubit_map.iter().try_fold(0u64, |acc, (&v, &q)| {
            let b = *bits.get(&v).ok_or(IsingError::UnmappedVariable(v))?;
            Ok(acc | ((b as u64 & 1) << q))
        })
    }

    pub fn to_document(&self) -> HamiltonianDoc {
        HamiltonianDoc {
            n_qubits: self.n_qubits,
            terms: self.terms.iter().map(|t| (t.qubits.clone(), t.coefficient)).collect(),
            qubit_map: self.qubit_map.iter().map(|(v, &q)| (v.to_string(), q)).collect(),
        }
    }

    pub fn from_document(doc: &HamiltonianDoc) -> Result<Self, IsingError> {
        if doc.n_qubits > MAX_EXPANSION {
            return Err(IsingError::TooManyUnknowns(doc.n_qubits));
        }
        let mut qubit_map = BTreeMap::new();
        for (name, &q) in &doc.qubit_map {
            let v: BitVar = name.parse().map_err(|e| IsingError::Schema(format!("{e}")))?;
            if q >= doc.n_qubits {
                return Err(IsingError::Schema(format!("qubit {q} of {name} out of range")));
            }
            qubit_map.insert(v, q);
        }
        for (qubits, _) in &doc.terms {
            if qubits.iter().any(|&q| q >= doc.n_qubits) {
                return Err(IsingError::Schema(format!("term {qubits:?} out of range")));
            }
        }
        let mut h = Self::from_terms(
            doc.n_qubits,
            doc.terms.iter().map(|(q, c)| PauliZTerm { qubits: q.clone(), coefficient: *c }),
        );
        h.qubit_map = qubit_map;
        Ok(h)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("hamiltonian serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, IsingError> {
        let doc: HamiltonianDoc = serde_json::from_str(s).map_err(|e| IsingError::Schema(e.to_string()))?;
        Self::from_document(&doc)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianDoc {
    pub n_qubits: usize,
    pub terms: Vec<(Vec<usize>, f64)>,
    pub qubit_map: BTreeMap<String, usize>,
}

/// Compile the reduced clauses of a system. Qubits follow the unknowns in
/// order: `p` bits ascending, then `q`, then carries. Each known-zero product
/// enters as an extra clause `x y`, so assignments that break it cost energy.
pub fn compile_hamiltonian(system: &ClauseSystem) -> Result<Hamiltonian, IsingError> {
    let order: Vec<BitVar> = system.unknowns().iter().copied().collect();
    let mut clauses = system.clauses().to_vec();
    for m in system.zero_products() {
        let mut c = LinExpr::constant(0);
        c.add_term(m.clone(), 1);
        clauses.push(c);
    }
    Hamiltonian::from_clauses(&clauses, &order)
}

/// Bits of a basis index, qubit 0 first.
pub fn index_to_bits(index: u64, n: usize) -> Vec<u8> {
    (0..n).map(|q| (index >> q & 1) as u8).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factoring::Monomial;

    const B0: BitVar = BitVar::P(1);
    const B1: BitVar = BitVar::Q(1);

    fn one_minus(vars: &[BitVar]) -> LinExpr {
        let mut c = LinExpr::constant(1);
        for &v in vars {
            c.add_term(Monomial::var(v), -1);
        }
        c
    }

    fn coeffs(h: &Hamiltonian) -> Vec<(Vec<usize>, f64)> {
        h.terms().iter().map(|t| (t.qubits.clone(), t.coefficient)).collect()
    }

    #[test]
    fn exclusive_pair_clause() {
        let h = Hamiltonian::from_clauses(&[one_minus(&[B0, B1])], &[B0, B1]).unwrap();
        assert_eq!(coeffs(&h), vec![(vec![], 0.5), (vec![0, 1], 0.5)]);
        assert_eq!(h.energy_of_bitstring(&[1, 0]).unwrap(), 0.0);
        assert_eq!(h.energy_of_bitstring(&[0, 0]).unwrap(), 1.0);
        assert_eq!(h.ground_states_bruteforce().unwrap(), vec![vec![1, 0], vec![0, 1]]);
        assert_eq!(h.locality_histogram(), BTreeMap::from([(2, 1)]));
    }

    #[test]
    fn single_bit_clause() {
        let h = Hamiltonian::from_clauses(&[one_minus(&[B0])], &[B0]).unwrap();
        assert_eq!(coeffs(&h), vec![(vec![], 0.5), (vec![0], 0.5)]);
        assert_eq!(h.locality_histogram(), BTreeMap::from([(1, 1)]));
    }

    #[test]
    fn unsatisfiable_clause_has_no_ground_state() {
        let mut c = LinExpr::constant(1);
        c.add_term(Monomial::var(B0), 1);
        let h = Hamiltonian::from_clauses(&[c], &[B0]).unwrap();
        assert!(h.ground_states_bruteforce().unwrap().is_empty());
    }

    #[test]
    fn length_is_checked() {
        let h = Hamiltonian::from_clauses(&[one_minus(&[B0, B1])], &[B0, B1]).unwrap();
        assert_eq!(h.energy_of_bitstring(&[1]), Err(IsingError::LengthMismatch { expected: 2, got: 1 }));
    }

    #[test]
    fn too_many_unknowns() {
        let order: Vec<BitVar> = (0..65).map(BitVar::P).collect();
        assert_eq!(Hamiltonian::from_clauses(&[], &order), Err(IsingError::TooManyUnknowns(65)));
    }

    #[test]
    fn diagonal_matches_term_sums() {
        let h = Hamiltonian::from_terms(
            3,
            [
                PauliZTerm { qubits: vec![], coefficient: 1.5 },
                PauliZTerm { qubits: vec![0, 2], coefficient: -0.25 },
                PauliZTerm { qubits: vec![1], coefficient: 0.75 },
            ],
        );
        let diag = h.diagonal();
        for i in 0..8u64 {
            assert_eq!(diag[i as usize], h.energy_of_index(i));
        }
    }

    #[test]
    fn json_round_trip() {
        let h = Hamiltonian::from_clauses(&[one_minus(&[B0, B1])], &[B0, B1]).unwrap();
        assert_eq!(Hamiltonian::from_json(&h.to_json()).unwrap(), h);
    }
}
