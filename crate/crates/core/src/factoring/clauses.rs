use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::expr::{Affine, BitVar, LinExpr, Monomial, Replacement};
use super::FactoringError;

/// Number of binary digits of `n`.
pub fn bit_length(n: &BigUint) -> u32 {
    n.bits() as u32
}

/// Candidate `(n_p, n_q)` splits for `n`, closest to balanced first.
pub fn choose_bit_lengths(n: &BigUint) -> Result<Vec<(u32, u32)>, FactoringError> {
    if n < &BigUint::from(9u32) {
        return Err(FactoringError::TooSmall(n.clone()));
    }
    if !n.bit(0) {
        return Err(FactoringError::EvenInput(n.clone()));
    }
    let bits = bit_length(n);
    let mut out = Vec::new();
    for total in [bits, bits + 1] {
        for n_q in 2..=total / 2 {
            let n_p = total - n_q;
            out.push((n_p, n_q));
        }
    }
    out.sort_by_key(|&(n_p, n_q)| (n_p - n_q, n_p + n_q));
    Ok(out)
}

/// Multiplication-table constraints `C_i = 0` together with everything the
/// preprocessor has deduced so far.
#[derive(Debug, Clone, PartialEq)]
pub struct ClauseSystem {
    pub(crate) n: BigUint,
    pub(crate) n_bits: u32,
    pub(crate) n_p: u32,
    pub(crate) n_q: u32,
    pub(crate) original: Vec<LinExpr>,
    pub(crate) clauses: Vec<LinExpr>,
    pub(crate) unknowns: BTreeSet<BitVar>,
    pub(crate) fixed: BTreeMap<BitVar, u8>,
    pub(crate) identifications: BTreeMap<BitVar, Affine>,
    pub(crate) zero_products: BTreeSet<Monomial>,
    pub(crate) use_gcd: bool,
}

/// How many carry bits a column gets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CarryBound {
    /// Enough bits to hold `⌊S/2⌋`, `S` the column-sum bound.
    #[default]
    HalfSum,
    /// `⌈log₂ S⌉` bits.
    CeilLog,
    /// Enough bits to hold `⌊(S - N_i)/2⌋`.
    Tight,
}

impl CarryBound {
    fn bits(self, max_sum: u32, n_i: u32) -> u32 {
        let width = |v: u32| 32 - v.leading_zeros();
        match self {
            CarryBound::HalfSum => width(max_sum / 2),
            CarryBound::CeilLog => {
                if max_sum <= 1 {
                    0
                } else {
                    width(max_sum - 1)
                }
            }
            CarryBound::Tight => width(max_sum.saturating_sub(n_i) / 2),
        }
    }
}

/// Column clauses of the long multiplication `p * q = n`, with the lowest and
/// highest bit of both factors fixed to 1.
pub fn build_clauses(n: &BigUint, n_p: u32, n_q: u32) -> Result<ClauseSystem, FactoringError> {
    build_clauses_with(n, n_p, n_q, CarryBound::default())
}

pub fn build_clauses_with(
    n: &BigUint,
    n_p: u32,
    n_q: u32,
    carries: CarryBound,
) -> Result<ClauseSystem, FactoringError> {
    let bits = bit_length(n);
    let total = n_p + n_q;
    if n_p < 2 || n_q < 2 || (total != bits && total != bits + 1) {
        return Err(FactoringError::InvalidSplit { n_bits: bits, n_p, n_q });
    }

    let columns = total as usize;
    let mut incoming: Vec<Vec<BitVar>> = vec![Vec::new(); columns];
    let mut original = Vec::with_capacity(columns);
    let mut all_vars: BTreeSet<BitVar> = (0..n_p)
        .map(BitVar::P)
        .chain((0..n_q).map(BitVar::Q))
        .collect();

    for i in 0..columns {
        let mut clause = LinExpr::constant(n.bit(i as u64) as i64);
        let mut max_sum = 0u32;
        for j in 0..=i as u32 {
            let k = i as u32 - j;
            if j < n_q && k < n_p {
                clause.add_term(Monomial::pair(BitVar::Q(j), BitVar::P(k)), -1);
                max_sum += 1;
            }
        }
        for &z in &incoming[i] {
            clause.add_term(Monomial::var(z), -1);
            max_sum += 1;
        }
        for j in 1..=carries.bits(max_sum, n.bit(i as u64) as u32) {
            let target = i + j as usize;
            if target >= columns {
                break;
            }
            let z = BitVar::Carry(i as u32, target as u32);
            clause.add_term(Monomial::var(z), 1i64 << j);
            incoming[target].push(z);
            all_vars.insert(z);
        }
        original.push(clause);
    }

    let mut sys = ClauseSystem {
        n: n.clone(),
        n_bits: bits,
        n_p,
        n_q,
        clauses: original.clone(),
        original,
        unknowns: all_vars,
        fixed: BTreeMap::new(),
        identifications: BTreeMap::new(),
        zero_products: BTreeSet::new(),
        use_gcd: true,
    };
    for v in [BitVar::P(0), BitVar::Q(0), BitVar::P(n_p - 1), BitVar::Q(n_q - 1)] {
        if sys.unknowns.remove(&v) {
            sys.fixed.insert(v, 1);
            sys.substitute_everywhere(v, Replacement::Const(1));
        }
    }
    sys.clauses.retain(|c| !(c.is_constant() && c.constant == 0));
    Ok(sys)
}

impl ClauseSystem {
    pub fn n(&self) -> &BigUint {
        &self.n
    }

    pub fn n_bits(&self) -> u32 {
        self.n_bits
    }

    pub fn split(&self) -> (u32, u32) {
        (self.n_p, self.n_q)
    }

    /// Current (reduced) clauses; each must evaluate to zero.
    pub fn clauses(&self) -> &[LinExpr] {
        &self.clauses
    }

    /// Clauses as generated, before any fixing.
    pub fn original_clauses(&self) -> &[LinExpr] {
        &self.original
    }

    pub fn unknowns(&self) -> &BTreeSet<BitVar> {
        &self.unknowns
    }

    pub fn fixed(&self) -> &BTreeMap<BitVar, u8> {
        &self.fixed
    }

    pub fn identifications(&self) -> &BTreeMap<BitVar, Affine> {
        &self.identifications
    }

    pub fn zero_products(&self) -> &BTreeSet<Monomial> {
        &self.zero_products
    }

    /// Every variable of the original system.
    pub fn variables(&self) -> BTreeSet<BitVar> {
        self.unknowns
            .iter()
            .chain(self.fixed.keys())
            .chain(self.identifications.keys())
            .copied()
            .collect()
    }

    pub(crate) fn substitute_everywhere(&mut self, var: BitVar, by: Replacement) {
        for c in &mut self.clauses {
            *c = c.substitute(var, by);
        }
    }

    /// Extend an assignment of the unknowns to every variable.
    pub fn full_assignment(
        &self,
        bits: &BTreeMap<BitVar, u8>,
    ) -> Result<BTreeMap<BitVar, u8>, FactoringError> {
        let mut out = self.fixed.clone();
        for &u in &self.unknowns {
            let v = *bits.get(&u).ok_or(FactoringError::MissingVariable(u))?;
            out.insert(u, v);
        }
        for (&x, a) in &self.identifications {
            let v = *bits.get(&a.var).ok_or(FactoringError::MissingVariable(a.var))?;
            out.insert(x, a.at(v));
        }
        Ok(out)
    }

    /// True when the assignment, extended through the fixed values and
    /// identifications, satisfies every originally generated clause.
    pub fn verify_assignment(&self, bits: &BTreeMap<BitVar, u8>) -> Result<bool, FactoringError> {
        let full = self.full_assignment(bits)?;
        Ok(self
            .original
            .iter()
            .all(|c| c.eval(|v| full.get(&v).copied()) == Some(0)))
    }

    /// True when the assignment of the unknowns zeroes every reduced clause.
    pub fn satisfies_reduced(&self, bits: &BTreeMap<BitVar, u8>) -> Result<bool, FactoringError> {
        for &u in &self.unknowns {
            if !bits.contains_key(&u) {
                return Err(FactoringError::MissingVariable(u));
            }
        }
        Ok(self
            .clauses
            .iter()
            .all(|c| c.eval(|v| bits.get(&v).copied()) == Some(0)))
    }

    /// Every assignment of the unknowns that zeroes the reduced clauses and
    /// the known-zero products, found by backtracking with interval pruning.
    /// `None` when there are more than `max_unknowns`.
    pub fn solutions(&self, max_unknowns: usize) -> Option<Vec<BTreeMap<BitVar, u8>>> {
        if self.unknowns.len() > max_unknowns {
            return None;
        }
        // Variables in order of first appearance, so early columns prune early.
        let mut order: Vec<BitVar> = Vec::new();
        for c in &self.clauses {
            for v in c.variables() {
                if !order.contains(&v) {
                    order.push(v);
                }
            }
        }
        let free: Vec<BitVar> = self.unknowns.iter().filter(|v| !order.contains(v)).copied().collect();
        let mut found = Vec::new();
        search(&self.clauses, &order, &mut BTreeMap::new(), &mut found);
        // Unknowns absent from every clause take both values.
        for v in free {
            found = found
                .into_iter()
                .flat_map(|bits| {
                    [0u8, 1].map(|b| {
                        let mut bits = bits.clone();
                        bits.insert(v, b);
                        bits
                    })
                })
                .collect();
        }
        found.retain(|bits| {
            self.zero_products.iter().all(|m| m.eval(|v| bits.get(&v).copied()) == Some(0))
        });
        found.sort();
        Some(found)
    }

    /// Read the two factors out of a satisfying assignment, smaller first.
    pub fn reconstruct_factors(
        &self,
        bits: &BTreeMap<BitVar, u8>,
    ) -> Result<(BigUint, BigUint), FactoringError> {
        if !self.verify_assignment(bits)? {
            return Err(FactoringError::NotASolution);
        }
        let full = self.full_assignment(bits)?;
        let read = |len: u32, var: fn(u32) -> BitVar| {
            let mut acc = BigUint::zero();
            for k in (0..len).rev() {
                acc <<= 1u32;
                if full[&var(k)] == 1 {
                    acc += BigUint::one();
                }
            }
            acc
        };
        let p = read(self.n_p, BitVar::P);
        let q = read(self.n_q, BitVar::Q);
        let one = BigUint::one();
        if &p * &q != self.n || p <= one || q <= one {
            return Err(FactoringError::NotASolution);
        }
        Ok(if p <= q { (p, q) } else { (q, p) })
    }

    /// Unknown values encoding the given factor pair under this split, or
    /// `None` if the factors do not fit it.
    pub fn encode_factors(&self, p: &BigUint, q: &BigUint) -> Option<BTreeMap<BitVar, u8>> {
        if bit_length(p) != self.n_p || bit_length(q) != self.n_q {
            return None;
        }
        let mut full: BTreeMap<BitVar, u8> = BTreeMap::new();
        for k in 0..self.n_p {
            full.insert(BitVar::P(k), p.bit(k as u64) as u8);
        }
        for k in 0..self.n_q {
            full.insert(BitVar::Q(k), q.bit(k as u64) as u8);
        }
        // Carries follow from running the column sums.
        for (i, clause) in self.original.iter().enumerate() {
            let mut sum = 0i64;
            let mut outgoing = Vec::new();
            for (m, c) in clause.terms() {
                match m.vars() {
                    [BitVar::Carry(from, _)] if *from as usize == i => outgoing.push((m.vars()[0], c)),
                    _ => sum -= c * m.eval(|v| full.get(&v).copied())?,
                }
            }
            if sum < clause.constant {
                return None;
            }
            let mut carry = (sum - clause.constant) / 2;
            outgoing.sort_by_key(|&(_, c)| c);
            for (z, _) in outgoing {
                full.insert(z, (carry & 1) as u8);
                carry >>= 1;
            }
            if carry != 0 {
                return None;
            }
        }
        let bits: BTreeMap<BitVar, u8> = self.unknowns.iter().map(|&u| (u, full[&u])).collect();
        match self.verify_assignment(&bits) {
            Ok(true) => Some(bits),
            _ => None,
        }
    }

    pub fn to_document(&self) -> ClauseSystemDoc {
        ClauseSystemDoc {
            n: self.n.to_string(),
            n_p: self.n_p,
            n_q: self.n_q,
            clauses: self.clauses.iter().map(ClauseDoc::from).collect(),
            fixed: self.fixed.clone(),
            identifications: self.identifications.clone(),
            unknowns: self.unknowns.iter().copied().collect(),
            zero_products: self
                .zero_products
                .iter()
                .map(|m| m.vars().to_vec())
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("serializable")
    }

    /// Rebuild a system from its document; the original clauses are regenerated.
    pub fn from_document(doc: &ClauseSystemDoc) -> Result<Self, FactoringError> {
        let n: BigUint = doc
            .n
            .parse()
            .map_err(|_| FactoringError::Schema(format!("N: `{}` is not an integer", doc.n)))?;
        let mut sys = build_clauses(&n, doc.n_p, doc.n_q)?;
        sys.clauses = doc.clauses.iter().map(ClauseDoc::to_expr).collect();
        sys.fixed = doc.fixed.clone();
        sys.identifications = doc.identifications.clone();
        sys.unknowns = doc.unknowns.iter().copied().collect();
        sys.zero_products = doc
            .zero_products
            .iter()
            .map(|v| Monomial::new(v.iter().copied()))
            .collect();
        let all = sys.original_variables();
        if sys.variables() != all {
            return Err(FactoringError::Schema(
                "unknowns, fixed and identifications must partition the variables".into(),
            ));
        }
        Ok(sys)
    }

    pub fn from_json(s: &str) -> Result<Self, FactoringError> {
        let doc: ClauseSystemDoc =
            serde_json::from_str(s).map_err(|e| FactoringError::Schema(e.to_string()))?;
        Self::from_document(&doc)
    }

    fn original_variables(&self) -> BTreeSet<BitVar> {
        let mut out: BTreeSet<BitVar> = (0..self.n_p)
            .map(BitVar::P)
            .chain((0..self.n_q).map(BitVar::Q))
            .collect();
        for c in &self.original {
            out.extend(c.variables());
        }
        out
    }
}

/// One clause as `constant + Σ coefficient·Π variables`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClauseDoc {
    pub constant: i64,
    pub terms: Vec<(i64, Vec<BitVar>)>,
}

impl From<&LinExpr> for ClauseDoc {
    fn from(e: &LinExpr) -> Self {
        ClauseDoc {
            constant: e.constant,
            terms: e.terms().map(|(m, c)| (c, m.vars().to_vec())).collect(),
        }
    }
}

impl ClauseDoc {
    pub fn to_expr(&self) -> LinExpr {
        let mut e = LinExpr::constant(self.constant);
        for (c, vars) in &self.terms {
            e.add_term(Monomial::new(vars.iter().copied()), *c);
        }
        e
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClauseSystemDoc {
    #[serde(rename = "N")]
    pub n: String,
    pub n_p: u32,
    pub n_q: u32,
    pub clauses: Vec<ClauseDoc>,
    pub fixed: BTreeMap<BitVar, u8>,
    pub identifications: BTreeMap<BitVar, Affine>,
    pub unknowns: Vec<BitVar>,
    #[serde(default)]
    pub zero_products: Vec<Vec<BitVar>>,
}


fn search(
    clauses: &[LinExpr],
    order: &[BitVar],
    bits: &mut BTreeMap<BitVar, u8>,
    found: &mut Vec<BTreeMap<BitVar, u8>>,
) {
    let Some((&v, rest)) = order.split_first() else {
        if clauses.iter().all(|c| c.is_constant() && c.constant == 0) {
            found.push(bits.clone());
        }
        return;
    };
    for value in [0u8, 1] {
        let next: Vec<LinExpr> = clauses.iter().map(|c| c.substitute(v, Replacement::Const(value))).collect();
        if next.iter().all(|c| {
            let (lo, hi) = c.bounds();
            lo <= 0 && 0 <= hi
        }) {
            bits.insert(v, value);
            search(&next, rest, bits, found);
            bits.remove(&v);
        }
    }
}
