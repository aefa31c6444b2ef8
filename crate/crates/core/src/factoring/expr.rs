//! Integer polynomials over binary variables, restricted to degree two.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A binary variable of the multiplication table.
///
/// Ordering is `P` before `Q` before `Carry`, then by index, which is also the
/// order in which surviving unknowns are numbered as qubits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BitVar {
    P(u32),
    Q(u32),
    /// Carry from column `.0` into column `.1`.
    Carry(u32, u32),
}

impl fmt::Display for BitVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BitVar::P(i) => write!(f, "p_{i}"),
            BitVar::Q(i) => write!(f, "q_{i}"),
            BitVar::Carry(i, j) => write!(f, "z_{i}_{j}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid variable name `{0}`")]
pub struct ParseBitVarError(pub String);

impl FromStr for BitVar {
    type Err = ParseBitVarError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseBitVarError(s.to_string());
        let mut parts = s.split('_');
        let kind = parts.next().ok_or_else(err)?;
        let idx: Vec<u32> = parts
            .map(|p| p.parse::<u32>().map_err(|_| err()))
            .collect::<Result<_, _>>()?;
        match (kind, idx.as_slice()) {
            ("p", [i]) => Ok(BitVar::P(*i)),
            ("q", [i]) => Ok(BitVar::Q(*i)),
            ("z", [i, j]) if j > i => Ok(BitVar::Carry(*i, *j)),
            _ => Err(err()),
        }
    }
}

impl Serialize for BitVar {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BitVar {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Product of distinct binary variables (x² = x is applied on construction).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Monomial(Vec<BitVar>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(v: BitVar) -> Self {
        Monomial(vec![v])
    }

    pub fn new(vars: impl IntoIterator<Item = BitVar>) -> Self {
        let set: BTreeSet<BitVar> = vars.into_iter().collect();
        Monomial(set.into_iter().collect())
    }

    pub fn pair(a: BitVar, b: BitVar) -> Self {
        Self::new([a, b])
    }

    pub fn vars(&self) -> &[BitVar] {
        &self.0
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn contains(&self, v: BitVar) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial::new(self.0.iter().chain(other.0.iter()).copied())
    }

    pub fn eval(&self, value: impl Fn(BitVar) -> Option<u8>) -> Option<i64> {
        let mut acc = 1;
        for &v in &self.0 {
            acc *= value(v)? as i64;
        }
        Some(acc)
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        let names: Vec<String> = self.0.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", names.join("*"))
    }
}

/// `value = offset + coef * var`, with `(offset, coef)` either `(0, 1)` or `(1, -1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Affine {
    pub offset: i64,
    pub coef: i64,
    pub var: BitVar,
}

impl Affine {
    pub fn same(var: BitVar) -> Self {
        Affine { offset: 0, coef: 1, var }
    }

    pub fn negated(var: BitVar) -> Self {
        Affine { offset: 1, coef: -1, var }
    }

    /// Compose `self` with `var = other`.
    pub fn compose(self, other: Affine) -> Affine {
        Affine {
            offset: self.offset + self.coef * other.offset,
            coef: self.coef * other.coef,
            var: other.var,
        }
    }

    pub fn at(self, value: u8) -> u8 {
        (self.offset + self.coef * value as i64) as u8
    }

    pub fn to_expr(self) -> LinExpr {
        let mut e = LinExpr::constant(self.offset);
        e.add_term(Monomial::var(self.var), self.coef);
        e
    }
}

impl fmt::Display for Affine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.offset == 0 {
            write!(f, "{}", self.var)
        } else {
            write!(f, "1 - {}", self.var)
        }
    }
}

impl Serialize for Affine {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Affine {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        let (negated, name) = match s.strip_prefix("1 - ") {
            Some(rest) => (true, rest),
            None => (false, s.as_str()),
        };
        let var: BitVar = name.parse().map_err(serde::de::Error::custom)?;
        Ok(if negated { Affine::negated(var) } else { Affine::same(var) })
    }
}

/// What a variable is replaced by during substitution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Replacement {
    Const(u8),
    Affine(Affine),
}

impl Replacement {
    fn to_expr(self) -> LinExpr {
        match self {
            Replacement::Const(c) => LinExpr::constant(c as i64),
            Replacement::Affine(a) => a.to_expr(),
        }
    }
}

/// `constant + Σ coef·monomial`, kept in normal form: no zero coefficients,
/// and the constant is held apart from the monomial map.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct LinExpr {
    pub constant: i64,
    terms: BTreeMap<Monomial, i64>,
}

impl LinExpr {
    pub fn constant(c: i64) -> Self {
        LinExpr { constant: c, terms: BTreeMap::new() }
    }

    pub fn var(v: BitVar) -> Self {
        let mut e = LinExpr::default();
        e.add_term(Monomial::var(v), 1);
        e
    }

    pub fn add_term(&mut self, m: Monomial, coef: i64) {
        if coef == 0 {
            return;
        }
        if m.degree() == 0 {
            self.constant += coef;
            return;
        }
        match self.terms.entry(m) {
            Entry::Vacant(slot) => {
                slot.insert(coef);
            }
            Entry::Occupied(mut slot) => {
                *slot.get_mut() += coef;
                if *slot.get() == 0 {
                    slot.remove();
                }
            }
        }
    }

    pub fn add(&mut self, other: &LinExpr, scale: i64) {
        self.constant += scale * other.constant;
        for (m, &c) in &other.terms {
            self.add_term(m.clone(), scale * c);
        }
    }

    pub fn mul(&self, other: &LinExpr) -> LinExpr {
        let mut out = LinExpr::constant(self.constant * other.constant);
        for (m, &c) in &self.terms {
            out.add_term(m.clone(), c * other.constant);
        }
        for (m, &c) in &other.terms {
            out.add_term(m.clone(), c * self.constant);
        }
        for (a, &ca) in &self.terms {
            for (b, &cb) in &other.terms {
                out.add_term(a.mul(b), ca * cb);
            }
        }
        out
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, i64)> {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn coefficient(&self, m: &Monomial) -> i64 {
        if m.degree() == 0 {
            self.constant
        } else {
            self.terms.get(m).copied().unwrap_or(0)
        }
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn variables(&self) -> BTreeSet<BitVar> {
        self.terms.keys().flat_map(|m| m.vars().iter().copied()).collect()
    }

    pub fn contains_var(&self, v: BitVar) -> bool {
        self.terms.keys().any(|m| m.contains(v))
    }

    /// Replace every occurrence of `var`.
    pub fn substitute(&self, var: BitVar, by: Replacement) -> LinExpr {
        if !self.contains_var(var) {
            return self.clone();
        }
        let replacement = by.to_expr();
        let mut out = LinExpr::constant(self.constant);
        for (m, &c) in &self.terms {
            if !m.contains(var) {
                out.add_term(m.clone(), c);
                continue;
            }
            let rest = Monomial::new(m.vars().iter().copied().filter(|&v| v != var));
            let mut rest_expr = LinExpr::default();
            rest_expr.add_term(rest, c);
            out.add(&rest_expr.mul(&replacement), 1);
        }
        out
    }

    /// Drop the given product monomials (known to vanish on every solution).
    pub fn drop_monomials(&mut self, zero: &BTreeSet<Monomial>) {
        if zero.is_empty() {
            return;
        }
        self.terms.retain(|m, _| !zero.contains(m));
    }

    /// Smallest and largest value over all 0/1 assignments, treating every
    /// monomial as independent.
    pub fn bounds(&self) -> (i64, i64) {
        let mut lo = self.constant;
        let mut hi = self.constant;
        for &c in self.terms.values() {
            if c < 0 {
                lo += c;
            } else {
                hi += c;
            }
        }
        (lo, hi)
    }

    pub fn content_gcd(&self) -> i64 {
        self.terms
            .values()
            .fold(0i64, |g, &c| num_integer::gcd(g, c))
    }

    pub fn negate(&mut self) {
        self.constant = -self.constant;
        for c in self.terms.values_mut() {
            *c = -*c;
        }
    }

    pub fn eval(&self, value: impl Fn(BitVar) -> Option<u8>) -> Option<i64> {
        let mut acc = self.constant;
        for (m, &c) in &self.terms {
            acc += c * m.eval(&value)?;
        }
        Some(acc)
    }
}

impl fmt::Display for LinExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (m, &c) in &self.terms {
            let sign = if c < 0 { "-" } else { "+" };
            if first {
                if c < 0 {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            if c.abs() != 1 {
                write!(f, "{}*", c.abs())?;
            }
            write!(f, "{m}")?;
            first = false;
        }
        if first {
            write!(f, "{}", self.constant)
        } else if self.constant != 0 {
            let sign = if self.constant < 0 { "-" } else { "+" };
            write!(f, " {sign} {}", self.constant.abs())
        } else {
            Ok(())
        }
    }
}
