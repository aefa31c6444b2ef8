//! Classical clause simplification.
//!
//! Each clause `E = 0` is read as `L = R` with non-negative coefficients on
//! both sides. Seven rules turn clause shapes into deductions (fixed bits,
//! bit identifications, vanishing products), which are substituted into every
//! clause as soon as they are found.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use super::clauses::{build_clauses, choose_bit_lengths, ClauseSystem};
use super::expr::{Affine, BitVar, LinExpr, Monomial, Replacement};
use super::oracle::factor_oracle;
use super::FactoringError;

pub const DEFAULT_MAX_PASSES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Deduction {
    Fix(BitVar, u8),
    Identify(BitVar, Affine),
    ZeroProduct(BitVar, BitVar),
}

/// Statistics of a preprocessing run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreprocessReport {
    /// Full passes over all clauses, including the final one that changed nothing.
    pub passes: usize,
    /// Firings of rules 1 through 7.
    pub rule_hits: [usize; 7],
    pub unknowns_before: usize,
    pub unknowns_after: usize,
    /// Whether a fixed point was reached within the pass budget.
    pub converged: bool,
}

impl PreprocessReport {
    pub fn total_firings(&self) -> usize {
        self.rule_hits.iter().sum()
    }
}

/// Canonical value of a variable: a constant or an affine form of an unknown.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Resolved {
    Const(u8),
    Affine(Affine),
}

impl ClauseSystem {
    fn resolve(&self, v: BitVar) -> Resolved {
        if let Some(&c) = self.fixed.get(&v) {
            return Resolved::Const(c);
        }
        if let Some(&a) = self.identifications.get(&v) {
            return match self.fixed.get(&a.var) {
                Some(&c) => Resolved::Const(a.at(c)),
                None => Resolved::Affine(a),
            };
        }
        Resolved::Affine(Affine::same(v))
    }

    fn resolve_affine(&self, a: Affine) -> Resolved {
        match self.resolve(a.var) {
            Resolved::Const(c) => Resolved::Const(a.at(c)),
            Resolved::Affine(inner) => Resolved::Affine(a.compose(inner)),
        }
    }

    fn contradiction(&self, clause: usize, value: i64) -> FactoringError {
        FactoringError::Contradiction { clause, value }
    }

    /// Substitute one elimination everywhere and clean up the clause list.
    fn eliminate(&mut self, var: BitVar, by: Replacement) -> Result<Vec<Deduction>, FactoringError> {
        debug_assert!(self.unknowns.contains(&var));
        self.unknowns.remove(&var);
        let mut follow_up = Vec::new();
        match by {
            Replacement::Const(c) => {
                self.fixed.insert(var, c);
            }
            Replacement::Affine(a) => {
                self.identifications.insert(var, a);
            }
        }
        // Keep identifications pointing at unknowns only.
        let dependants: Vec<(BitVar, Affine)> = self
            .identifications
            .iter()
            .filter(|(&x, a)| a.var == var && x != var)
            .map(|(&x, &a)| (x, a))
            .collect();
        for (x, a) in dependants {
            match by {
                Replacement::Const(c) => {
                    self.identifications.remove(&x);
                    self.fixed.insert(x, a.at(c));
                }
                Replacement::Affine(b) => {
                    self.identifications.insert(x, a.compose(b));
                }
            }
        }
        // Products known to vanish.
        let touched: Vec<Monomial> = self
            .zero_products
            .iter()
            .filter(|m| m.contains(var))
            .cloned()
            .collect();
        for m in touched {
            self.zero_products.remove(&m);
            let other = m.vars().iter().copied().find(|&v| v != var);
            let Some(other) = other else { continue };
            match by {
                Replacement::Const(1) => follow_up.push(Deduction::Fix(other, 0)),
                Replacement::Const(_) => {}
                Replacement::Affine(a) if a.offset == 0 => {
                    if a.var == other {
                        follow_up.push(Deduction::Fix(other, 0));
                    } else {
                        self.zero_products.insert(Monomial::pair(a.var, other));
                    }
                }
                // (1 - w) * other = 0 is not a single product, so it goes
                // back into the clause list.
                Replacement::Affine(a) => {
                    if a.var == other {
                        continue;
                    }
                    self.clauses.push(a.to_expr().mul(&LinExpr::var(other)));
                }
            }
        }
        self.substitute_everywhere(var, by);
        self.normalize_clauses()?;
        Ok(follow_up)
    }

    fn normalize_clauses(&mut self) -> Result<(), FactoringError> {
        let zero = &self.zero_products;
        let use_gcd = self.use_gcd;
        for (idx, c) in self.clauses.iter_mut().enumerate() {
            c.drop_monomials(zero);
            if c.is_constant() {
                if c.constant != 0 {
                    return Err(FactoringError::Contradiction { clause: idx, value: c.constant });
                }
                continue;
            }
            let g = c.content_gcd();
            if use_gcd && g > 1 {
                if c.constant % g != 0 {
                    return Err(FactoringError::Contradiction { clause: idx, value: c.constant });
                }
                let mut scaled = LinExpr::constant(c.constant / g);
                for (m, k) in c.terms() {
                    scaled.add_term(m.clone(), k / g);
                }
                *c = scaled;
            }
            // Leading coefficient positive, so equal constraints compare equal.
            if c.terms().next().map(|(_, k)| k < 0).unwrap_or(false) {
                c.negate();
            }
        }
        Ok(())
    }

    /// Apply a deduction and everything it implies. Returns whether anything changed.
    fn apply(&mut self, d: Deduction) -> Result<bool, FactoringError> {
        let mut queue = vec![d];
        let mut changed = false;
        while let Some(d) = queue.pop() {
            let more = match d {
                Deduction::Fix(x, value) => match self.resolve(x) {
                    Resolved::Const(c) if c == value => continue,
                    Resolved::Const(c) => return Err(self.contradiction(usize::MAX, c as i64 - value as i64)),
                    Resolved::Affine(a) => {
                        // value = offset + coef * u  =>  u = (value - offset) * coef
                        let u = (value as i64 - a.offset) * a.coef;
                        if !(0..=1).contains(&u) {
                            return Err(self.contradiction(usize::MAX, u));
                        }
                        self.eliminate(a.var, Replacement::Const(u as u8))?
                    }
                },
                Deduction::Identify(x, rhs) => {
                    match (self.resolve(x), self.resolve_affine(rhs)) {
                        (Resolved::Const(a), Resolved::Const(b)) => {
                            if a != b {
                                return Err(self.contradiction(usize::MAX, a as i64 - b as i64));
                            }
                            continue;
                        }
                        (Resolved::Const(c), Resolved::Affine(a)) | (Resolved::Affine(a), Resolved::Const(c)) => {
                            queue.push(Deduction::Fix(a.var, preimage(a, c)));
                            continue;
                        }
                        (Resolved::Affine(l), Resolved::Affine(r)) => {
                            if l.var == r.var {
                                if l == r {
                                    continue;
                                }
                                return Err(self.contradiction(usize::MAX, 1));
                            }
                            // l.offset + l.coef*u = r.offset + r.coef*w
                            let affine = Affine {
                                offset: (r.offset - l.offset) * l.coef,
                                coef: r.coef * l.coef,
                                var: r.var,
                            };
                            self.eliminate(l.var, Replacement::Affine(affine))?
                        }
                    }
                }
                Deduction::ZeroProduct(x, y) => {
                    let m = Monomial::pair(x, y);
                    if m.degree() < 2 || self.zero_products.contains(&m) {
                        continue;
                    }
                    if !self.unknowns.contains(&x) || !self.unknowns.contains(&y) {
                        continue;
                    }
                    self.zero_products.insert(m);
                    self.normalize_clauses()?;
                    Vec::new()
                }
            };
            changed = true;
            queue.extend(more);
        }
        Ok(changed)
    }
}

/// Solve `offset + coef*u = value` for `u`.
fn preimage(a: Affine, value: u8) -> u8 {
    if a.at(0) == value {
        0
    } else {
        1
    }
}

fn single_var(m: &Monomial) -> Option<BitVar> {
    match m.vars() {
        [v] => Some(*v),
        _ => None,
    }
}

/// Strength of the bound-based rules 5 and 6.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundMode {
    /// Rule 6 only fires when the bit stands alone on its side.
    Literal,
    /// Interval bounds with every monomial treated as independent.
    Interval,
    /// Enumerate the clause's own assignments (clauses up to `max_vars` bits).
    Exact { max_vars: usize },
    /// As `Exact`, and rule 3 also reads off pairwise relations.
    ExactRelations { max_vars: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleOptions {
    pub bounds: BoundMode,
    /// Rule 2 also substitutes `x = 1 - y`.
    pub pair_substitution: bool,
    /// Rule 7 also relates two odd bits (`x + y` even or odd).
    pub pair_parity: bool,
    /// Divide clauses by the gcd of their coefficients.
    pub gcd: bool,
}

impl Default for RuleOptions {
    fn default() -> Self {
        RuleOptions { bounds: BoundMode::Interval, pair_substitution: true, pair_parity: true, gcd: true }
    }
}

/// Rule 1: `xy = 1` forces both factors to one.
fn rule_product_is_one(c: &LinExpr, _: &RuleOptions) -> Vec<Deduction> {
    let mut terms = c.terms();
    if let (Some((m, k)), None) = (terms.next(), terms.next()) {
        if let [x, y] = m.vars() {
            if c.constant == -k {
                return vec![Deduction::Fix(*x, 1), Deduction::Fix(*y, 1)];
            }
        }
    }
    Vec::new()
}

/// Rule 2: `x + y = 1` means the product `xy` vanishes.
fn rule_exclusive_pair(c: &LinExpr, opts: &RuleOptions) -> Vec<Deduction> {
    let t: Vec<_> = c.terms().collect();
    if let [(a, ka), (b, kb)] = t.as_slice() {
        if let (Some(x), Some(y)) = (single_var(a), single_var(b)) {
            if ka == kb && c.constant == -ka {
                let mut out = vec![Deduction::ZeroProduct(x, y)];
                if opts.pair_substitution {
                    out.push(Deduction::Identify(x, Affine::negated(y)));
                }
                return out;
            }
        }
    }
    Vec::new()
}

/// Rule 3: `x + y = 2z` forces `x = y = z`; the degenerate `x = z` is included.
fn rule_equal_to_carry(c: &LinExpr, opts: &RuleOptions) -> Vec<Deduction> {
    if let BoundMode::ExactRelations { max_vars } = opts.bounds {
        if let Some(d) = exact_deductions(c, max_vars, true) {
            let rel: Vec<_> = d.into_iter().filter(|d| !matches!(d, Deduction::Fix(..))).collect();
            if !rel.is_empty() {
                return rel;
            }
        }
    }
    if c.constant != 0 {
        return Vec::new();
    }
    let t: Vec<_> = c.terms().collect();
    let singles: Option<Vec<(BitVar, i64)>> =
        t.iter().map(|(m, k)| single_var(m).map(|v| (v, *k))).collect();
    let Some(s) = singles else { return Vec::new() };
    match s.as_slice() {
        [(x, kx), (y, ky)] if *kx == -*ky => vec![Deduction::Identify(*x, Affine::same(*y))],
        [_, _, _] => {
            let Some(&(z, kz)) = s.iter().find(|(_, k)| k.abs() == 2) else { return Vec::new() };
            let others: Vec<_> = s.iter().filter(|(v, _)| *v != z).collect();
            if others.len() == 2 && others.iter().all(|(_, k)| *k == -kz / 2) {
                others
                    .iter()
                    .map(|(v, _)| Deduction::Identify(*v, Affine::same(z)))
                    .collect()
            } else {
                Vec::new()
            }
        }
        _ => Vec::new(),
    }
}

/// Rule 4: a sum of `a` terms that must equal `a` forces every term to one.
fn rule_saturated_sum(c: &LinExpr, _: &RuleOptions) -> Vec<Deduction> {
    if c.constant == 0 {
        return Vec::new();
    }
    let all_pos = c.terms().all(|(_, k)| k > 0);
    let all_neg = c.terms().all(|(_, k)| k < 0);
    let (lo, hi) = c.bounds();
    if !((all_pos && hi == 0) || (all_neg && lo == 0)) {
        return Vec::new();
    }
    c.terms()
        .flat_map(|(m, _)| m.vars().to_vec())
        .map(|v| Deduction::Fix(v, 1))
        .collect()
}

fn infeasible(c: &LinExpr) -> bool {
    let (lo, hi) = c.bounds();
    lo > 0 || hi < 0
}

/// Satisfying assignments of a single clause, as bit masks over `vars`.
fn clause_solutions(c: &LinExpr, vars: &[BitVar]) -> Vec<u32> {
    let index = |v: BitVar| vars.iter().position(|&w| w == v).expect("clause variable");
    let terms: Vec<(u32, i64)> = c
        .terms()
        .map(|(m, k)| (m.vars().iter().fold(0u32, |acc, &v| acc | 1 << index(v)), k))
        .collect();
    (0..1u32 << vars.len())
        .filter(|&a| {
            let value: i64 = c.constant
                + terms
                    .iter()
                    .filter(|(mask, _)| a & mask == *mask)
                    .map(|(_, k)| k)
                    .sum::<i64>();
            value == 0
        })
        .collect()
}

/// Deductions that hold on every satisfying assignment of the clause alone.
fn exact_deductions(c: &LinExpr, max_vars: usize, relations: bool) -> Option<Vec<Deduction>> {
    let vars: Vec<BitVar> = c.variables().into_iter().collect();
    if vars.len() > max_vars {
        return None;
    }
    let sols = clause_solutions(c, &vars);
    if sols.is_empty() {
        return Some(Vec::new());
    }
    let mut out = Vec::new();
    let all_and = sols.iter().fold(u32::MAX, |a, &s| a & s);
    let all_or = sols.iter().fold(0u32, |a, &s| a | s);
    for (i, &v) in vars.iter().enumerate() {
        if all_and >> i & 1 == 1 {
            out.push(Deduction::Fix(v, 1));
        } else if all_or >> i & 1 == 0 {
            out.push(Deduction::Fix(v, 0));
        }
    }
    if relations {
        let free: Vec<usize> = (0..vars.len())
            .filter(|&i| all_and >> i & 1 == 0 && all_or >> i & 1 == 1)
            .collect();
        for (a, &i) in free.iter().enumerate() {
            for &j in &free[a + 1..] {
                let bit = |s: u32, k: usize| s >> k & 1;
                if sols.iter().all(|&s| bit(s, i) == bit(s, j)) {
                    out.push(Deduction::Identify(vars[i], Affine::same(vars[j])));
                } else if sols.iter().all(|&s| bit(s, i) != bit(s, j)) {
                    out.push(Deduction::Identify(vars[i], Affine::negated(vars[j])));
                } else if sols.iter().all(|&s| bit(s, i) & bit(s, j) == 0) {
                    out.push(Deduction::ZeroProduct(vars[i], vars[j]));
                }
            }
        }
    }
    Some(out)
}

/// Rule 5: a bit whose being one makes the two sides unreachable is zero.
/// Terms on one side that must sum to zero each vanish.
fn rule_upper_violation(c: &LinExpr, opts: &RuleOptions) -> Vec<Deduction> {
    if let BoundMode::Exact { max_vars } | BoundMode::ExactRelations { max_vars } = opts.bounds {
        if let Some(d) = exact_deductions(c, max_vars, false) {
            let zeros: Vec<_> = d.into_iter().filter(|d| matches!(d, Deduction::Fix(_, 0))).collect();
            if !zeros.is_empty() {
                return zeros;
            }
        }
    }
    for v in c.variables() {
        if infeasible(&c.substitute(v, Replacement::Const(1))) {
            return vec![Deduction::Fix(v, 0)];
        }
    }
    let (lo, hi) = c.bounds();
    if c.constant == 0 && (lo == 0 || hi == 0) {
        return c
            .terms()
            .map(|(m, _)| match m.vars() {
                [x, y] => Deduction::ZeroProduct(*x, *y),
                [x] => Deduction::Fix(*x, 0),
                _ => unreachable!("degree is at most two"),
            })
            .collect();
    }
    Vec::new()
}

/// Rule 6: a bit whose being zero makes the two sides unreachable is one.
fn rule_lower_violation(c: &LinExpr, opts: &RuleOptions) -> Vec<Deduction> {
    match opts.bounds {
        BoundMode::Literal => {
            // L = a + k*x (x alone on its side) while min(R) > a.
            for sign in [1i64, -1] {
                let mut e = c.clone();
                if sign < 0 {
                    e.negate();
                }
                let positive: Vec<_> = e.terms().filter(|(_, k)| *k > 0).collect();
                if let [(m, _)] = positive.as_slice() {
                    if let Some(x) = single_var(m) {
                        let lhs_const = e.constant.max(0);
                        let rhs_min = (-e.constant).max(0);
                        if rhs_min > lhs_const {
                            return vec![Deduction::Fix(x, 1)];
                        }
                    }
                }
            }
            Vec::new()
        }
        BoundMode::Interval | BoundMode::Exact { .. } | BoundMode::ExactRelations { .. } => {
            if let BoundMode::Exact { max_vars } | BoundMode::ExactRelations { max_vars } = opts.bounds {
                if let Some(d) = exact_deductions(c, max_vars, false) {
                    let ones: Vec<_> = d.into_iter().filter(|d| matches!(d, Deduction::Fix(_, 1))).collect();
                    if !ones.is_empty() {
                        return ones;
                    }
                }
            }
            for v in c.variables() {
                if infeasible(&c.substitute(v, Replacement::Const(0))) {
                    return vec![Deduction::Fix(v, 1)];
                }
            }
            Vec::new()
        }
    }
}

/// Rule 7: both sides have the same parity.
fn rule_parity(c: &LinExpr, opts: &RuleOptions) -> Vec<Deduction> {
    let odd: Vec<(&Monomial, i64)> = c.terms().filter(|(_, k)| k % 2 != 0).collect();
    let constant_odd = c.constant % 2 != 0;
    match odd.as_slice() {
        [(m, _)] => match m.vars() {
            [x] => vec![Deduction::Fix(*x, constant_odd as u8)],
            [x, y] if constant_odd => vec![Deduction::Fix(*x, 1), Deduction::Fix(*y, 1)],
            [x, y] => vec![Deduction::ZeroProduct(*x, *y)],
            _ => Vec::new(),
        },
        [(a, _), (b, _)] if opts.pair_parity => match (single_var(a), single_var(b)) {
            (Some(x), Some(y)) if constant_odd => vec![Deduction::Identify(x, Affine::negated(y))],
            (Some(x), Some(y)) => vec![Deduction::Identify(x, Affine::same(y))],
            _ => Vec::new(),
        },
        _ => Vec::new(),
    }
}

type Rule = fn(&LinExpr, &RuleOptions) -> Vec<Deduction>;

const RULES: [Rule; 7] = [
    rule_product_is_one,
    rule_exclusive_pair,
    rule_equal_to_carry,
    rule_saturated_sum,
    rule_upper_violation,
    rule_lower_violation,
    rule_parity,
];

/// One pass of rules 1..7 over every clause in column order.
pub fn apply_rules_once(system: &ClauseSystem) -> Result<(ClauseSystem, [usize; 7]), FactoringError> {
    apply_rules_once_with(system, &RuleOptions::default())
}

pub fn apply_rules_once_with(
    system: &ClauseSystem,
    opts: &RuleOptions,
) -> Result<(ClauseSystem, [usize; 7]), FactoringError> {
    let mut sys = system.clone();
    sys.use_gcd = opts.gcd;
    let mut hits = [0usize; 7];
    let mut idx = 0;
    while idx < sys.clauses.len() {
        for (r, rule) in RULES.iter().enumerate() {
            if idx >= sys.clauses.len() {
                break;
            }
            let deductions = rule(&sys.clauses[idx], opts);
            let mut fired = false;
            for d in deductions {
                fired |= sys.apply(d).map_err(|e| tag_clause(e, idx))?;
            }
            if fired {
                hits[r] += 1;
            }
        }
        idx += 1;
    }
    sys.clauses.retain(|c| !c.is_constant());
    Ok((sys, hits))
}

fn tag_clause(e: FactoringError, idx: usize) -> FactoringError {
    match e {
        FactoringError::Contradiction { clause, value } if clause == usize::MAX => {
            FactoringError::Contradiction { clause: idx, value }
        }
        other => other,
    }
}

/// Repeat [`apply_rules_once`] until nothing changes or `max_passes` is spent.
pub fn preprocess(
    system: &ClauseSystem,
    max_passes: usize,
) -> Result<(ClauseSystem, PreprocessReport), FactoringError> {
    preprocess_with(system, max_passes, &RuleOptions::default())
}

pub fn preprocess_with(
    system: &ClauseSystem,
    max_passes: usize,
    opts: &RuleOptions,
) -> Result<(ClauseSystem, PreprocessReport), FactoringError> {
    let max_passes = max_passes.max(1);
    let mut report = PreprocessReport { unknowns_before: system.unknowns.len(), ..Default::default() };
    let mut sys = system.clone();
    sys.use_gcd = opts.gcd;
    sys.normalize_clauses()?;
    sys.clauses.retain(|c| !c.is_constant());
    for _ in 0..max_passes {
        let (next, hits) = apply_rules_once_with(&sys, opts)?;
        report.passes += 1;
        for (total, h) in report.rule_hits.iter_mut().zip(hits) {
            *total += h;
        }
        let unchanged = next == sys;
        sys = next;
        if unchanged {
            report.converged = true;
            break;
        }
    }
    report.unknowns_after = sys.unknowns.len();
    Ok((sys, report))
}

/// Build and preprocess every candidate split of `n`, keeping the one with
/// the fewest unknowns (ties go to the more balanced split). Splits that end
/// in a contradiction are skipped, and so are splits that cannot hold the
/// factors whenever trial division finds them.
pub fn preprocess_number(
    n: &BigUint,
    max_passes: usize,
    opts: &RuleOptions,
) -> Result<(ClauseSystem, PreprocessReport), FactoringError> {
    let mut best: Option<(ClauseSystem, PreprocessReport)> = None;
    let mut last_err = None;
    let factors = factor_oracle(n).ok();
    for (n_p, n_q) in choose_bit_lengths(n)? {
        let built = build_clauses(n, n_p, n_q)?;
        let (sys, report) = match preprocess_with(&built, max_passes, opts) {
            Ok(r) => r,
            Err(e) => {
                last_err = Some(e);
                continue;
            }
        };
        if let Some((a, b)) = &factors {
            if sys.encode_factors(a, b).is_none() && sys.encode_factors(b, a).is_none() {
                continue;
            }
        }
        let key = |s: &ClauseSystem| (s.unknowns.len(), s.n_p.abs_diff(s.n_q));
        if best.as_ref().map_or(true, |(b, _)| key(&sys) < key(b)) {
            best = Some((sys, report));
        }
    }
    best.ok_or_else(|| last_err.unwrap_or(FactoringError::NotASolution))
}

/// Fix residual unknowns to the values in `truth` until at most `keep`
/// remain, skipping any bit whose consequences would leave fewer than
/// `keep`. Carries go first (highest column first), then `q` and `p` bits
/// from the top. Used to shrink an instance to a given register size when
/// the rules stop short of it.
pub fn condition_on(
    system: &ClauseSystem,
    truth: &BTreeMap<BitVar, u8>,
    keep: usize,
) -> Result<ClauseSystem, FactoringError> {
    let mut sys = system.clone();
    let mut order: Vec<BitVar> = sys.unknowns.iter().copied().collect();
    order.sort_by_key(|v| match *v {
        BitVar::Carry(i, j) => (0, u32::MAX - i, u32::MAX - j),
        BitVar::Q(k) => (1, u32::MAX - k, 0),
        BitVar::P(k) => (2, u32::MAX - k, 0),
    });
    for v in order {
        if sys.unknowns.len() <= keep {
            break;
        }
        if !sys.unknowns.contains(&v) {
            continue;
        }
        let value = *truth.get(&v).ok_or(FactoringError::MissingVariable(v))?;
        let mut next = sys.clone();
        next.apply(Deduction::Fix(v, value))?;
        // Skip bits whose side effects would overshoot the target.
        if next.unknowns.len() >= keep {
            sys = next;
        }
    }
    sys.clauses.retain(|c| !c.is_constant());
    Ok(sys)
}
