//! Satisfiability over the integers and booleans.
//!
//! Booleans only ever appear in xor-equations (`v = true`, `a = b`, `a ≠ b`),
//! so a parity union-find decides them exactly. Integers go through unit
//! equality substitution, Fourier-Motzkin with model extraction, and
//! branch-and-bound with lazy disequality splitting.

use std::collections::BTreeMap;

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, Zero};
use thiserror::Error;

use super::{Atomic, Constraint, Rel};
use crate::term::Sym;

type Rat = Ratio<i128>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    /// Branch-and-bound and disequality splits allowed per query.
    pub max_splits: usize,
    /// Upper bound on inequalities alive during one elimination.
    pub max_rows: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_splits: 10_000,
            max_rows: 4_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum SatError {
    #[error("resource limit reached while deciding satisfiability")]
    ResourceLimit,
}

pub fn is_sat(c: &Constraint) -> Result<bool, SatError> {
    check_sat(c, &Limits::default())
}

pub fn check_sat(c: &Constraint, limits: &Limits) -> Result<bool, SatError> {
    if c.is_false_marker() {
        return Ok(false);
    }
    let mut uf = ParityUf::default();
    if !uf.add_all(c.atoms()) {
        return Ok(false);
    }
    IntProblem::from_atoms(c.atoms()).solve(limits)
}

/// Every solution of `c` satisfies `d`. Budget exhaustion is reported.
pub fn try_entails(c: &Constraint, d: &Constraint) -> Result<bool, SatError> {
    if d.is_false_marker() {
        return is_sat(c).map(|s| !s);
    }
    for a in d.atoms() {
        let q = c.and(&Constraint::from_atomics([a.negate()]));
        if is_sat(&q)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Conservative entailment: `false` whenever the check runs out of budget.
pub fn entails(c: &Constraint, d: &Constraint) -> bool {
    try_entails(c, d).unwrap_or(false)
}

/// Union-find over boolean variables with xor parities; node 0 is `true`.
#[derive(Default)]
pub(super) struct ParityUf {
    index: BTreeMap<Sym, usize>,
    parent: Vec<usize>,
    parity: Vec<bool>,
}

impl ParityUf {
    fn node(&mut self, v: Option<&Sym>) -> usize {
        if self.parent.is_empty() {
            self.parent.push(0);
            self.parity.push(false);
        }
        let Some(v) = v else { return 0 };
        if let Some(&i) = self.index.get(v) {
            return i;
        }
        let i = self.parent.len();
        self.parent.push(i);
        self.parity.push(false);
        self.index.insert(v.clone(), i);
        i
    }

    fn find(&mut self, i: usize) -> (usize, bool) {
        let p = self.parent[i];
        if p == i {
            return (i, false);
        }
        let (root, pp) = self.find(p);
        let par = self.parity[i] ^ pp;
        self.parent[i] = root;
        self.parity[i] = par;
        (root, par)
    }

    /// Records `a xor b = odd`; returns false on conflict.
    fn union(&mut self, a: usize, b: usize, odd: bool) -> bool {
        let (ra, pa) = self.find(a);
        let (rb, pb) = self.find(b);
        if ra == rb {
            return (pa ^ pb) == odd;
        }
        // keep the constant node as a root
        if ra == 0 {
            self.parent[rb] = ra;
            self.parity[rb] = pa ^ pb ^ odd;
        } else {
            self.parent[ra] = rb;
            self.parity[ra] = pa ^ pb ^ odd;
        }
        true
    }

    pub(super) fn add(&mut self, a: &Atomic) -> bool {
        match a {
            Atomic::BoolLit(v, b) => {
                let t = self.node(None);
                let x = self.node(Some(v));
                self.union(x, t, !b)
            }
            Atomic::BoolEq(x, y, eq) => {
                self.node(None);
                let i = self.node(Some(x));
                let j = self.node(Some(y));
                self.union(i, j, !eq)
            }
            Atomic::Lin(..) => true,
        }
    }

    pub(super) fn add_all(&mut self, atoms: &[Atomic]) -> bool {
        atoms.iter().all(|a| self.add(a))
    }

    /// Class of `v`: `None` means anchored to the constant with the given
    /// value; otherwise a representative and the parity relative to it.
    pub(super) fn class_of(&mut self, v: &Sym) -> (Option<usize>, bool) {
        let i = self.node(Some(v));
        let (root, par) = self.find(i);
        if root == 0 {
            (None, !par)
        } else {
            (Some(root), par)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub(super) struct Row {
    pub a: Vec<i128>,
    pub k: i128,
}

pub(super) fn ov<T>(x: Option<T>) -> Result<T, SatError> {
    x.ok_or(SatError::ResourceLimit)
}

impl Row {
    pub(super) fn gcd(&self) -> i128 {
        self.a.iter().fold(0i128, |g, c| g.gcd(c))
    }

    /// `self + m·other`.
    pub(super) fn axpy(&self, m: i128, other: &Row) -> Result<Row, SatError> {
        let mut a = Vec::with_capacity(self.a.len());
        for (x, y) in self.a.iter().zip(&other.a) {
            a.push(ov((*x).checked_add(ov(m.checked_mul(*y))?))?);
        }
        let k = ov(self.k.checked_add(ov(m.checked_mul(other.k))?))?;
        Ok(Row { a, k })
    }

    pub(super) fn scaled(&self, m: i128) -> Result<Row, SatError> {
        let mut a = Vec::with_capacity(self.a.len());
        for x in &self.a {
            a.push(ov((*x).checked_mul(m))?);
        }
        Ok(Row {
            a,
            k: ov(self.k.checked_mul(m))?,
        })
    }

    fn eval_int(&self, vals: &[i128]) -> Result<i128, SatError> {
        let mut s = self.k;
        for (c, v) in self.a.iter().zip(vals) {
            s = ov(s.checked_add(ov((*c).checked_mul(*v))?))?;
        }
        Ok(s)
    }
}

pub(super) enum Tight {
    Trivial,
    Infeasible,
    Row(Row),
}

/// gcd-tightens `row ≤ 0`.
pub(super) fn tighten_le(mut r: Row) -> Tight {
    let g = r.gcd();
    if g == 0 {
        return if r.k <= 0 {
            Tight::Trivial
        } else {
            Tight::Infeasible
        };
    }
    if g > 1 {
        for c in r.a.iter_mut() {
            *c /= g;
        }
        r.k = Integer::div_ceil(&r.k, &g);
    }
    Tight::Row(r)
}

/// Normalizes `row = 0`; `None` means no integer solution.
fn normalize_eq(mut r: Row) -> Option<Option<Row>> {
    let g = r.gcd();
    if g == 0 {
        return if r.k == 0 { Some(None) } else { None };
    }
    if r.k % g != 0 {
        return None;
    }
    for c in r.a.iter_mut() {
        *c /= g;
    }
    r.k /= g;
    Some(Some(r))
}

/// Normalizes `row ≠ 0`; outer `None` means unsatisfiable, inner `None`
/// means trivially true.
fn normalize_ne(mut r: Row) -> Option<Option<Row>> {
    let g = r.gcd();
    if g == 0 {
        return if r.k != 0 { Some(None) } else { None };
    }
    if r.k % g != 0 {
        return Some(None);
    }
    for c in r.a.iter_mut() {
        *c /= g;
    }
    r.k /= g;
    Some(Some(r))
}

fn dedup_le(rows: Vec<Row>) -> Vec<Row> {
    let mut best: BTreeMap<Vec<i128>, i128> = BTreeMap::new();
    for r in rows {
        best.entry(r.a)
            .and_modify(|k| *k = (*k).max(r.k))
            .or_insert(r.k);
    }
    best.into_iter().map(|(a, k)| Row { a, k }).collect()
}

pub(super) struct IntProblem {
    n: usize,
    eqs: Vec<Row>,
    les: Vec<Row>,
    nes: Vec<Row>,
}

impl IntProblem {
    fn from_atoms(atoms: &[Atomic]) -> IntProblem {
        let mut index: BTreeMap<Sym, usize> = BTreeMap::new();
        for a in atoms {
            if let Atomic::Lin(e, _) = a {
                for v in e.coeffs.keys() {
                    let n = index.len();
                    index.entry(v.clone()).or_insert(n);
                }
            }
        }
        let n = index.len();
        let mut p = IntProblem {
            n,
            eqs: Vec::new(),
            les: Vec::new(),
            nes: Vec::new(),
        };
        for a in atoms {
            if let Atomic::Lin(e, rel) = a {
                let mut row = Row {
                    a: vec![0; n],
                    k: e.constant as i128,
                };
                for (v, c) in &e.coeffs {
                    row.a[index[v]] = *c as i128;
                }
                match rel {
                    Rel::Eq => p.eqs.push(row),
                    Rel::Le => p.les.push(row),
                    Rel::Ne => p.nes.push(row),
                }
            }
        }
        p
    }

    fn solve(mut self, limits: &Limits) -> Result<bool, SatError> {
        if !self.eliminate_unit_equalities()? {
            return Ok(false);
        }
        let mut les = Vec::new();
        for r in self.les.drain(..) {
            match tighten_le(r) {
                Tight::Trivial => {}
                Tight::Infeasible => return Ok(false),
                Tight::Row(r) => les.push(r),
            }
        }
        for e in self.eqs.drain(..) {
            for r in [e.clone(), e.scaled(-1)?] {
                match tighten_le(r) {
                    Tight::Trivial => {}
                    Tight::Infeasible => return Ok(false),
                    Tight::Row(r) => les.push(r),
                }
            }
        }
        let nes = std::mem::take(&mut self.nes);
        branch_and_bound(self.n, dedup_le(les), &nes, limits)
    }

    /// Substitutes away variables with a ±1 coefficient in some equality.
    /// Returns false when a contradiction shows up.
    fn eliminate_unit_equalities(&mut self) -> Result<bool, SatError> {
        let mut eqs = Vec::new();
        for r in self.eqs.drain(..) {
            match normalize_eq(r) {
                None => return Ok(false),
                Some(None) => {}
                Some(Some(r)) => eqs.push(r),
            }
        }
        loop {
            let pick = eqs
                .iter()
                .enumerate()
                .find_map(|(i, r)| r.a.iter().position(|c| c.abs() == 1).map(|x| (i, x)));
            let Some((i, x)) = pick else { break };
            let e = eqs.swap_remove(i);
            let a = e.a[x];
            let subst = |r: &Row| -> Result<Row, SatError> {
                let c = r.a[x];
                if c == 0 {
                    Ok(r.clone())
                } else {
                    r.axpy(-c * a, &e)
                }
            };
            let mut next = Vec::new();
            for r in &eqs {
                match normalize_eq(subst(r)?) {
                    None => return Ok(false),
                    Some(None) => {}
                    Some(Some(r)) => next.push(r),
                }
            }
            eqs = next;
            let mut les = Vec::new();
            for r in &self.les {
                les.push(subst(r)?);
            }
            self.les = les;
            let mut nes = Vec::new();
            for r in &self.nes {
                match normalize_ne(subst(r)?) {
                    None => return Ok(false),
                    Some(None) => {}
                    Some(Some(r)) => nes.push(r),
                }
            }
            self.nes = nes;
        }
        let mut nes = Vec::new();
        for r in self.nes.drain(..) {
            match normalize_ne(r) {
                None => return Ok(false),
                Some(None) => {}
                Some(Some(r)) => nes.push(r),
            }
        }
        self.nes = nes;
        self.eqs = eqs;
        Ok(true)
    }
}

fn unit_row(n: usize, x: usize, c: i128, k: i128) -> Row {
    let mut a = vec![0; n];
    a[x] = c;
    Row { a, k }
}

fn branch_and_bound(
    n: usize,
    les: Vec<Row>,
    nes: &[Row],
    limits: &Limits,
) -> Result<bool, SatError> {
    let mut budget = limits.max_splits;
    let mut pending = vec![les];
    while let Some(sys) = pending.pop() {
        let Some(model) = fm_model(n, &sys, limits)? else {
            continue;
        };
        if let Some((x, v)) = model.iter().enumerate().find(|(_, v)| !v.is_integer()) {
            budget = ov(budget.checked_sub(1))?;
            let f = v.floor().to_integer();
            let mut hi = sys.clone();
            hi.push(unit_row(n, x, -1, ov(f.checked_add(1))?));
            let mut lo = sys;
            lo.push(unit_row(n, x, 1, ov(f.checked_neg())?));
            pending.push(hi);
            pending.push(lo);
            continue;
        }
        let ints: Vec<i128> = model.iter().map(|v| v.to_integer()).collect();
        let mut violated = None;
        for r in nes {
            if r.eval_int(&ints)? == 0 {
                violated = Some(r);
                break;
            }
        }
        let Some(r) = violated else {
            return Ok(true);
        };
        budget = ov(budget.checked_sub(1))?;
        // e ≤ -1  or  e ≥ 1
        let below = Row {
            a: r.a.clone(),
            k: ov(r.k.checked_add(1))?,
        };
        let mut above = r.scaled(-1)?;
        above.k = ov(above.k.checked_add(1))?;
        for extra in [above, below] {
            let mut s = sys.clone();
            if let Tight::Row(t) = tighten_le(extra) {
                s.push(t);
                pending.push(s);
            }
        }
    }
    Ok(false)
}

/// Rational feasibility of `rows ≤ 0` with a witness that prefers integral
/// values near zero. `None` means infeasible.
pub(super) fn fm_model(
    n: usize,
    rows: &[Row],
    limits: &Limits,
) -> Result<Option<Vec<Rat>>, SatError> {
    let mut current = Vec::new();
    for r in rows {
        match tighten_le(r.clone()) {
            Tight::Trivial => {}
            Tight::Infeasible => return Ok(None),
            Tight::Row(r) => current.push(r),
        }
    }
    let mut current = dedup_le(current);
    let mut stack: Vec<(usize, Vec<Row>)> = Vec::new();
    while let Some(x) = choose_var(n, &current) {
        let (with, without): (Vec<Row>, Vec<Row>) = current.into_iter().partition(|r| r.a[x] != 0);
        let mut next = without;
        for p in with.iter().filter(|r| r.a[x] > 0) {
            for q in with.iter().filter(|r| r.a[x] < 0) {
                let cp = p.a[x];
                let cq = -q.a[x];
                let combined = p.scaled(cq)?.axpy(cp, q)?;
                match tighten_le(combined) {
                    Tight::Trivial => {}
                    Tight::Infeasible => return Ok(None),
                    Tight::Row(r) => next.push(r),
                }
            }
        }
        let next = dedup_le(next);
        if next.len() > limits.max_rows {
            return Err(SatError::ResourceLimit);
        }
        stack.push((x, with));
        current = next;
    }
    let mut vals = vec![Rat::zero(); n];
    for (x, rs) in stack.iter().rev() {
        let mut lo: Option<Rat> = None;
        let mut hi: Option<Rat> = None;
        for r in rs {
            let mut rest = Rat::from_integer(r.k);
            for (j, c) in r.a.iter().enumerate() {
                if j != *x && *c != 0 {
                    let term = ov(vals[j].checked_mul(&Rat::from_integer(*c)))?;
                    rest = ov(rest.checked_add(&term))?;
                }
            }
            let bound = ov((-rest).checked_div(&Rat::from_integer(r.a[*x])))?;
            if r.a[*x] > 0 {
                hi = Some(hi.map_or(bound, |h| h.min(bound)));
            } else {
                lo = Some(lo.map_or(bound, |l| l.max(bound)));
            }
        }
        vals[*x] = pick_value(lo, hi)?;
    }
    Ok(Some(vals))
}

fn choose_var(n: usize, rows: &[Row]) -> Option<usize> {
    let mut best: Option<(usize, usize)> = None;
    for x in 0..n {
        let pos = rows.iter().filter(|r| r.a[x] > 0).count();
        let neg = rows.iter().filter(|r| r.a[x] < 0).count();
        if pos + neg == 0 {
            continue;
        }
        let cost = pos * neg;
        if best.is_none_or(|(_, c)| cost < c) {
            best = Some((x, cost));
        }
    }
    best.map(|(x, _)| x)
}

fn pick_value(lo: Option<Rat>, hi: Option<Rat>) -> Result<Rat, SatError> {
    let zero = Rat::zero();
    Ok(match (lo, hi) {
        (None, None) => zero,
        (Some(l), None) => {
            if l <= zero {
                zero
            } else {
                l.ceil()
            }
        }
        (None, Some(h)) => {
            if h >= zero {
                zero
            } else {
                h.floor()
            }
        }
        (Some(l), Some(h)) => {
            let cl = l.ceil();
            let fh = h.floor();
            if cl <= fh {
                if cl > zero {
                    cl
                } else if fh < zero {
                    fh
                } else {
                    zero
                }
            } else {
                let s = ov(l.checked_add(&h))?;
                ov(s.checked_div(&Rat::from_integer(2)))?
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::RelOp;
    use crate::term::{ArithOp, Term, Var};

    fn x(n: &str) -> Term {
        Term::Var(Var::int(n))
    }

    fn c(items: &[(Term, RelOp, Term)]) -> Constraint {
        let mut c = Constraint::top();
        for (l, op, r) in items {
            c.relate(l, *op, r).unwrap();
        }
        c
    }

    fn plus(a: Term, k: i64) -> Term {
        Term::Arith(ArithOp::Add, vec![a, Term::Int(k)])
    }

    #[test]
    fn contradictory_bounds() {
        let k = c(&[
            (x("X"), RelOp::Eq, Term::Int(0)),
            (x("X"), RelOp::Gt, Term::Int(0)),
        ]);
        assert_eq!(is_sat(&k), Ok(false));
    }

    #[test]
    fn successor_equation_is_sat() {
        let k = c(&[(x("N01"), RelOp::Eq, plus(x("N0"), 1))]);
        assert_eq!(is_sat(&k), Ok(true));
    }

    #[test]
    fn integer_gap_needs_branching() {
        // 3 ≤ 2X ≤ 3 has the rational solution 1.5 only
        let two_x = Term::Arith(ArithOp::Mul, vec![Term::Int(2), x("X")]);
        let y = Term::Arith(
            ArithOp::Add,
            vec![
                two_x.clone(),
                Term::Arith(ArithOp::Mul, vec![Term::Int(4), x("Y")]),
            ],
        );
        let k = c(&[
            (y.clone(), RelOp::Ge, Term::Int(3)),
            (y, RelOp::Le, Term::Int(5)),
        ]);
        // 2X+4Y ∈ [3,5] forces 2X+4Y = 4
        assert_eq!(is_sat(&k), Ok(true));
        let z = Term::Arith(
            ArithOp::Add,
            vec![two_x, Term::Arith(ArithOp::Mul, vec![Term::Int(4), x("Y")])],
        );
        let k2 = c(&[
            (z.clone(), RelOp::Ge, Term::Int(5)),
            (z, RelOp::Le, Term::Int(7)),
        ]);
        assert_eq!(is_sat(&k2), Ok(true));
        let three_x = Term::Arith(ArithOp::Mul, vec![Term::Int(3), x("X")]);
        let three_y = Term::Arith(ArithOp::Mul, vec![Term::Int(3), x("Y")]);
        let w = Term::Arith(ArithOp::Add, vec![three_x, three_y]);
        let k3 = c(&[
            (w.clone(), RelOp::Ge, Term::Int(1)),
            (w, RelOp::Le, Term::Int(2)),
        ]);
        assert_eq!(is_sat(&k3), Ok(false));
    }

    #[test]
    fn disequality_splitting() {
        let k = c(&[
            (x("X"), RelOp::Ge, Term::Int(0)),
            (x("X"), RelOp::Le, Term::Int(1)),
            (x("X"), RelOp::Ne, Term::Int(0)),
            (x("X"), RelOp::Ne, Term::Int(1)),
        ]);
        assert_eq!(is_sat(&k), Ok(false));
        let k = c(&[
            (x("X"), RelOp::Ne, x("Y")),
            (x("Y"), RelOp::Ne, x("Z")),
            (x("X"), RelOp::Ne, x("Z")),
        ]);
        assert_eq!(is_sat(&k), Ok(true));
    }

    #[test]
    fn boolean_parity() {
        let mut k = Constraint::top();
        k.push(Atomic::BoolEq("A".into(), "B".into(), false));
        k.push(Atomic::BoolEq("B".into(), "C".into(), false));
        k.push(Atomic::BoolEq("A".into(), "C".into(), false));
        assert_eq!(is_sat(&k), Ok(false));
        let mut k = Constraint::top();
        k.push(Atomic::BoolLit("A".into(), true));
        k.push(Atomic::BoolEq("A".into(), "B".into(), false));
        k.push(Atomic::BoolLit("B".into(), false));
        assert_eq!(is_sat(&k), Ok(true));
    }

    #[test]
    fn entailment_examples() {
        let one = c(&[(x("X"), RelOp::Eq, Term::Int(1))]);
        let nonneg = c(&[(x("X"), RelOp::Ge, Term::Int(0))]);
        assert!(entails(&one, &nonneg));
        assert!(!entails(&Constraint::top(), &nonneg));
        let k = c(&[
            (x("N01"), RelOp::Eq, plus(x("N0"), 1)),
            (x("N0"), RelOp::Ge, Term::Int(0)),
        ]);
        let goal = c(&[(x("N01"), RelOp::Ge, Term::Int(1))]);
        assert!(entails(&k, &goal));
    }

    #[test]
    fn split_budget_is_reported() {
        let limits = Limits {
            max_splits: 0,
            max_rows: 4_000,
        };
        let k = c(&[
            (x("X"), RelOp::Ge, Term::Int(0)),
            (x("X"), RelOp::Le, Term::Int(1)),
            (x("X"), RelOp::Ne, Term::Int(0)),
            (x("X"), RelOp::Ne, Term::Int(1)),
        ]);
        assert_eq!(check_sat(&k, &limits), Err(SatError::ResourceLimit));
        assert_eq!(check_sat(&k, &Limits::default()), Ok(false));
    }
}
