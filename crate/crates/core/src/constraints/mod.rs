//! Conjunctions of linear integer and boolean atomic constraints.

mod project;
mod sat;
mod simplify;

pub use project::project;
pub use sat::{check_sat, entails, is_sat, try_entails, Limits, SatError};
pub use simplify::eliminate_defined;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_integer::Integer;
use thiserror::Error;

use crate::term::{ArithOp, Sort, Sym, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConstraintError {
    #[error("non-linear arithmetic term `{0}`")]
    NonLinear(String),
    #[error("arithmetic overflow while normalizing constraint")]
    Overflow,
    #[error("term `{0}` cannot appear in an arithmetic constraint")]
    NotArithmetic(String),
    #[error("relation `{op}` is not defined on {sort}")]
    BadRelation { op: &'static str, sort: String },
}

/// `Σ coeffs[x]·x + constant`.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinExpr {
    pub coeffs: BTreeMap<Sym, i64>,
    pub constant: i64,
}

impl LinExpr {
    pub fn constant(k: i64) -> Self {
        LinExpr {
            coeffs: BTreeMap::new(),
            constant: k,
        }
    }

    pub fn var(name: impl Into<Sym>) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(name.into(), 1);
        LinExpr {
            coeffs,
            constant: 0,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, v: &Sym) -> i64 {
        self.coeffs.get(v).copied().unwrap_or(0)
    }

    pub fn add(&self, other: &LinExpr) -> Result<LinExpr, ConstraintError> {
        let mut out = self.clone();
        for (v, a) in &other.coeffs {
            let entry = out.coeffs.entry(v.clone()).or_insert(0);
            *entry = entry.checked_add(*a).ok_or(ConstraintError::Overflow)?;
        }
        out.coeffs.retain(|_, a| *a != 0);
        out.constant = out
            .constant
            .checked_add(other.constant)
            .ok_or(ConstraintError::Overflow)?;
        Ok(out)
    }

    pub fn scale(&self, k: i64) -> Result<LinExpr, ConstraintError> {
        if k == 0 {
            return Ok(LinExpr::default());
        }
        let mut coeffs = BTreeMap::new();
        for (v, a) in &self.coeffs {
            coeffs.insert(
                v.clone(),
                a.checked_mul(k).ok_or(ConstraintError::Overflow)?,
            );
        }
        Ok(LinExpr {
            coeffs,
            constant: self
                .constant
                .checked_mul(k)
                .ok_or(ConstraintError::Overflow)?,
        })
    }

    pub fn sub(&self, other: &LinExpr) -> Result<LinExpr, ConstraintError> {
        self.add(&other.scale(-1)?)
    }

    pub fn vars(&self) -> impl Iterator<Item = &Sym> {
        self.coeffs.keys()
    }

    /// Translates an integer-typed term.
    pub fn from_term(t: &Term) -> Result<LinExpr, ConstraintError> {
        match t {
            Term::Var(v) if v.sort == Sort::Int => Ok(LinExpr::var(v.name.clone())),
            Term::Int(k) => Ok(LinExpr::constant(*k)),
            Term::Arith(op, args) => {
                let parts = args
                    .iter()
                    .map(LinExpr::from_term)
                    .collect::<Result<Vec<_>, _>>()?;
                match op {
                    ArithOp::Add => {
                        let mut acc = LinExpr::default();
                        for p in &parts {
                            acc = acc.add(p)?;
                        }
                        Ok(acc)
                    }
                    ArithOp::Sub => {
                        let (first, rest) = parts
                            .split_first()
                            .ok_or_else(|| ConstraintError::NonLinear(format!("{t:?}")))?;
                        let mut acc = first.clone();
                        for p in rest {
                            acc = acc.sub(p)?;
                        }
                        Ok(acc)
                    }
                    ArithOp::Neg => {
                        let p = parts
                            .first()
                            .ok_or_else(|| ConstraintError::NonLinear(format!("{t:?}")))?;
                        p.scale(-1)
                    }
                    ArithOp::Mul => {
                        let mut acc = LinExpr::constant(1);
                        for p in &parts {
                            if p.is_constant() {
                                acc = acc.scale(p.constant)?;
                            } else if acc.is_constant() {
                                acc = p.scale(acc.constant)?;
                            } else {
                                return Err(ConstraintError::NonLinear(crate::display::term(t)));
                            }
                        }
                        Ok(acc)
                    }
                }
            }
            other => Err(ConstraintError::NotArithmetic(crate::display::term(other))),
        }
    }

    /// Builds a term equal to the expression (used when substituting into atoms).
    pub fn to_term(&self) -> Term {
        let mut parts: Vec<Term> = Vec::new();
        for (v, a) in &self.coeffs {
            let x = Term::Var(crate::term::Var::new(v.clone(), Sort::Int));
            parts.push(match *a {
                1 => x,
                -1 => Term::Arith(ArithOp::Neg, vec![x]),
                a => Term::Arith(ArithOp::Mul, vec![Term::Int(a), x]),
            });
        }
        if self.constant != 0 || parts.is_empty() {
            parts.push(Term::Int(self.constant));
        }
        if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            Term::Arith(ArithOp::Add, parts)
        }
    }
}

/// Relation of a linear atomic against zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rel {
    Eq,
    Ne,
    Le,
}

/// Surface relation operators accepted by the builders.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RelOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl RelOp {
    pub fn symbol(self) -> &'static str {
        match self {
            RelOp::Eq => "=",
            RelOp::Ne => "\\=",
            RelOp::Lt => "<",
            RelOp::Le => "=<",
            RelOp::Gt => ">",
            RelOp::Ge => ">=",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atomic {
    /// `expr REL 0`, kept in canonical form.
    Lin(LinExpr, Rel),
    /// `v` when the flag is true, `¬v` otherwise.
    BoolLit(Sym, bool),
    /// `a = b` when the flag is true, `a ≠ b` otherwise; `a < b`.
    BoolEq(Sym, Sym, bool),
}

/// Result of normalizing one atomic.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Norm {
    True,
    False,
    Atom(Atomic),
}

fn gcd_all(e: &LinExpr) -> i64 {
    e.coeffs.values().fold(0i64, |g, a| g.gcd(a))
}

fn leading_negative(e: &LinExpr) -> bool {
    e.coeffs.values().next().is_some_and(|a| *a < 0)
}

impl Atomic {
    pub fn lin(expr: LinExpr, rel: Rel) -> Norm {
        Atomic::Lin(expr, rel).normalize()
    }

    pub fn normalize(self) -> Norm {
        match self {
            Atomic::Lin(mut e, rel) => {
                e.coeffs.retain(|_, a| *a != 0);
                if e.is_constant() {
                    let holds = match rel {
                        Rel::Eq => e.constant == 0,
                        Rel::Ne => e.constant != 0,
                        Rel::Le => e.constant <= 0,
                    };
                    return if holds { Norm::True } else { Norm::False };
                }
                let g = gcd_all(&e);
                match rel {
                    Rel::Le => {
                        for a in e.coeffs.values_mut() {
                            *a /= g;
                        }
                        e.constant = Integer::div_ceil(&e.constant, &g);
                        Norm::Atom(Atomic::Lin(e, Rel::Le))
                    }
                    Rel::Eq | Rel::Ne => {
                        if e.constant % g != 0 {
                            return if rel == Rel::Eq {
                                Norm::False
                            } else {
                                Norm::True
                            };
                        }
                        let sign = if leading_negative(&e) { -1 } else { 1 };
                        for a in e.coeffs.values_mut() {
                            *a = *a / g * sign;
                        }
                        e.constant = e.constant / g * sign;
                        Norm::Atom(Atomic::Lin(e, rel))
                    }
                }
            }
            Atomic::BoolLit(v, b) => Norm::Atom(Atomic::BoolLit(v, b)),
            Atomic::BoolEq(a, b, eq) => {
                if a == b {
                    if eq {
                        Norm::True
                    } else {
                        Norm::False
                    }
                } else if a < b {
                    Norm::Atom(Atomic::BoolEq(a, b, eq))
                } else {
                    Norm::Atom(Atomic::BoolEq(b, a, eq))
                }
            }
        }
    }

    /// The single atomic equivalent to the negation (over the integers).
    pub fn negate(&self) -> Atomic {
        match self {
            Atomic::Lin(e, Rel::Eq) => Atomic::Lin(e.clone(), Rel::Ne),
            Atomic::Lin(e, Rel::Ne) => Atomic::Lin(e.clone(), Rel::Eq),
            Atomic::Lin(e, Rel::Le) => {
                // ¬(e ≤ 0)  ⇔  -e + 1 ≤ 0
                let mut n = e.scale(-1).expect("negating a normalized expression");
                n.constant += 1;
                Atomic::Lin(n, Rel::Le)
            }
            Atomic::BoolLit(v, b) => Atomic::BoolLit(v.clone(), !b),
            Atomic::BoolEq(a, b, eq) => Atomic::BoolEq(a.clone(), b.clone(), !eq),
        }
    }

    pub fn vars(&self) -> Vec<Sym> {
        match self {
            Atomic::Lin(e, _) => e.coeffs.keys().cloned().collect(),
            Atomic::BoolLit(v, _) => vec![v.clone()],
            Atomic::BoolEq(a, b, _) => vec![a.clone(), b.clone()],
        }
    }

    pub fn is_boolean(&self) -> bool {
        !matches!(self, Atomic::Lin(..))
    }

    /// Builds the normalized atomic for `lhs op rhs`; both sides must have
    /// the same basic sort.
    pub fn relation(lhs: &Term, op: RelOp, rhs: &Term) -> Result<Norm, ConstraintError> {
        let sort = lhs.sort();
        if sort == Sort::Bool {
            return bool_relation(lhs, op, rhs);
        }
        if !sort.is_basic() {
            return Err(ConstraintError::BadRelation {
                op: op.symbol(),
                sort: sort.to_string(),
            });
        }
        let l = LinExpr::from_term(lhs)?;
        let r = LinExpr::from_term(rhs)?;
        let d = l.sub(&r)?;
        let norm = match op {
            RelOp::Eq => Atomic::lin(d, Rel::Eq),
            RelOp::Ne => Atomic::lin(d, Rel::Ne),
            RelOp::Le => Atomic::lin(d, Rel::Le),
            RelOp::Lt => {
                let mut d = d;
                d.constant = d.constant.checked_add(1).ok_or(ConstraintError::Overflow)?;
                Atomic::lin(d, Rel::Le)
            }
            RelOp::Ge => Atomic::lin(d.scale(-1)?, Rel::Le),
            RelOp::Gt => {
                let mut d = d.scale(-1)?;
                d.constant = d.constant.checked_add(1).ok_or(ConstraintError::Overflow)?;
                Atomic::lin(d, Rel::Le)
            }
        };
        Ok(norm)
    }
}

fn bool_relation(lhs: &Term, op: RelOp, rhs: &Term) -> Result<Norm, ConstraintError> {
    let equal = match op {
        RelOp::Eq => true,
        RelOp::Ne => false,
        _ => {
            return Err(ConstraintError::BadRelation {
                op: op.symbol(),
                sort: "bool".into(),
            })
        }
    };
    let norm = match (lhs, rhs) {
        (Term::Var(a), Term::Var(b)) => {
            Atomic::BoolEq(a.name.clone(), b.name.clone(), equal).normalize()
        }
        (Term::Var(a), Term::Bool(v)) | (Term::Bool(v), Term::Var(a)) => {
            Norm::Atom(Atomic::BoolLit(a.name.clone(), *v == equal))
        }
        (Term::Bool(x), Term::Bool(y)) => {
            if (x == y) == equal {
                Norm::True
            } else {
                Norm::False
            }
        }
        (other, _) => return Err(ConstraintError::NotArithmetic(crate::display::term(other))),
    };
    Ok(norm)
}

/// A conjunction of atomics; the empty conjunction is `true`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Constraint {
    atoms: Vec<Atomic>,
    falsum: bool,
}

impl Constraint {
    pub fn top() -> Self {
        Constraint::default()
    }

    pub fn bottom() -> Self {
        Constraint {
            atoms: Vec::new(),
            falsum: true,
        }
    }

    pub fn from_atomics(items: impl IntoIterator<Item = Atomic>) -> Self {
        let mut c = Constraint::top();
        for a in items {
            c.push(a);
        }
        c
    }

    pub fn from_norms(items: impl IntoIterator<Item = Norm>) -> Self {
        let mut c = Constraint::top();
        for n in items {
            c.push_norm(n);
        }
        c
    }

    pub fn push(&mut self, a: Atomic) {
        self.push_norm(a.normalize());
    }

    pub fn push_norm(&mut self, n: Norm) {
        if self.falsum {
            return;
        }
        match n {
            Norm::True => {}
            Norm::False => {
                self.atoms.clear();
                self.falsum = true;
            }
            Norm::Atom(a) => {
                if !self.atoms.contains(&a) {
                    self.atoms.push(a);
                }
            }
        }
    }

    /// Adds `lhs op rhs`.
    pub fn relate(&mut self, lhs: &Term, op: RelOp, rhs: &Term) -> Result<(), ConstraintError> {
        let n = Atomic::relation(lhs, op, rhs)?;
        self.push_norm(n);
        Ok(())
    }

    pub fn and(&self, other: &Constraint) -> Constraint {
        if self.falsum || other.falsum {
            return Constraint::bottom();
        }
        let mut c = self.clone();
        for a in &other.atoms {
            c.push(a.clone());
        }
        c
    }

    pub fn atoms(&self) -> &[Atomic] {
        &self.atoms
    }

    pub fn is_false_marker(&self) -> bool {
        self.falsum
    }

    pub fn is_true(&self) -> bool {
        !self.falsum && self.atoms.is_empty()
    }

    pub fn vars(&self) -> BTreeSet<Sym> {
        self.atoms.iter().flat_map(Atomic::vars).collect()
    }

    pub fn int_vars(&self) -> BTreeSet<Sym> {
        self.atoms
            .iter()
            .filter(|a| !a.is_boolean())
            .flat_map(Atomic::vars)
            .collect()
    }

    pub fn bool_vars(&self) -> BTreeSet<Sym> {
        self.atoms
            .iter()
            .filter(|a| a.is_boolean())
            .flat_map(Atomic::vars)
            .collect()
    }

    /// Set view used for order-insensitive comparison.
    pub fn atom_set(&self) -> BTreeSet<Atomic> {
        self.atoms.iter().cloned().collect()
    }

    pub fn same_conjuncts(&self, other: &Constraint) -> bool {
        self.falsum == other.falsum && self.atom_set() == other.atom_set()
    }

    /// Simultaneous substitution of variables by terms of the matching sort.
    pub fn substitute(&self, map: &BTreeMap<Sym, Term>) -> Result<Constraint, ConstraintError> {
        if self.falsum {
            return Ok(Constraint::bottom());
        }
        let mut out = Constraint::top();
        for a in &self.atoms {
            match a {
                Atomic::Lin(e, rel) => {
                    let mut acc = LinExpr::constant(e.constant);
                    for (v, k) in &e.coeffs {
                        let part = match map.get(v) {
                            Some(t) => LinExpr::from_term(t)?,
                            None => LinExpr::var(v.clone()),
                        };
                        acc = acc.add(&part.scale(*k)?)?;
                    }
                    out.push_norm(Atomic::lin(acc, *rel));
                }
                Atomic::BoolLit(v, b) => match map.get(v) {
                    None => out.push(a.clone()),
                    Some(Term::Var(w)) => out.push(Atomic::BoolLit(w.name.clone(), *b)),
                    Some(Term::Bool(x)) => {
                        out.push_norm(if x == b { Norm::True } else { Norm::False })
                    }
                    Some(t) => return Err(ConstraintError::NotArithmetic(crate::display::term(t))),
                },
                Atomic::BoolEq(x, y, eq) => {
                    let l = map
                        .get(x)
                        .cloned()
                        .unwrap_or_else(|| Term::Var(crate::term::Var::new(x.clone(), Sort::Bool)));
                    let r = map
                        .get(y)
                        .cloned()
                        .unwrap_or_else(|| Term::Var(crate::term::Var::new(y.clone(), Sort::Bool)));
                    let op = if *eq { RelOp::Eq } else { RelOp::Ne };
                    out.push_norm(bool_relation(&l, op, &r)?);
                }
            }
        }
        Ok(out)
    }

    /// Renames variables; names missing from the map stay unchanged.
    pub fn rename(&self, map: &BTreeMap<Sym, Sym>) -> Constraint {
        let r = |v: &Sym| map.get(v).cloned().unwrap_or_else(|| v.clone());
        let mut out = Constraint {
            atoms: Vec::new(),
            falsum: self.falsum,
        };
        for a in &self.atoms {
            let renamed = match a {
                Atomic::Lin(e, rel) => {
                    let mut coeffs = BTreeMap::new();
                    for (v, k) in &e.coeffs {
                        *coeffs.entry(r(v)).or_insert(0) += k;
                    }
                    Atomic::Lin(
                        LinExpr {
                            coeffs,
                            constant: e.constant,
                        },
                        *rel,
                    )
                }
                Atomic::BoolLit(v, b) => Atomic::BoolLit(r(v), *b),
                Atomic::BoolEq(x, y, eq) => Atomic::BoolEq(r(x), r(y), *eq),
            };
            out.push(renamed);
        }
        out
    }
}

/// `α(c1, c2)`: the conjuncts of `c1` entailed by `c2`.
pub fn widen(c1: &Constraint, c2: &Constraint) -> Constraint {
    if c1.is_false_marker() {
        return if matches!(is_sat(c2), Ok(false)) {
            Constraint::bottom()
        } else {
            Constraint::top()
        };
    }
    Constraint::from_atomics(
        c1.atoms()
            .iter()
            .filter(|a| entails(c2, &Constraint::from_atomics([(*a).clone()])))
            .cloned(),
    )
}

impl fmt::Display for Atomic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atomic::Lin(e, rel) => {
                let mut lhs = Vec::new();
                let mut rhs = Vec::new();
                for (v, a) in &e.coeffs {
                    let (side, k) = if *a > 0 {
                        (&mut lhs, *a)
                    } else {
                        (&mut rhs, -*a)
                    };
                    side.push(if k == 1 {
                        v.to_string()
                    } else {
                        format!("{k}*{v}")
                    });
                }
                if e.constant < 0 {
                    rhs.push((-e.constant).to_string());
                } else if e.constant > 0 {
                    lhs.push(e.constant.to_string());
                }
                let join = |side: Vec<String>| {
                    if side.is_empty() {
                        "0".to_string()
                    } else {
                        side.join("+")
                    }
                };
                let op = match rel {
                    Rel::Eq => "=",
                    Rel::Ne => "\\=",
                    Rel::Le => "=<",
                };
                if *rel != Rel::Le && lhs.len() > rhs.len() {
                    std::mem::swap(&mut lhs, &mut rhs);
                }
                write!(f, "{}{}{}", join(lhs), op, join(rhs))
            }
            Atomic::BoolLit(v, b) => write!(f, "{v}={b}"),
            Atomic::BoolEq(a, b, eq) => write!(f, "{a}{}{b}", if *eq { "=" } else { "\\=" }),
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.falsum {
            return f.write_str("false");
        }
        if self.atoms.is_empty() {
            return f.write_str("true");
        }
        let parts: Vec<String> = self.atoms.iter().map(|a| a.to_string()).collect();
        f.write_str(&parts.join(", "))
    }
}
