//! Substitutions, most general unifiers, one-way matching and variants.

use std::collections::{BTreeMap, BTreeSet};

use crate::clause::Clause;
use crate::constraints::ConstraintError;
use crate::term::{Atom, Sym, Term, Var};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Substitution(BTreeMap<Sym, Term>);

impl Substitution {
    pub fn identity() -> Self {
        Substitution::default()
    }

    pub fn from_map(m: BTreeMap<Sym, Term>) -> Self {
        Substitution(m)
    }

    pub fn insert(&mut self, v: Sym, t: Term) {
        self.0.insert(v, t);
    }

    pub fn get(&self, v: &Sym) -> Option<&Term> {
        self.0.get(v)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn map(&self) -> &BTreeMap<Sym, Term> {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Sym, &Term)> {
        self.0.iter()
    }

    /// No bound variable occurs in an image term.
    pub fn is_idempotent(&self) -> bool {
        self.0.values().all(|t| self.0.keys().all(|v| !t.occurs(v)))
    }

    pub fn term(&self, t: &Term) -> Term {
        match t {
            Term::Var(v) => self.0.get(&v.name).cloned().unwrap_or_else(|| t.clone()),
            Term::Int(_) | Term::Bool(_) => t.clone(),
            Term::Ctor { name, sort, args } => Term::Ctor {
                name: name.clone(),
                sort: sort.clone(),
                args: args.iter().map(|a| self.term(a)).collect(),
            },
            Term::Arith(op, args) => Term::Arith(*op, args.iter().map(|a| self.term(a)).collect()),
        }
    }

    pub fn atom(&self, a: &Atom) -> Atom {
        Atom {
            pred: a.pred.clone(),
            args: a.args.iter().map(|t| self.term(t)).collect(),
        }
    }

    pub fn atoms(&self, atoms: &[Atom]) -> Vec<Atom> {
        atoms.iter().map(|a| self.atom(a)).collect()
    }

    /// Applies to head, body and constraint; marks and id are kept.
    pub fn clause(&self, c: &Clause) -> Result<Clause, ConstraintError> {
        Ok(Clause {
            id: c.id,
            head: c.head.as_ref().map(|h| self.atom(h)),
            constraint: c.constraint.substitute(&self.0)?,
            body: self.atoms(&c.body),
            marks: c.marks.clone(),
        })
    }

    /// `self` followed by `other`: `t ↦ other(self(t))`.
    pub fn then(&self, other: &Substitution) -> Substitution {
        let mut m: BTreeMap<Sym, Term> = self
            .0
            .iter()
            .map(|(v, t)| (v.clone(), other.term(t)))
            .collect();
        for (v, t) in &other.0 {
            m.entry(v.clone()).or_insert_with(|| t.clone());
        }
        m.retain(|v, t| !matches!(t, Term::Var(w) if &w.name == v));
        Substitution(m)
    }

    pub fn restrict(&self, vars: &BTreeSet<Sym>) -> Substitution {
        Substitution(
            self.0
                .iter()
                .filter(|(v, _)| vars.contains(*v))
                .map(|(v, t)| (v.clone(), t.clone()))
                .collect(),
        )
    }
}

/// An mgu over the Herbrand part plus equations between basic-typed terms
/// that are left to the constraint engine.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Unifier {
    pub subst: Substitution,
    pub equations: Vec<(Term, Term)>,
}

fn walk(bind: &BTreeMap<Sym, Term>, t: Term) -> Term {
    let mut cur = t;
    while let Term::Var(v) = &cur {
        match bind.get(&v.name) {
            Some(next) => cur = next.clone(),
            None => break,
        }
    }
    cur
}

fn occurs_deep(bind: &BTreeMap<Sym, Term>, name: &Sym, t: &Term) -> bool {
    match t {
        Term::Var(v) => {
            if &v.name == name {
                return true;
            }
            bind.get(&v.name)
                .is_some_and(|n| occurs_deep(bind, name, n))
        }
        Term::Int(_) | Term::Bool(_) => false,
        Term::Ctor { args, .. } | Term::Arith(_, args) => {
            args.iter().any(|a| occurs_deep(bind, name, a))
        }
    }
}

fn resolve(bind: &BTreeMap<Sym, Term>, t: &Term) -> Term {
    match t {
        Term::Var(v) => match bind.get(&v.name) {
            Some(n) => resolve(bind, n),
            None => t.clone(),
        },
        Term::Int(_) | Term::Bool(_) => t.clone(),
        Term::Ctor { name, sort, args } => Term::Ctor {
            name: name.clone(),
            sort: sort.clone(),
            args: args.iter().map(|a| resolve(bind, a)).collect(),
        },
        Term::Arith(op, args) => Term::Arith(*op, args.iter().map(|a| resolve(bind, a)).collect()),
    }
}

/// Unifies a list of term pairs. Right-hand variables are bound first so
/// that, with the caller's clause on the left, its variable names survive.
pub fn unify_pairs(pairs: Vec<(Term, Term)>) -> Option<Unifier> {
    let mut bind: BTreeMap<Sym, Term> = BTreeMap::new();
    let mut eqs: Vec<(Term, Term)> = Vec::new();
    let mut stack = pairs;
    stack.reverse();
    while let Some((l, r)) = stack.pop() {
        let l = walk(&bind, l);
        let r = walk(&bind, r);
        match (&l, &r) {
            (Term::Var(a), Term::Var(b)) if a.name == b.name => {}
            (_, Term::Var(b)) => {
                if occurs_deep(&bind, &b.name, &l) {
                    if b.sort.is_basic() {
                        eqs.push((l.clone(), r.clone()));
                    } else {
                        return None;
                    }
                } else {
                    bind.insert(b.name.clone(), l.clone());
                }
            }
            (Term::Var(a), _) => {
                if occurs_deep(&bind, &a.name, &r) {
                    if a.sort.is_basic() {
                        eqs.push((l.clone(), r.clone()));
                    } else {
                        return None;
                    }
                } else {
                    bind.insert(a.name.clone(), r.clone());
                }
            }
            (Term::Int(x), Term::Int(y)) => {
                if x != y {
                    return None;
                }
            }
            (Term::Bool(x), Term::Bool(y)) => {
                if x != y {
                    return None;
                }
            }
            (
                Term::Ctor {
                    name: f, args: xs, ..
                },
                Term::Ctor {
                    name: g, args: ys, ..
                },
            ) => {
                if f != g || xs.len() != ys.len() {
                    return None;
                }
                for (x, y) in xs.iter().zip(ys).rev() {
                    stack.push((x.clone(), y.clone()));
                }
            }
            (Term::Ctor { .. }, _) | (_, Term::Ctor { .. }) => return None,
            (Term::Int(_), Term::Bool(_)) | (Term::Bool(_), Term::Int(_)) => return None,
            _ => eqs.push((l.clone(), r.clone())),
        }
    }
    let subst = bind
        .iter()
        .map(|(v, t)| (v.clone(), resolve(&bind, t)))
        .collect::<BTreeMap<_, _>>();
    let equations = eqs
        .iter()
        .map(|(a, b)| (resolve(&bind, a), resolve(&bind, b)))
        .collect();
    Some(Unifier {
        subst: Substitution(subst),
        equations,
    })
}

/// Most general unifier of two atoms; `None` if there is none.
pub fn mgu(a1: &Atom, a2: &Atom) -> Option<Unifier> {
    if a1.pred != a2.pred || a1.args.len() != a2.args.len() {
        return None;
    }
    unify_pairs(
        a1.args
            .iter()
            .cloned()
            .zip(a2.args.iter().cloned())
            .collect(),
    )
}

/// One-way matching: extends `s` so that `s(pattern) = target`, binding only
/// pattern variables.
pub fn match_term(pattern: &Term, target: &Term, s: &mut Substitution) -> bool {
    match pattern {
        Term::Var(v) => match s.0.get(&v.name) {
            Some(bound) => bound == target,
            None => {
                if v.sort != target.sort() {
                    return false;
                }
                s.0.insert(v.name.clone(), target.clone());
                true
            }
        },
        Term::Int(_) | Term::Bool(_) => pattern == target,
        Term::Ctor { name, args, .. } => match target {
            Term::Ctor {
                name: n2, args: a2, ..
            } if name == n2 && args.len() == a2.len() => {
                args.iter().zip(a2).all(|(p, t)| match_term(p, t, s))
            }
            _ => false,
        },
        Term::Arith(op, args) => match target {
            Term::Arith(op2, a2) if op == op2 && args.len() == a2.len() => {
                args.iter().zip(a2).all(|(p, t)| match_term(p, t, s))
            }
            _ => false,
        },
    }
}

pub fn match_atom(pattern: &Atom, target: &Atom, s: &mut Substitution) -> bool {
    if pattern.pred != target.pred || pattern.args.len() != target.args.len() {
        return false;
    }
    let saved = s.clone();
    let ok = pattern
        .args
        .iter()
        .zip(&target.args)
        .all(|(p, t)| match_term(p, t, s));
    if !ok {
        *s = saved;
    }
    ok
}

/// Injective variable renaming between two clauses, with the body
/// permutation: `body1[i]` renamed equals `body2[permutation[i]]`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Renaming {
    pub map: BTreeMap<Sym, Sym>,
    pub permutation: Vec<usize>,
}

impl Renaming {
    pub fn as_substitution(&self, sorts: &BTreeMap<Sym, crate::term::Sort>) -> Substitution {
        Substitution(
            self.map
                .iter()
                .filter(|(a, b)| a != b)
                .filter_map(|(a, b)| {
                    sorts
                        .get(a)
                        .map(|s| (a.clone(), Term::Var(Var::new(b.clone(), s.clone()))))
                })
                .collect(),
        )
    }
}

#[derive(Clone, Default)]
struct Bij {
    fwd: BTreeMap<Sym, Sym>,
    inv: BTreeMap<Sym, Sym>,
}

impl Bij {
    fn pair(&mut self, a: &Sym, b: &Sym) -> bool {
        match (self.fwd.get(a), self.inv.get(b)) {
            (Some(x), _) => x == b,
            (None, Some(_)) => false,
            (None, None) => {
                self.fwd.insert(a.clone(), b.clone());
                self.inv.insert(b.clone(), a.clone());
                true
            }
        }
    }
}

fn rename_match_term(p: &Term, t: &Term, bij: &mut Bij) -> bool {
    match (p, t) {
        (Term::Var(a), Term::Var(b)) => a.sort == b.sort && bij.pair(&a.name, &b.name),
        (Term::Int(x), Term::Int(y)) => x == y,
        (Term::Bool(x), Term::Bool(y)) => x == y,
        (
            Term::Ctor {
                name: f, args: xs, ..
            },
            Term::Ctor {
                name: g, args: ys, ..
            },
        ) => {
            f == g
                && xs.len() == ys.len()
                && xs.iter().zip(ys).all(|(x, y)| rename_match_term(x, y, bij))
        }
        (Term::Arith(o1, xs), Term::Arith(o2, ys)) => {
            o1 == o2
                && xs.len() == ys.len()
                && xs.iter().zip(ys).all(|(x, y)| rename_match_term(x, y, bij))
        }
        _ => false,
    }
}

fn rename_match_atom(p: &Atom, t: &Atom, bij: &mut Bij) -> bool {
    p.pred == t.pred
        && p.args.len() == t.args.len()
        && p.args
            .iter()
            .zip(&t.args)
            .all(|(x, y)| rename_match_term(x, y, bij))
}

/// Atom lists equal up to an injective renaming extending `seed`, in any
/// order. Returns the renaming and permutation.
pub fn variant_atoms(g1: &[Atom], g2: &[Atom], seed: &BTreeMap<Sym, Sym>) -> Option<Renaming> {
    if g1.len() != g2.len() {
        return None;
    }
    let mut bij = Bij::default();
    for (a, b) in seed {
        if !bij.pair(a, b) {
            return None;
        }
    }
    let mut perm = vec![usize::MAX; g1.len()];
    let mut used = vec![false; g2.len()];
    let mut found = None;
    search_variant(g1, g2, 0, &mut used, &mut perm, bij, &mut |bij, perm| {
        found = Some(Renaming {
            map: bij.fwd.clone(),
            permutation: perm.to_vec(),
        });
        true
    });
    found
}

fn search_variant(
    g1: &[Atom],
    g2: &[Atom],
    i: usize,
    used: &mut [bool],
    perm: &mut [usize],
    bij: Bij,
    leaf: &mut dyn FnMut(&Bij, &[usize]) -> bool,
) -> bool {
    if i == g1.len() {
        return leaf(&bij, perm);
    }
    for j in 0..g2.len() {
        if used[j] || g1[i].pred != g2[j].pred {
            continue;
        }
        let mut b = bij.clone();
        if rename_match_atom(&g1[i], &g2[j], &mut b) {
            used[j] = true;
            perm[i] = j;
            if search_variant(g1, g2, i + 1, used, perm, b, leaf) {
                return true;
            }
            used[j] = false;
        }
    }
    false
}

/// `c2` is `c1` up to variable renaming and reordering of body atoms, with
/// syntactically equal (normalized) constraints.
pub fn variant_of(c1: &Clause, c2: &Clause) -> Option<Renaming> {
    if c1.body.len() != c2.body.len() {
        return None;
    }
    let mut bij = Bij::default();
    match (&c1.head, &c2.head) {
        (None, None) => {}
        (Some(h1), Some(h2)) => {
            if !rename_match_atom(h1, h2, &mut bij) {
                return None;
            }
        }
        _ => return None,
    }
    let mut perm = vec![usize::MAX; c1.body.len()];
    let mut used = vec![false; c2.body.len()];
    let mut found = None;
    search_variant(
        &c1.body,
        &c2.body,
        0,
        &mut used,
        &mut perm,
        bij,
        &mut |bij, perm| {
            if let Some(map) = constraint_variant(&c1.constraint, &c2.constraint, bij) {
                found = Some(Renaming {
                    map,
                    permutation: perm.to_vec(),
                });
                true
            } else {
                false
            }
        },
    );
    found
}

/// Clause lists that are pairwise variants, in order.
pub fn variant_clauses(a: &[Clause], b: &[Clause]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| variant_of(x, y).is_some())
}

fn constraint_variant(
    k1: &crate::constraints::Constraint,
    k2: &crate::constraints::Constraint,
    bij: &Bij,
) -> Option<BTreeMap<Sym, Sym>> {
    let free1: Vec<Sym> = k1
        .vars()
        .into_iter()
        .filter(|v| !bij.fwd.contains_key(v))
        .collect();
    let free2: Vec<Sym> = k2
        .vars()
        .into_iter()
        .filter(|v| !bij.inv.contains_key(v))
        .collect();
    if free1.len() != free2.len() || free1.len() > 6 {
        return None;
    }
    let mut idx: Vec<usize> = (0..free2.len()).collect();
    loop {
        let mut map = bij.fwd.clone();
        for (i, v) in free1.iter().enumerate() {
            map.insert(v.clone(), free2[idx[i]].clone());
        }
        if k1.rename(&map).same_conjuncts(k2) {
            return Some(map);
        }
        if !next_permutation(&mut idx) {
            return None;
        }
    }
}

fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}
