//! Existential elimination over booleans and rationals.

use std::collections::{BTreeMap, BTreeSet};

use num_integer::Integer;

use super::sat::{ParityUf, Row, SatError};
use super::{entails, Atomic, Constraint, LinExpr, Norm, Rel};
use crate::term::Sym;

/// Disequalities mentioning eliminated variables are split into `<`/`>`
/// branches up to this many; beyond it they are dropped (still sound).
const MAX_NE_SPLITS: usize = 3;
const MAX_ROWS: usize = 2_000;

/// `π(c, keep)`: a constraint over `keep` entailed by `c`.
pub fn project(c: &Constraint, keep: &BTreeSet<Sym>) -> Constraint {
    if c.is_false_marker() {
        return Constraint::bottom();
    }
    let mut out = Constraint::top();
    if !project_bools(c, keep, &mut out) {
        return Constraint::bottom();
    }
    let int_atoms: Vec<&Atomic> = c.atoms().iter().filter(|a| !a.is_boolean()).collect();
    let elim: BTreeSet<Sym> = c
        .int_vars()
        .into_iter()
        .filter(|v| !keep.contains(v))
        .collect();
    if elim.is_empty() {
        for a in int_atoms {
            out.push(a.clone());
        }
        return out;
    }
    let projected = match project_ints(&int_atoms, &elim) {
        Ok(Some(p)) => p,
        Ok(None) => return Constraint::bottom(),
        // fall back to the conjuncts that already avoid eliminated variables
        Err(SatError::ResourceLimit) => Constraint::from_atomics(
            int_atoms
                .iter()
                .filter(|a| a.vars().iter().all(|v| !elim.contains(v)))
                .map(|a| (*a).clone()),
        ),
    };
    let projected = tidy(projected);
    out.and(&projected)
}

fn project_bools(c: &Constraint, keep: &BTreeSet<Sym>, out: &mut Constraint) -> bool {
    let bool_atoms: Vec<&Atomic> = c.atoms().iter().filter(|a| a.is_boolean()).collect();
    let bvars = c.bool_vars();
    if bvars.iter().all(|v| keep.contains(v)) {
        for a in bool_atoms {
            out.push(a.clone());
        }
        return true;
    }
    let mut uf = ParityUf::default();
    if !bool_atoms.iter().all(|a| uf.add(a)) {
        return false;
    }
    let mut reps: BTreeMap<usize, (Sym, bool)> = BTreeMap::new();
    for v in bvars.iter().filter(|v| keep.contains(*v)) {
        match uf.class_of(v) {
            (None, value) => out.push(Atomic::BoolLit(v.clone(), value)),
            (Some(root), par) => match reps.get(&root) {
                None => {
                    reps.insert(root, (v.clone(), par));
                }
                Some((rep, rp)) => out.push(Atomic::BoolEq(rep.clone(), v.clone(), *rp == par)),
            },
        }
    }
    true
}

#[derive(Clone)]
struct Sys {
    eqs: Vec<Row>,
    les: Vec<Row>,
    nes: Vec<Row>,
}

/// Divides by the content (including the constant), which is exact over
/// the rationals. Returns `None` for constant rows, `Some(Err)` for false.
#[derive(Clone, Copy)]
enum RowKind {
    Eq,
    Le,
    Ne,
}

fn content_normalize(mut r: Row, kind: RowKind) -> Result<Option<Row>, ()> {
    let g = r.gcd();
    if g == 0 {
        let ok = match kind {
            RowKind::Eq => r.k == 0,
            RowKind::Le => r.k <= 0,
            RowKind::Ne => r.k != 0,
        };
        return if ok { Ok(None) } else { Err(()) };
    }
    let g = g.gcd(&r.k);
    if g > 1 {
        for c in r.a.iter_mut() {
            *c /= g;
        }
        r.k /= g;
    }
    Ok(Some(r))
}

fn project_ints(atoms: &[&Atomic], elim: &BTreeSet<Sym>) -> Result<Option<Constraint>, SatError> {
    let mut names: Vec<Sym> = Vec::new();
    let mut index: BTreeMap<Sym, usize> = BTreeMap::new();
    for a in atoms {
        for v in a.vars() {
            if !index.contains_key(&v) {
                index.insert(v.clone(), names.len());
                names.push(v);
            }
        }
    }
    let n = names.len();
    let to_row = |e: &LinExpr| {
        let mut a = vec![0i128; n];
        for (v, c) in &e.coeffs {
            a[index[v]] = *c as i128;
        }
        Row {
            a,
            k: e.constant as i128,
        }
    };
    let elim_idx: Vec<usize> = elim.iter().filter_map(|v| index.get(v).copied()).collect();
    let mut base = Sys {
        eqs: Vec::new(),
        les: Vec::new(),
        nes: Vec::new(),
    };
    for a in atoms {
        if let Atomic::Lin(e, rel) = a {
            match rel {
                Rel::Eq => base.eqs.push(to_row(e)),
                Rel::Le => base.les.push(to_row(e)),
                Rel::Ne => base.nes.push(to_row(e)),
            }
        }
    }
    // equalities are used first so that disequalities get rewritten over
    // the remaining variables before any splitting happens
    let Some((base, elim_idx)) = eliminate_equalities(base, &elim_idx)? else {
        return Ok(None);
    };
    let (mut split_nes, kept): (Vec<Row>, Vec<Row>) = base
        .nes
        .iter()
        .cloned()
        .partition(|r| elim_idx.iter().any(|&x| r.a[x] != 0));
    let mut kept_nes = Vec::new();
    for r in &kept {
        match row_atomic(r, &names, Rel::Ne)? {
            Norm::Atom(a) => kept_nes.push(a),
            Norm::True => {}
            Norm::False => return Ok(None),
        }
    }
    if split_nes.len() > MAX_NE_SPLITS {
        split_nes.clear();
    }
    let mut results: Vec<Constraint> = Vec::new();
    for mask in 0..(1usize << split_nes.len()) {
        let mut sys = Sys {
            eqs: base.eqs.clone(),
            les: base.les.clone(),
            nes: Vec::new(),
        };
        for (i, r) in split_nes.iter().enumerate() {
            if mask & (1 << i) == 0 {
                // e ≤ -1
                let mut b = r.clone();
                b.k += 1;
                sys.les.push(b);
            } else {
                // e ≥ 1
                let mut b = r.scaled(-1)?;
                b.k += 1;
                sys.les.push(b);
            }
        }
        if let Some(done) = eliminate(sys, &elim_idx)? {
            let mut c = Constraint::top();
            for (rows, rel) in [(&done.eqs, Rel::Eq), (&done.les, Rel::Le)] {
                for r in rows {
                    c.push_norm(row_atomic(r, &names, rel)?);
                }
            }
            if !c.is_false_marker() {
                results.push(c);
            }
        }
    }
    if results.is_empty() {
        return Ok(None);
    }
    let mut combined = if results.len() == 1 {
        results.pop().unwrap()
    } else {
        let mut candidates: Vec<Atomic> = Vec::new();
        for r in &results {
            for a in r.atoms() {
                if !candidates.contains(a) {
                    candidates.push(a.clone());
                }
            }
        }
        Constraint::from_atomics(candidates.into_iter().filter(|a| {
            let single = Constraint::from_atomics([a.clone()]);
            results.iter().all(|r| entails(r, &single))
        }))
    };
    for a in kept_nes {
        combined.push(a);
    }
    Ok(Some(combined))
}

fn row_atomic(r: &Row, names: &[Sym], rel: Rel) -> Result<Norm, SatError> {
    let mut e = LinExpr::default();
    for (i, c) in r.a.iter().enumerate() {
        if *c != 0 {
            e.coeffs.insert(
                names[i].clone(),
                i64::try_from(*c).map_err(|_| SatError::ResourceLimit)?,
            );
        }
    }
    e.constant = i64::try_from(r.k).map_err(|_| SatError::ResourceLimit)?;
    Ok(Atomic::lin(e, rel))
}

fn substitute_rows(
    rows: &[Row],
    x: usize,
    e: &Row,
    kind: RowKind,
) -> Result<Option<Vec<Row>>, SatError> {
    let a = e.a[x];
    let mut out = Vec::new();
    for r in rows {
        let r2 = if r.a[x] == 0 {
            r.clone()
        } else {
            r.scaled(a.abs())?.axpy(-a.signum() * r.a[x], e)?
        };
        match content_normalize(r2, kind) {
            Ok(Some(r)) => out.push(r),
            Ok(None) => {}
            Err(()) => return Ok(None),
        }
    }
    Ok(Some(out))
}

/// Eliminates every variable of `elim` that some equality defines. Returns
/// the rewritten system and the variables still to eliminate.
fn eliminate_equalities(
    mut sys: Sys,
    elim: &[usize],
) -> Result<Option<(Sys, Vec<usize>)>, SatError> {
    let mut todo: Vec<usize> = elim.to_vec();
    loop {
        let by_eq = todo.iter().enumerate().find_map(|(ti, &x)| {
            sys.eqs
                .iter()
                .enumerate()
                .filter(|(_, r)| r.a[x] != 0)
                .min_by_key(|(_, r)| r.a[x].abs())
                .map(|(ei, _)| (ti, x, ei))
        });
        let Some((ti, x, ei)) = by_eq else {
            return Ok(Some((sys, todo)));
        };
        todo.remove(ti);
        let e = sys.eqs.remove(ei);
        let (Some(eqs), Some(les), Some(nes)) = (
            substitute_rows(&sys.eqs, x, &e, RowKind::Eq)?,
            substitute_rows(&sys.les, x, &e, RowKind::Le)?,
            substitute_rows(&sys.nes, x, &e, RowKind::Ne)?,
        ) else {
            return Ok(None);
        };
        sys = Sys { eqs, les, nes };
    }
}

/// Rational elimination of `elim`. `None` when the system is infeasible.
/// Disequalities are ignored here; callers split them beforehand.
fn eliminate(sys: Sys, elim: &[usize]) -> Result<Option<Sys>, SatError> {
    let Some((mut sys, mut todo)) = eliminate_equalities(sys, elim)? else {
        return Ok(None);
    };
    while !todo.is_empty() {
        let (ti, x) = todo
            .iter()
            .enumerate()
            .min_by_key(|(_, &x)| {
                let p = sys.les.iter().filter(|r| r.a[x] > 0).count();
                let q = sys.les.iter().filter(|r| r.a[x] < 0).count();
                p * q
            })
            .map(|(ti, &x)| (ti, x))
            .unwrap();
        todo.remove(ti);
        let (with, mut next): (Vec<Row>, Vec<Row>) = sys.les.into_iter().partition(|r| r.a[x] != 0);
        for p in with.iter().filter(|r| r.a[x] > 0) {
            for q in with.iter().filter(|r| r.a[x] < 0) {
                let combined = p.scaled(-q.a[x])?.axpy(p.a[x], q)?;
                match content_normalize(combined, RowKind::Le) {
                    Ok(Some(r)) => next.push(r),
                    Ok(None) => {}
                    Err(()) => return Ok(None),
                }
            }
        }
        next.sort();
        next.dedup();
        if next.len() > MAX_ROWS {
            return Err(SatError::ResourceLimit);
        }
        sys = Sys {
            eqs: sys.eqs,
            les: next,
            nes: sys.nes,
        };
    }
    Ok(Some(sys))
}

/// Merges opposite bounds into equalities and drops implied inequalities.
fn tidy(c: Constraint) -> Constraint {
    if c.is_false_marker() {
        return c;
    }
    let mut atoms: Vec<Atomic> = c.atoms().to_vec();
    let mut merged: Vec<Atomic> = Vec::new();
    let mut used = vec![false; atoms.len()];
    for i in 0..atoms.len() {
        if used[i] {
            continue;
        }
        if let Atomic::Lin(e, Rel::Le) = &atoms[i] {
            let neg = e.scale(-1).ok();
            let partner = (i + 1..atoms.len()).find(|&j| {
                !used[j] && matches!(&atoms[j], Atomic::Lin(f, Rel::Le) if Some(f) == neg.as_ref())
            });
            if let Some(j) = partner {
                used[j] = true;
                if let Norm::Atom(a) = Atomic::lin(e.clone(), Rel::Eq) {
                    merged.push(a);
                }
                continue;
            }
        }
        merged.push(atoms[i].clone());
    }
    atoms = merged;
    if atoms.len() <= 24 {
        let mut i = 0;
        while i < atoms.len() {
            if matches!(atoms[i], Atomic::Lin(_, Rel::Le)) {
                let rest = Constraint::from_atomics(
                    atoms
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| *j != i)
                        .map(|(_, a)| a.clone()),
                );
                if entails(&rest, &Constraint::from_atomics([atoms[i].clone()])) {
                    atoms.remove(i);
                    continue;
                }
            }
            i += 1;
        }
    }
    Constraint::from_atomics(atoms)
}
