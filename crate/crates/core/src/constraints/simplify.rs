//! Equivalence-preserving removal of clause-local variables.

use std::collections::{BTreeMap, BTreeSet};

use super::{Atomic, Constraint, Rel};
use crate::term::Sym;

/// Eliminates every variable outside `keep` that some equality defines with
/// a unit coefficient, then drops conjuncts whose only role is to mention a
/// variable outside `keep` exactly once (such conjuncts always have an
/// integer witness). The result is equivalent to `∃(vars \ keep). c`.
pub fn eliminate_defined(c: &Constraint, keep: &BTreeSet<Sym>) -> Constraint {
    if c.is_false_marker() {
        return c.clone();
    }
    let mut atoms: Vec<Atomic> = c.atoms().to_vec();
    loop {
        let pick = atoms.iter().enumerate().find_map(|(i, a)| match a {
            Atomic::Lin(e, Rel::Eq) => e
                .coeffs
                .iter()
                .find(|(v, k)| k.abs() == 1 && !keep.contains(*v))
                .map(|(v, k)| (i, v.clone(), *k)),
            _ => None,
        });
        let Some((i, y, a)) = pick else { break };
        let Atomic::Lin(def, _) = atoms.remove(i) else {
            unreachable!()
        };
        // a·y + rest = 0  ⇒  y = -a·rest
        let mut rest = def.clone();
        rest.coeffs.remove(&y);
        let Ok(value) = rest.scale(-a) else {
            atoms.insert(i, Atomic::Lin(def, Rel::Eq));
            break;
        };
        let mut next = Constraint::top();
        let mut failed = false;
        for at in &atoms {
            match at {
                Atomic::Lin(e, rel) if e.coeffs.contains_key(&y) => {
                    let k = e.coeff(&y);
                    let mut base = e.clone();
                    base.coeffs.remove(&y);
                    match value.scale(k).and_then(|v| base.add(&v)) {
                        Ok(sum) => next.push_norm(Atomic::lin(sum, *rel)),
                        Err(_) => {
                            failed = true;
                            break;
                        }
                    }
                }
                other => next.push(other.clone()),
            }
        }
        if failed {
            atoms.insert(i, Atomic::Lin(def, Rel::Eq));
            break;
        }
        if next.is_false_marker() {
            return next;
        }
        atoms = next.atoms().to_vec();
    }
    // drop single-occurrence local variables in inequalities/disequalities
    loop {
        let mut count: BTreeMap<Sym, usize> = BTreeMap::new();
        for a in &atoms {
            for v in a.vars() {
                *count.entry(v).or_insert(0) += 1;
            }
        }
        let droppable = atoms.iter().position(|a| {
            let removable_kind = match a {
                Atomic::Lin(_, Rel::Eq) => false,
                Atomic::Lin(..) | Atomic::BoolLit(..) | Atomic::BoolEq(..) => true,
            };
            removable_kind
                && a.vars()
                    .iter()
                    .any(|v| !keep.contains(v) && count.get(v) == Some(&1))
        });
        match droppable {
            Some(i) => {
                atoms.remove(i);
            }
            None => break,
        }
    }
    Constraint::from_atomics(atoms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::{entails, RelOp};
    use crate::term::{ArithOp, Term, Var};

    fn x(n: &str) -> Term {
        Term::Var(Var::int(n))
    }

    fn plus(a: Term, k: i64) -> Term {
        Term::Arith(ArithOp::Add, vec![a, Term::Int(k)])
    }

    #[test]
    fn chain_of_successors() {
        // N1 = M + 1, M = 0  keeping N1  ⇒  N1 = 1
        let mut c = Constraint::top();
        c.relate(&x("N1"), RelOp::Eq, &plus(x("M"), 1)).unwrap();
        c.relate(&x("M"), RelOp::Eq, &Term::Int(0)).unwrap();
        let keep: BTreeSet<Sym> = [Sym::new("N1")].into_iter().collect();
        let s = eliminate_defined(&c, &keep);
        let mut expect = Constraint::top();
        expect.relate(&x("N1"), RelOp::Eq, &Term::Int(1)).unwrap();
        assert!(s.same_conjuncts(&expect), "{s}");
    }

    #[test]
    fn kept_variables_untouched() {
        let mut c = Constraint::top();
        c.relate(&x("A"), RelOp::Eq, &plus(x("B"), 1)).unwrap();
        let keep: BTreeSet<Sym> = [Sym::new("A"), Sym::new("B")].into_iter().collect();
        assert!(eliminate_defined(&c, &keep).same_conjuncts(&c));
    }

    #[test]
    fn lone_bound_dropped() {
        let mut c = Constraint::top();
        c.relate(&x("Y"), RelOp::Ge, &x("A")).unwrap();
        c.relate(&x("A"), RelOp::Ge, &Term::Int(0)).unwrap();
        let keep: BTreeSet<Sym> = [Sym::new("A")].into_iter().collect();
        let s = eliminate_defined(&c, &keep);
        assert!(entails(&c, &s));
        assert_eq!(s.atoms().len(), 1);
    }
}
