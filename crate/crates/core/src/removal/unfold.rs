use std::collections::{BTreeMap, BTreeSet};

use crate::clause::Clause;
use crate::constraints::{check_sat, Limits, RelOp};
use crate::program::Modes;
use crate::rules::Fresh;
use crate::structure::subterm_lt;
use crate::subst::mgu;
use crate::term::{Atom, Sym, Term};

fn inputs(a: &Atom, modes: &Modes) -> Option<Vec<Term>> {
    let m = modes.get(&a.pred)?;
    Some(
        m.inputs
            .iter()
            .filter_map(|&i| a.args.get(i).cloned())
            .collect(),
    )
}

/// Unifying `a` with any clause head whose constraint stays satisfiable
/// leaves the input variables of `a` unbound (at most renamed apart from
/// each other). Vacuously true when no head unifies.
pub fn is_head_instance(
    a: &Atom,
    c: &Clause,
    ds: &[&Clause],
    modes: &Modes,
    fresh: &mut Fresh,
) -> bool {
    let Some(ins) = inputs(a, modes) else {
        return false;
    };
    let in_vars: Vec<Sym> = ins.iter().flat_map(|t| t.vars()).map(|v| v.name).collect();
    let cvars = c.var_names();
    for k in ds {
        if k.head.as_ref().is_none_or(|h| h.pred != a.pred) {
            continue;
        }
        let kr = fresh.rename_clause(k);
        let Some(u) = mgu(a, kr.head.as_ref().expect("definite")) else {
            continue;
        };
        let mut cons = c.constraint.and(&kr.constraint);
        if u.equations
            .iter()
            .any(|(l, r)| cons.relate(l, RelOp::Eq, r).is_err())
        {
            continue;
        }
        let Ok(cons) = cons.substitute(u.subst.map()) else {
            continue;
        };
        if check_sat(&cons, &Limits::default()) == Ok(false) {
            continue;
        }
        let mut images = BTreeSet::new();
        for v in &in_vars {
            let ok = match u.subst.get(v) {
                None => images.insert(v.clone()),
                Some(Term::Var(w)) => !cvars.contains(&w.name) && images.insert(w.name.clone()),
                Some(_) => false,
            };
            if !ok {
                return false;
            }
        }
    }
    true
}

/// Every body atom whose predicate depends on `pred` has an input tuple
/// strictly below the head's, in each clause for `pred`.
pub fn is_descending(pred: &Sym, ds: &[&Clause], modes: &Modes) -> bool {
    let mut edges: BTreeMap<&Sym, BTreeSet<&Sym>> = BTreeMap::new();
    for k in ds {
        if let Some(h) = &k.head {
            edges
                .entry(&h.pred)
                .or_default()
                .extend(k.body.iter().map(|a| &a.pred));
        }
    }
    let reaches = |from: &Sym| -> bool {
        let mut seen = BTreeSet::new();
        let mut stack = vec![from];
        while let Some(q) = stack.pop() {
            if q == pred {
                return true;
            }
            if seen.insert(q) {
                stack.extend(edges.get(q).into_iter().flatten().copied());
            }
        }
        false
    };
    for k in ds {
        let Some(h) = k.head.as_ref().filter(|h| &h.pred == pred) else {
            continue;
        };
        let Some(top) = inputs(h, modes) else {
            return false;
        };
        for b in &k.body {
            if !reaches(&b.pred) {
                continue;
            }
            match inputs(b, modes) {
                Some(t) if subterm_lt(&t, &top) => {}
                _ => return false,
            }
        }
    }
    true
}
