use std::collections::BTreeMap;

use crate::clause::Clause;
use crate::program::Program;
use crate::subst::Substitution;
use crate::term::{Sort, Sym, Term, Var};

/// Sequential fresh variable names of the form `Stem_n`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Fresh {
    next: u64,
}

fn split_suffix(name: &str) -> (&str, Option<u64>) {
    match name.rfind('_') {
        Some(i) if i > 0 && i + 1 < name.len() => match name[i + 1..].parse() {
            Ok(n) => (&name[..i], Some(n)),
            Err(_) => (name, None),
        },
        _ => (name, None),
    }
}

impl Fresh {
    /// Starts above every `_n` suffix already used in `p`, so fresh names
    /// never collide with source names.
    pub fn for_program(p: &Program) -> Fresh {
        let mut max = 0;
        for c in &p.clauses {
            for v in c.var_names() {
                if let (_, Some(n)) = split_suffix(v.as_str()) {
                    max = max.max(n);
                }
            }
        }
        Fresh { next: max }
    }

    pub fn counter(&self) -> u64 {
        self.next
    }

    pub fn set_counter(&mut self, n: u64) {
        self.next = n;
    }

    pub fn var(&mut self, v: &Var) -> Var {
        self.next += 1;
        let (stem, _) = split_suffix(v.name.as_str());
        Var::new(format!("{stem}_{}", self.next), v.sort.clone())
    }

    /// Every variable of `c` replaced by a fresh one.
    pub fn rename_clause(&mut self, c: &Clause) -> Clause {
        let mut vars = c.atom_vars();
        for v in c.constraint.int_vars() {
            if !vars.iter().any(|w| w.name == v) {
                vars.push(Var::new(v, Sort::Int));
            }
        }
        for v in c.constraint.bool_vars() {
            if !vars.iter().any(|w| w.name == v) {
                vars.push(Var::new(v, Sort::Bool));
            }
        }
        let mut map = BTreeMap::new();
        let mut names = BTreeMap::new();
        for v in &vars {
            let f = self.var(v);
            names.insert(v.name.clone(), f.name.clone());
            map.insert(v.name.clone(), Term::Var(f));
        }
        let s = Substitution::from_map(map);
        Clause {
            id: c.id,
            head: c.head.as_ref().map(|h| s.atom(h)),
            constraint: c.constraint.rename(&names),
            body: s.atoms(&c.body),
            marks: c.marks.clone(),
        }
    }
}

/// Var-to-var renaming applied to a whole clause.
pub fn rename_clause(c: &Clause, names: &BTreeMap<Sym, Var>) -> Clause {
    let s = Substitution::from_map(
        names
            .iter()
            .map(|(k, v)| (k.clone(), Term::Var(v.clone())))
            .collect(),
    );
    let plain: BTreeMap<Sym, Sym> = names
        .iter()
        .map(|(k, v)| (k.clone(), v.name.clone()))
        .collect();
    Clause {
        id: c.id,
        head: c.head.as_ref().map(|h| s.atom(h)),
        constraint: c.constraint.rename(&plain),
        body: s.atoms(&c.body),
        marks: c.marks.clone(),
    }
}
