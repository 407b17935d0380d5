use std::collections::BTreeSet;
use std::fmt;

use crate::constraints::Constraint;
use crate::term::{conj_vars, Atom, Sym, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ClauseId(pub u32);

impl fmt::Display for ClauseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "c{}", self.0)
    }
}

/// `head ← constraint, body`; a missing head stands for `false`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Clause {
    pub id: ClauseId,
    pub head: Option<Atom>,
    pub constraint: Constraint,
    pub body: Vec<Atom>,
    /// Per-body-atom "unfoldable" flag, same length as `body`.
    pub marks: Vec<bool>,
}

impl Clause {
    pub fn new(head: Option<Atom>, constraint: Constraint, body: Vec<Atom>) -> Self {
        let marks = vec![false; body.len()];
        Clause {
            id: ClauseId::default(),
            head,
            constraint,
            body,
            marks,
        }
    }

    pub fn with_id(mut self, id: ClauseId) -> Self {
        self.id = id;
        self
    }

    pub fn is_goal(&self) -> bool {
        self.head.is_none()
    }

    /// Variables of head and body atoms in first-occurrence order.
    pub fn atom_vars(&self) -> Vec<Var> {
        let mut out = Vec::new();
        if let Some(h) = &self.head {
            h.collect_vars(&mut out);
        }
        for a in &self.body {
            a.collect_vars(&mut out);
        }
        out
    }

    pub fn var_names(&self) -> BTreeSet<Sym> {
        let mut s: BTreeSet<Sym> = self.atom_vars().into_iter().map(|v| v.name).collect();
        s.extend(self.constraint.vars());
        s
    }

    pub fn body_vars(&self) -> Vec<Var> {
        conj_vars(&self.body)
    }

    /// All atoms (head and body) have only basic-typed arguments.
    pub fn has_basic_types(&self) -> bool {
        self.head.iter().chain(&self.body).all(|a| !a.has_adts())
    }

    pub fn preds(&self) -> impl Iterator<Item = &Sym> {
        self.head.iter().chain(&self.body).map(|a| &a.pred)
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::display::clause(self))
    }
}
