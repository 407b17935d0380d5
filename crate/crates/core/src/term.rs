//! Typed first-order terms and atoms.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

/// Interned-by-value identifier used for variables, predicates, constructors
/// and datatypes.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Sym(Arc<str>);

impl Sym {
    pub fn new(s: &str) -> Self {
        Sym(Arc::from(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for Sym {
    fn from(s: &str) -> Self {
        Sym::new(s)
    }
}

impl From<String> for Sym {
    fn from(s: String) -> Self {
        Sym(Arc::from(s))
    }
}

impl fmt::Display for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

/// A type: one of the two basic types, or a declared algebraic data type.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sort {
    Int,
    Bool,
    Adt(Sym),
}

impl Sort {
    pub fn is_basic(&self) -> bool {
        !matches!(self, Sort::Adt(_))
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sort::Int => f.write_str("int"),
            Sort::Bool => f.write_str("bool"),
            Sort::Adt(name) => write!(f, "{name}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var {
    pub name: Sym,
    pub sort: Sort,
}

impl Var {
    pub fn new(name: impl Into<Sym>, sort: Sort) -> Self {
        Var {
            name: name.into(),
            sort,
        }
    }

    pub fn int(name: &str) -> Self {
        Var::new(name, Sort::Int)
    }

    pub fn boolean(name: &str) -> Self {
        Var::new(name, Sort::Bool)
    }

    pub fn adt(name: &str, adt: &str) -> Self {
        Var::new(name, Sort::Adt(Sym::new(adt)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ArithOp {
    Add,
    Sub,
    Neg,
    /// Multiplication; linear use requires one constant operand.
    Mul,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(Var),
    Int(i64),
    Bool(bool),
    /// Constructor application; `sort` names the datatype it builds.
    Ctor {
        name: Sym,
        sort: Sym,
        args: Vec<Term>,
    },
    Arith(ArithOp, Vec<Term>),
}

impl Term {
    pub fn var(v: Var) -> Self {
        Term::Var(v)
    }

    pub fn ctor(name: &str, sort: &str, args: Vec<Term>) -> Self {
        Term::Ctor {
            name: Sym::new(name),
            sort: Sym::new(sort),
            args,
        }
    }

    pub fn sort(&self) -> Sort {
        match self {
            Term::Var(v) => v.sort.clone(),
            Term::Int(_) | Term::Arith(..) => Sort::Int,
            Term::Bool(_) => Sort::Bool,
            Term::Ctor { sort, .. } => Sort::Adt(sort.clone()),
        }
    }

    pub fn as_var(&self) -> Option<&Var> {
        match self {
            Term::Var(v) => Some(v),
            _ => None,
        }
    }

    /// Pushes the variables of the term in first-occurrence order, skipping
    /// ones already present in `out`.
    pub fn collect_vars(&self, out: &mut Vec<Var>) {
        match self {
            Term::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            Term::Int(_) | Term::Bool(_) => {}
            Term::Ctor { args, .. } | Term::Arith(_, args) => {
                for a in args {
                    a.collect_vars(out);
                }
            }
        }
    }

    pub fn vars(&self) -> Vec<Var> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn var_names(&self) -> BTreeSet<Sym> {
        self.vars().into_iter().map(|v| v.name).collect()
    }

    pub fn occurs(&self, name: &Sym) -> bool {
        match self {
            Term::Var(v) => &v.name == name,
            Term::Int(_) | Term::Bool(_) => false,
            Term::Ctor { args, .. } | Term::Arith(_, args) => args.iter().any(|a| a.occurs(name)),
        }
    }

    /// Non-strict subterm relation: `self` occurs somewhere inside `other`.
    pub fn is_subterm_of(&self, other: &Term) -> bool {
        if self == other {
            return true;
        }
        self.is_strict_subterm_of(other)
    }

    pub fn is_strict_subterm_of(&self, other: &Term) -> bool {
        match other {
            Term::Ctor { args, .. } | Term::Arith(_, args) => {
                args.iter().any(|a| self.is_subterm_of(a))
            }
            _ => false,
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Term::Ctor { args, .. } | Term::Arith(_, args) => {
                1 + args.iter().map(Term::depth).max().unwrap_or(0)
            }
            _ => 0,
        }
    }
}

/// `p(t1, ..., tm)` for a predicate symbol outside the constraint theory.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub pred: Sym,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(pred: &str, args: Vec<Term>) -> Self {
        Atom {
            pred: Sym::new(pred),
            args,
        }
    }

    pub fn vars(&self) -> Vec<Var> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn collect_vars(&self, out: &mut Vec<Var>) {
        for a in &self.args {
            a.collect_vars(out);
        }
    }

    pub fn var_names(&self) -> BTreeSet<Sym> {
        self.vars().into_iter().map(|v| v.name).collect()
    }

    pub fn adt_vars(&self) -> Vec<Var> {
        self.vars()
            .into_iter()
            .filter(|v| !v.sort.is_basic())
            .collect()
    }

    pub fn basic_vars(&self) -> Vec<Var> {
        self.vars()
            .into_iter()
            .filter(|v| v.sort.is_basic())
            .collect()
    }

    /// True when at least one argument has an ADT type.
    pub fn has_adts(&self) -> bool {
        self.args.iter().any(|t| !t.sort().is_basic())
    }

    pub fn occurs(&self, name: &Sym) -> bool {
        self.args.iter().any(|t| t.occurs(name))
    }
}

/// Variables of a conjunction in first-occurrence order.
pub fn conj_vars(atoms: &[Atom]) -> Vec<Var> {
    let mut out = Vec::new();
    for a in atoms {
        a.collect_vars(&mut out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cons(h: Term, t: Term) -> Term {
        Term::ctor("cons", "list", vec![h, t])
    }

    #[test]
    fn subterms() {
        let x = Term::Var(Var::int("X"));
        let xs = Term::Var(Var::adt("Xs", "list"));
        let l = cons(x.clone(), xs.clone());
        assert!(xs.is_strict_subterm_of(&l));
        assert!(x.is_strict_subterm_of(&l));
        assert!(!l.is_strict_subterm_of(&l));
        assert!(l.is_subterm_of(&l));
        assert_eq!(l.depth(), 1);
    }

    #[test]
    fn atom_var_kinds() {
        let a = Atom::new(
            "len",
            vec![Term::Var(Var::adt("Xs", "list")), Term::Var(Var::int("N"))],
        );
        assert!(a.has_adts());
        assert_eq!(a.adt_vars(), vec![Var::adt("Xs", "list")]);
        assert_eq!(a.basic_vars(), vec![Var::int("N")]);
    }
}
