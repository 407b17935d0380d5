use std::collections::{BTreeMap, BTreeSet};

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use thiserror::Error;

use crate::clause::{Clause, ClauseId};
use crate::term::{Atom, Sort, Sym, Term};

/// The built-in integer list type used by the list sugar.
pub const LIST_SORT: &str = "list";
pub const NIL: &str = "nil";
pub const CONS: &str = "cons";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constructor {
    pub name: Sym,
    pub fields: Vec<Sort>,
    /// Selector names, used only when printing SMT-LIB.
    pub selectors: Vec<Sym>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DataType {
    pub name: Sym,
    pub ctors: Vec<Constructor>,
}

impl DataType {
    pub fn int_list() -> DataType {
        DataType {
            name: Sym::new(LIST_SORT),
            ctors: vec![
                Constructor {
                    name: Sym::new(NIL),
                    fields: vec![],
                    selectors: vec![],
                },
                Constructor {
                    name: Sym::new(CONS),
                    fields: vec![Sort::Int, Sort::Adt(Sym::new(LIST_SORT))],
                    selectors: vec![Sym::new("head"), Sym::new("tail")],
                },
            ],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PredSig {
    pub name: Sym,
    pub args: Vec<Sort>,
}

/// Input/output split of a predicate's argument positions (0-based).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModeSignature {
    pub pred: Sym,
    pub inputs: Vec<usize>,
    pub outputs: Vec<usize>,
}

impl ModeSignature {
    /// Every position but the last is an input.
    pub fn last_output(pred: Sym, arity: usize) -> Self {
        ModeSignature {
            pred,
            inputs: (0..arity.saturating_sub(1)).collect(),
            outputs: if arity == 0 { vec![] } else { vec![arity - 1] },
        }
    }

    pub fn arity(&self) -> usize {
        self.inputs.len() + self.outputs.len()
    }
}

pub type Modes = BTreeMap<Sym, ModeSignature>;

/// Level of a `false` head: above every predicate.
pub const FALSE_LEVEL: u32 = u32::MAX;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LevelMap(BTreeMap<Sym, u32>);

impl LevelMap {
    pub fn get(&self, p: &Sym) -> Option<u32> {
        self.0.get(p).copied()
    }

    /// Missing predicates sit at level 0.
    pub fn level(&self, p: &Sym) -> u32 {
        self.get(p).unwrap_or(0)
    }

    pub fn head_level(&self, head: Option<&Atom>) -> u32 {
        head.map_or(FALSE_LEVEL, |a| self.level(&a.pred))
    }

    pub fn set(&mut self, p: Sym, l: u32) {
        self.0.insert(p, l);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Sym, &u32)> {
        self.0.iter()
    }

    /// Rank of the strongly connected components of the dependency graph:
    /// a predicate sits one above the highest component it depends on.
    pub fn from_clauses<'a>(
        preds: impl IntoIterator<Item = &'a Sym>,
        clauses: &[Clause],
    ) -> LevelMap {
        let mut g: DiGraph<Sym, ()> = DiGraph::new();
        let mut nodes = BTreeMap::new();
        let mut node = |g: &mut DiGraph<Sym, ()>, p: &Sym| {
            *nodes
                .entry(p.clone())
                .or_insert_with(|| g.add_node(p.clone()))
        };
        for p in preds {
            node(&mut g, p);
        }
        for c in clauses {
            for a in &c.body {
                node(&mut g, &a.pred);
            }
            if let Some(h) = &c.head {
                let hn = node(&mut g, &h.pred);
                for a in &c.body {
                    let bn = node(&mut g, &a.pred);
                    g.update_edge(hn, bn, ());
                }
            }
        }
        let sccs = tarjan_scc(&g);
        let mut comp = vec![0usize; g.node_count()];
        for (i, scc) in sccs.iter().enumerate() {
            for n in scc {
                comp[n.index()] = i;
            }
        }
        // tarjan_scc yields components dependencies-first
        let mut rank = vec![0u32; sccs.len()];
        for (i, scc) in sccs.iter().enumerate() {
            let mut r = 0;
            for n in scc {
                for m in g.neighbors(*n) {
                    let j = comp[m.index()];
                    if j != i {
                        r = r.max(rank[j] + 1);
                    }
                }
            }
            rank[i] = r;
        }
        let mut map = LevelMap::default();
        for n in g.node_indices() {
            map.set(g[n].clone(), rank[comp[n.index()]]);
        }
        map
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProgramError {
    #[error("datatype `{0}` declared more than once")]
    DuplicateDatatype(Sym),
    #[error("unknown datatype `{0}`")]
    UnknownDatatype(Sym),
    #[error("unknown predicate `{0}`")]
    UnknownPredicate(Sym),
    #[error("unknown constructor `{0}`")]
    UnknownConstructor(Sym),
    #[error("predicate `{pred}` used with {found} arguments, declared with {expected}")]
    ArityMismatch {
        pred: Sym,
        expected: usize,
        found: usize,
    },
    #[error("ill-typed argument {pos} of `{pred}` in clause {clause}")]
    IllTyped {
        pred: Sym,
        pos: usize,
        clause: ClauseId,
    },
    #[error("clause id {0} is not unique")]
    DuplicateClauseId(ClauseId),
    #[error("clause {0} violates stratification")]
    NotStratified(ClauseId),
    #[error("mode of `{0}` does not cover its arguments")]
    BadMode(Sym),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Program {
    pub datatypes: Vec<DataType>,
    pub preds: BTreeMap<Sym, PredSig>,
    pub modes: Modes,
    pub clauses: Vec<Clause>,
    pub levels: LevelMap,
}

impl Program {
    pub fn datatype(&self, name: &Sym) -> Option<&DataType> {
        self.datatypes.iter().find(|d| &d.name == name)
    }

    pub fn ctor(&self, name: &Sym) -> Option<(&DataType, &Constructor)> {
        self.datatypes
            .iter()
            .find_map(|d| d.ctors.iter().find(|c| &c.name == name).map(|c| (d, c)))
    }

    pub fn compute_levels(&mut self) {
        self.levels = LevelMap::from_clauses(self.preds.keys(), &self.clauses);
    }

    pub fn is_stratified(&self) -> bool {
        self.clauses.iter().all(|c| {
            let h = self.levels.head_level(c.head.as_ref());
            c.body.iter().all(|a| self.levels.level(&a.pred) <= h)
        })
    }

    pub fn has_adts(&self) -> bool {
        self.clauses.iter().any(|c| !c.has_basic_types())
    }

    pub fn clause(&self, id: ClauseId) -> Option<&Clause> {
        self.clauses.iter().find(|c| c.id == id)
    }

    /// Predicates occurring in the clauses (heads first, then bodies).
    pub fn used_preds(&self) -> BTreeSet<Sym> {
        self.clauses
            .iter()
            .flat_map(|c| c.preds().cloned())
            .collect()
    }

    /// Gives clauses consecutive ids starting at 1.
    pub fn renumber(&mut self) {
        for (i, c) in self.clauses.iter_mut().enumerate() {
            c.id = ClauseId(i as u32 + 1);
        }
    }

    fn check_term(&self, t: &Term, expected: &Sort) -> bool {
        match t {
            Term::Var(v) => &v.sort == expected,
            Term::Int(_) => *expected == Sort::Int,
            Term::Bool(_) => *expected == Sort::Bool,
            Term::Arith(_, args) => {
                *expected == Sort::Int && args.iter().all(|a| self.check_term(a, &Sort::Int))
            }
            Term::Ctor { name, sort, args } => {
                if *expected != Sort::Adt(sort.clone()) {
                    return false;
                }
                let Some((dt, ctor)) = self.ctor(name) else {
                    return false;
                };
                &dt.name == sort
                    && ctor.fields.len() == args.len()
                    && args
                        .iter()
                        .zip(&ctor.fields)
                        .all(|(a, s)| self.check_term(a, s))
            }
        }
    }

    /// Well-formedness: declarations, arities, typing, unique ids.
    pub fn check(&self) -> Result<(), ProgramError> {
        let mut seen = BTreeSet::new();
        for d in &self.datatypes {
            if !seen.insert(d.name.clone()) {
                return Err(ProgramError::DuplicateDatatype(d.name.clone()));
            }
        }
        let sort_ok = |s: &Sort| match s {
            Sort::Adt(n) => seen.contains(n),
            _ => true,
        };
        for d in &self.datatypes {
            for c in &d.ctors {
                if let Some(Sort::Adt(n)) = c.fields.iter().find(|s| !sort_ok(s)) {
                    return Err(ProgramError::UnknownDatatype(n.clone()));
                }
            }
        }
        for p in self.preds.values() {
            if let Some(Sort::Adt(n)) = p.args.iter().find(|s| !sort_ok(s)) {
                return Err(ProgramError::UnknownDatatype(n.clone()));
            }
        }
        for m in self.modes.values() {
            if let Some(sig) = self.preds.get(&m.pred) {
                let mut all: Vec<usize> = m.inputs.iter().chain(&m.outputs).copied().collect();
                all.sort();
                if all != (0..sig.args.len()).collect::<Vec<_>>() {
                    return Err(ProgramError::BadMode(m.pred.clone()));
                }
            }
        }
        let mut ids = BTreeSet::new();
        for c in &self.clauses {
            if !ids.insert(c.id) {
                return Err(ProgramError::DuplicateClauseId(c.id));
            }
            for a in c.head.iter().chain(&c.body) {
                let sig = self
                    .preds
                    .get(&a.pred)
                    .ok_or_else(|| ProgramError::UnknownPredicate(a.pred.clone()))?;
                if sig.args.len() != a.args.len() {
                    return Err(ProgramError::ArityMismatch {
                        pred: a.pred.clone(),
                        expected: sig.args.len(),
                        found: a.args.len(),
                    });
                }
                for (pos, (t, s)) in a.args.iter().zip(&sig.args).enumerate() {
                    if !self.check_term(t, s) {
                        return Err(ProgramError::IllTyped {
                            pred: a.pred.clone(),
                            pos,
                            clause: c.id,
                        });
                    }
                }
            }
        }
        Ok(())
    }
}
