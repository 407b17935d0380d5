//! The rules R1–R7 as checked operations on a transformation sequence
//! `P0 ⇒ P1 ⇒ … ⇒ Pn`. Every application is recorded with the data needed
//! to replay it.

mod fresh;
mod trace;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

pub use fresh::{rename_clause, Fresh};
pub use trace::{audit_condition_u, Audit, ReplayError, RuleTag, Step, Trace, Witness};

use crate::clause::{Clause, ClauseId};
use crate::constraints::{check_sat, eliminate_defined, entails, ConstraintError, Limits, RelOp};
use crate::program::{LevelMap, Modes, PredSig, Program};
use crate::structure::{moded_partition, ModeError};
use crate::subst::{mgu, unify_pairs, Substitution};
use crate::term::{Atom, Sort, Sym, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuleError {
    #[error("clause {0} is not in the current clause set")]
    NotCurrent(ClauseId),
    #[error("clause {0} is not a definition")]
    NotADefinition(ClauseId),
    #[error("predicate `{0}` already occurs in the sequence")]
    FreshnessViolation(Sym),
    #[error("output variable `{0}` of the replacement occurs in the clause")]
    OutputClash(Sym),
    #[error("head variable `{0}` does not occur in the body")]
    HeadVarsNotInBody(Sym),
    #[error("definition head must be a tuple of variables")]
    HeadNotVariables,
    #[error("body predicate `{0}` does not occur in the initial program")]
    BodyPredicateNotInP0(Sym),
    #[error("clause {clause} has no body atom at position {index}")]
    AtomNotInBody { clause: ClauseId, index: usize },
    #[error("body positions {0:?} are repeated or out of range")]
    BadPositions(Vec<usize>),
    #[error("definition body does not match the selected atoms")]
    BodyMismatch,
    #[error("local variable `{0}` of the definition is captured by the folded clause")]
    LocalVariableCaptured(Sym),
    #[error("constraint of the clause does not entail the definition's constraint")]
    ConstraintNotEntailed,
    #[error("level of head ({head}) vs definition ({def}) violates the rule")]
    LevelViolation { head: u32, def: u32 },
    #[error("constraint is not proven unsatisfiable")]
    ConstraintNotProvenUnsat,
    #[error("mode mismatch: {0}")]
    ModeMismatch(String),
    #[error("output variable `{0}` is still used in the clause")]
    OutputsStillUsed(Sym),
    #[error("renaming of the definition is not injective on variables")]
    NotARenaming,
    #[error("initial program is not stratified at clause {0}")]
    NotStratified(ClauseId),
    #[error(transparent)]
    Mode(#[from] ModeError),
    #[error(transparent)]
    Constraint(#[from] ConstraintError),
}

/// Unfolds `c` w.r.t. its body atom `idx` against `clauses`. Each candidate
/// is renamed apart first. Returns the derived clauses together with the
/// id of the clause each one came from. Atoms derived from the unfolded
/// atom are unmarked; inherited atoms keep their marks.
pub fn unfold_against(
    c: &Clause,
    idx: usize,
    clauses: &[&Clause],
    fresh: &mut Fresh,
) -> Result<Vec<(Clause, ClauseId)>, RuleError> {
    let a = c.body.get(idx).ok_or(RuleError::AtomNotInBody {
        clause: c.id,
        index: idx,
    })?;
    let mut out = Vec::new();
    for k in clauses {
        let Some(kh) = &k.head else { continue };
        if kh.pred != a.pred {
            continue;
        }
        let k = fresh.rename_clause(k);
        let kh = k.head.as_ref().expect("definite clause");
        let Some(u) = mgu(a, kh) else { continue };
        let mut cons = c.constraint.and(&k.constraint);
        for (l, r) in &u.equations {
            cons.relate(l, RelOp::Eq, r)?;
        }
        let cons = cons.substitute(u.subst.map())?;
        if let Ok(false) = check_sat(&cons, &Limits::default()) {
            continue;
        }
        let mut body = Vec::new();
        let mut marks = Vec::new();
        for (i, b) in c.body.iter().enumerate() {
            if i == idx {
                for d in &k.body {
                    body.push(u.subst.atom(d));
                    marks.push(false);
                }
            } else {
                body.push(u.subst.atom(b));
                marks.push(c.marks.get(i).copied().unwrap_or(false));
            }
        }
        let head = c.head.as_ref().map(|h| u.subst.atom(h));
        let mut keep: BTreeSet<Sym> = BTreeSet::new();
        for at in head.iter().chain(&body) {
            keep.extend(at.var_names());
        }
        let derived = Clause {
            id: ClauseId::default(),
            head,
            constraint: eliminate_defined(&cons, &keep),
            body,
            marks,
        };
        out.push((derived, k.id));
    }
    Ok(out)
}

/// Single-owner state of a transformation sequence.
#[derive(Clone, Debug)]
pub struct Sequence {
    base: Program,
    p0_preds: BTreeSet<Sym>,
    known_preds: BTreeSet<Sym>,
    preds: BTreeMap<Sym, PredSig>,
    store: BTreeMap<ClauseId, Clause>,
    current: Vec<ClauseId>,
    defs: Vec<ClauseId>,
    levels: LevelMap,
    next_id: u32,
    fresh: Fresh,
    name_counters: BTreeMap<String, u32>,
    trace: Trace,
}

fn check_positions(positions: &[usize], len: usize) -> Result<(), RuleError> {
    let distinct: BTreeSet<usize> = positions.iter().copied().collect();
    if positions.is_empty()
        || distinct.len() != positions.len()
        || positions.iter().any(|&p| p >= len)
    {
        return Err(RuleError::BadPositions(positions.to_vec()));
    }
    Ok(())
}

/// Removes `positions` from the body and inserts `replacement` where the
/// first removed atom was.
fn splice(c: &Clause, positions: &[usize], replacement: Vec<Atom>) -> Clause {
    let at = *positions.iter().min().expect("non-empty positions");
    let mut body = Vec::new();
    let mut marks = Vec::new();
    let mut pending = Some(replacement);
    for (i, b) in c.body.iter().enumerate() {
        if i == at {
            for r in pending.take().into_iter().flatten() {
                body.push(r);
                marks.push(false);
            }
        }
        if !positions.contains(&i) {
            body.push(b.clone());
            marks.push(c.marks.get(i).copied().unwrap_or(false));
        }
    }
    Clause {
        id: c.id,
        head: c.head.clone(),
        constraint: c.constraint.clone(),
        body,
        marks,
    }
}

impl Sequence {
    /// Starts a sequence at `p0`. Levels are computed by SCC rank when the
    /// program carries none.
    pub fn new(p0: &Program) -> Result<Sequence, RuleError> {
        let mut base = p0.clone();
        if base.levels.iter().next().is_none() {
            base.compute_levels();
        }
        for c in &base.clauses {
            let h = base.levels.head_level(c.head.as_ref());
            if c.body.iter().any(|a| base.levels.level(&a.pred) > h) {
                return Err(RuleError::NotStratified(c.id));
            }
        }
        let mut p0_preds: BTreeSet<Sym> = base.preds.keys().cloned().collect();
        p0_preds.extend(base.used_preds());
        let next_id = base.clauses.iter().map(|c| c.id.0).max().unwrap_or(0) + 1;
        let store = base.clauses.iter().map(|c| (c.id, c.clone())).collect();
        let current = base.clauses.iter().map(|c| c.id).collect();
        Ok(Sequence {
            fresh: Fresh::for_program(&base),
            levels: base.levels.clone(),
            preds: base.preds.clone(),
            known_preds: p0_preds.clone(),
            p0_preds,
            store,
            current,
            defs: Vec::new(),
            next_id,
            name_counters: BTreeMap::new(),
            trace: Trace::default(),
            base,
        })
    }

    pub fn initial(&self) -> &Program {
        &self.base
    }

    pub fn modes(&self) -> &Modes {
        &self.base.modes
    }

    pub fn levels(&self) -> &LevelMap {
        &self.levels
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn into_trace(self) -> Trace {
        self.trace
    }

    pub fn definitions(&self) -> &[ClauseId] {
        &self.defs
    }

    pub fn is_definition(&self, id: ClauseId) -> bool {
        self.defs.contains(&id)
    }

    /// Any clause that ever occurred in the sequence.
    pub fn clause(&self, id: ClauseId) -> Option<&Clause> {
        self.store.get(&id)
    }

    pub fn is_current(&self, id: ClauseId) -> bool {
        self.current.contains(&id)
    }

    pub fn current(&self) -> impl Iterator<Item = &Clause> {
        self.current.iter().map(|id| &self.store[id])
    }

    /// Definite clauses of `P0`, the clauses unfolding resolves against.
    pub fn p0_definite(&self) -> Vec<&Clause> {
        self.base
            .clauses
            .iter()
            .filter(|c| c.head.is_some())
            .collect()
    }

    pub fn is_p0_pred(&self, p: &Sym) -> bool {
        self.p0_preds.contains(p)
    }

    pub fn fresh(&mut self) -> &mut Fresh {
        &mut self.fresh
    }

    /// `prefix1`, `prefix2`, … skipping names already in use.
    pub fn fresh_pred(&mut self, prefix: &str) -> Sym {
        loop {
            let n = self.name_counters.entry(prefix.to_string()).or_insert(0);
            *n += 1;
            let s = Sym::new(&format!("{prefix}{n}"));
            if !self.known_preds.contains(&s) {
                return s;
            }
        }
    }

    /// `P_n` as a program, with declarations for introduced predicates.
    pub fn program(&self) -> Program {
        self.program_of(&self.current)
    }

    /// A program over the given clauses, sharing this sequence's
    /// declarations.
    pub fn program_of(&self, ids: &[ClauseId]) -> Program {
        Program {
            datatypes: self.base.datatypes.clone(),
            preds: self.preds.clone(),
            modes: self.base.modes.clone(),
            clauses: ids
                .iter()
                .filter_map(|id| self.store.get(id).cloned())
                .collect(),
            levels: self.levels.clone(),
        }
    }

    /// Overwrites the unfoldable marks of a current clause. Marks are
    /// control information and do not change the clause set.
    pub fn set_marks(&mut self, id: ClauseId, marks: Vec<bool>) -> Result<(), RuleError> {
        if !self.is_current(id) {
            return Err(RuleError::NotCurrent(id));
        }
        let c = self.store.get_mut(&id).expect("current clause is stored");
        if marks.len() == c.body.len() {
            c.marks = marks;
        }
        Ok(())
    }

    fn current_clause(&self, id: ClauseId) -> Result<&Clause, RuleError> {
        if !self.is_current(id) {
            return Err(RuleError::NotCurrent(id));
        }
        Ok(&self.store[&id])
    }

    fn definition(&self, id: ClauseId) -> Result<&Clause, RuleError> {
        if !self.defs.contains(&id) {
            return Err(RuleError::NotADefinition(id));
        }
        Ok(&self.store[&id])
    }

    fn add(&mut self, mut c: Clause) -> ClauseId {
        let id = ClauseId(self.next_id);
        self.next_id += 1;
        c.id = id;
        self.store.insert(id, c);
        self.current.push(id);
        id
    }

    /// Replaces `old` by `news` in the current set, keeping `old`'s slot.
    fn replace(&mut self, old: ClauseId, news: Vec<Clause>) -> Vec<ClauseId> {
        let pos = self
            .current
            .iter()
            .position(|&x| x == old)
            .expect("current");
        self.current.remove(pos);
        let mut ids = Vec::new();
        for (k, c) in news.into_iter().enumerate() {
            let id = self.add(c);
            self.current.pop();
            self.current.insert(pos + k, id);
            ids.push(id);
        }
        ids
    }

    fn record(
        &mut self,
        rule: RuleTag,
        inputs: Vec<ClauseId>,
        outputs: &[ClauseId],
        witness: Witness,
        defs_before: usize,
    ) {
        let outputs = outputs.iter().map(|id| self.store[id].clone()).collect();
        self.trace.steps.push(Step {
            rule,
            inputs,
            outputs,
            witness,
            defs_before,
        });
    }

    /// R1. The head must be a tuple of variables occurring in the body, the
    /// predicate fresh, and every body predicate from `P0`.
    pub fn define(&mut self, d: Clause) -> Result<ClauseId, RuleError> {
        let head = d.head.as_ref().ok_or(RuleError::HeadNotVariables)?;
        if self.known_preds.contains(&head.pred) {
            return Err(RuleError::FreshnessViolation(head.pred.clone()));
        }
        let mut body_vars: BTreeSet<Sym> = d.body.iter().flat_map(|a| a.var_names()).collect();
        body_vars.extend(d.constraint.vars());
        let mut sorts = Vec::new();
        for t in &head.args {
            let v = t.as_var().ok_or(RuleError::HeadNotVariables)?;
            if !body_vars.contains(&v.name) {
                return Err(RuleError::HeadVarsNotInBody(v.name.clone()));
            }
            sorts.push(v.sort.clone());
        }
        if let Some(a) = d.body.iter().find(|a| !self.p0_preds.contains(&a.pred)) {
            return Err(RuleError::BodyPredicateNotInP0(a.pred.clone()));
        }
        let level = d
            .body
            .iter()
            .map(|a| self.levels.level(&a.pred))
            .max()
            .unwrap_or(0);
        let pred = head.pred.clone();
        self.levels.set(pred.clone(), level);
        self.known_preds.insert(pred.clone());
        self.preds.insert(
            pred.clone(),
            PredSig {
                name: pred.clone(),
                args: sorts,
            },
        );
        let defs_before = self.defs.len();
        let id = self.add(d);
        self.defs.push(id);
        self.record(
            RuleTag::Define,
            vec![],
            &[id],
            Witness::Define { pred, level },
            defs_before,
        );
        Ok(id)
    }

    /// R2 against the definite clauses of `P0`.
    pub fn unfold(&mut self, id: ClauseId, idx: usize) -> Result<Vec<ClauseId>, RuleError> {
        let c = self.current_clause(id)?.clone();
        let fresh_start = self.fresh.counter();
        let p0: Vec<Clause> = self.p0_definite().into_iter().cloned().collect();
        let refs: Vec<&Clause> = p0.iter().collect();
        let derived = unfold_against(&c, idx, &refs, &mut self.fresh)?;
        let atom = c.body[idx].clone();
        let level = self.levels.level(&atom.pred);
        let using: Vec<ClauseId> = derived.iter().map(|(_, k)| *k).collect();
        let outs = self.replace(id, derived.into_iter().map(|(c, _)| c).collect());
        let defs_before = self.defs.len();
        self.record(
            RuleTag::Unfold,
            vec![id],
            &outs,
            Witness::Unfold {
                index: idx,
                atom,
                level,
                using,
                fresh_start,
            },
            defs_before,
        );
        Ok(outs)
    }

    /// R3. `subst` maps the definition body onto the atoms at `positions`
    /// (`body(D)[i]·subst = body(C)[positions[i]]`).
    pub fn fold(
        &mut self,
        id: ClauseId,
        def: ClauseId,
        positions: &[usize],
        subst: &Substitution,
    ) -> Result<ClauseId, RuleError> {
        let c = self.current_clause(id)?.clone();
        let d = self.definition(def)?.clone();
        check_positions(positions, c.body.len())?;
        if positions.len() != d.body.len() {
            return Err(RuleError::BodyMismatch);
        }
        for (b, &p) in d.body.iter().zip(positions) {
            if subst.atom(b) != c.body[p] {
                return Err(RuleError::BodyMismatch);
            }
        }
        let head = d.head.as_ref().expect("definitions have heads");
        let head_vars = head.var_names();
        let mut outside: BTreeSet<Sym> = c.constraint.vars();
        if let Some(h) = &c.head {
            outside.extend(h.var_names());
        }
        for (i, a) in c.body.iter().enumerate() {
            if !positions.contains(&i) {
                outside.extend(a.var_names());
            }
        }
        // local variables of D must map to distinct variables private to Q
        let mut images: BTreeMap<Sym, Sym> = BTreeMap::new();
        for v in d.body.iter().flat_map(|a| a.vars()) {
            if head_vars.contains(&v.name) || images.contains_key(&v.name) {
                continue;
            }
            match subst.term(&Term::Var(v.clone())).as_var() {
                Some(w) if !outside.contains(&w.name) && !images.values().any(|x| x == &w.name) => {
                    images.insert(v.name.clone(), w.name.clone());
                }
                _ => return Err(RuleError::LocalVariableCaptured(v.name.clone())),
            }
        }
        let dtheta = d.constraint.substitute(subst.map())?;
        if !entails(&c.constraint, &dtheta) {
            return Err(RuleError::ConstraintNotEntailed);
        }
        let kl = self.levels.level(&head.pred);
        if let Some(h) = &c.head {
            let hl = self.levels.level(&h.pred);
            if hl < kl {
                return Err(RuleError::LevelViolation { head: hl, def: kl });
            }
        }
        let e = splice(&c, positions, vec![subst.atom(head)]);
        let outs = self.replace(id, vec![e]);
        let defs_before = self.defs.len();
        self.record(
            RuleTag::Fold,
            vec![id],
            &outs,
            Witness::Fold {
                definition: def,
                positions: positions.to_vec(),
                subst: subst.clone(),
            },
            defs_before,
        );
        Ok(outs[0])
    }

    /// R4: requires a proof of unsatisfiability.
    pub fn delete(&mut self, id: ClauseId) -> Result<(), RuleError> {
        let c = self.current_clause(id)?;
        if check_sat(&c.constraint, &Limits::default()) != Ok(false) {
            return Err(RuleError::ConstraintNotProvenUnsat);
        }
        self.replace(id, vec![]);
        let defs_before = self.defs.len();
        self.record(RuleTag::Delete, vec![id], &[], Witness::Delete, defs_before);
        Ok(())
    }

    /// Totality needs distinct variables in output positions. An atom such
    /// as `len(Xs,0)` constrains its input.
    fn outputs_are_vars(&self, atoms: &[Atom]) -> Result<(), RuleError> {
        for a in atoms {
            let (_, outs) = self.io(a)?;
            if let Some(&o) = outs.iter().find(|&&o| a.args[o].as_var().is_none()) {
                return Err(RuleError::ModeMismatch(format!(
                    "output {} of `{}` is not a variable",
                    o + 1,
                    crate::display::atom(a)
                )));
            }
        }
        Ok(())
    }

    fn io(&self, a: &Atom) -> Result<(Vec<usize>, Vec<usize>), RuleError> {
        let m = self
            .base
            .modes
            .get(&a.pred)
            .ok_or_else(|| RuleError::Mode(ModeError::MissingMode(a.pred.clone())))?;
        Ok((m.inputs.clone(), m.outputs.clone()))
    }

    /// R5. The atoms at `second` repeat those at `first` with identical
    /// inputs; they are dropped and their outputs equated with the first
    /// copy's. Basic outputs become equations, ADT outputs are unified.
    pub fn functionality(
        &mut self,
        id: ClauseId,
        first: &[usize],
        second: &[usize],
    ) -> Result<ClauseId, RuleError> {
        let c = self.current_clause(id)?.clone();
        check_positions(first, c.body.len())?;
        check_positions(second, c.body.len())?;
        if first.len() != second.len() || first.iter().any(|p| second.contains(p)) {
            return Err(RuleError::BadPositions(second.to_vec()));
        }
        let f: Vec<Atom> = first.iter().map(|&p| c.body[p].clone()).collect();
        let g: Vec<Atom> = second.iter().map(|&p| c.body[p].clone()).collect();
        moded_partition(&f, &self.base.modes)?;
        let mut cons = c.constraint.clone();
        let mut adt_pairs = Vec::new();
        for (a, b) in f.iter().zip(&g) {
            if a.pred != b.pred {
                return Err(RuleError::ModeMismatch(format!(
                    "`{}` vs `{}`",
                    a.pred, b.pred
                )));
            }
            let (ins, outs) = self.io(a)?;
            if ins.iter().any(|&i| a.args[i] != b.args[i]) {
                return Err(RuleError::ModeMismatch(format!(
                    "inputs of `{}` and `{}` differ",
                    crate::display::atom(a),
                    crate::display::atom(b)
                )));
            }
            for o in outs {
                let (y, z) = (&a.args[o], &b.args[o]);
                if y.sort().is_basic() {
                    cons.relate(y, RelOp::Eq, z)?;
                } else {
                    adt_pairs.push((y.clone(), z.clone()));
                }
            }
        }
        let mut d = Clause {
            id: c.id,
            head: c.head.clone(),
            constraint: cons,
            body: c
                .body
                .iter()
                .enumerate()
                .filter(|(i, _)| !second.contains(i))
                .map(|(_, a)| a.clone())
                .collect(),
            marks: c
                .marks
                .iter()
                .enumerate()
                .filter(|(i, _)| !second.contains(i))
                .map(|(_, m)| *m)
                .collect(),
        };
        match unify_pairs(adt_pairs) {
            Some(u) => {
                let mut k = d.constraint.clone();
                for (l, r) in &u.equations {
                    k.relate(l, RelOp::Eq, r)?;
                }
                d.constraint = k;
                d = u.subst.clause(&d)?;
            }
            None => d.constraint = crate::constraints::Constraint::bottom(),
        }
        let outs = self.replace(id, vec![d]);
        let defs_before = self.defs.len();
        self.record(
            RuleTag::Functionality,
            vec![id],
            &outs,
            Witness::Functionality {
                first: first.to_vec(),
                second: second.to_vec(),
            },
            defs_before,
        );
        Ok(outs[0])
    }

    /// R6. The outputs of the atoms at `positions` must not occur in the
    /// rest of the clause.
    pub fn totality(&mut self, id: ClauseId, positions: &[usize]) -> Result<ClauseId, RuleError> {
        let c = self.current_clause(id)?.clone();
        check_positions(positions, c.body.len())?;
        let f: Vec<Atom> = positions.iter().map(|&p| c.body[p].clone()).collect();
        let view = moded_partition(&f, &self.base.modes)?;
        self.outputs_are_vars(&f)?;
        let mut rest: BTreeSet<Sym> = c.constraint.vars();
        if let Some(h) = &c.head {
            rest.extend(h.var_names());
        }
        for (i, a) in c.body.iter().enumerate() {
            if !positions.contains(&i) {
                rest.extend(a.var_names());
            }
        }
        if let Some(v) = view.outputs.iter().find(|v| rest.contains(&v.name)) {
            return Err(RuleError::OutputsStillUsed(v.name.clone()));
        }
        let d = splice(&c, positions, vec![]);
        let outs = self.replace(id, vec![d]);
        let defs_before = self.defs.len();
        self.record(
            RuleTag::Totality,
            vec![id],
            &outs,
            Witness::Totality {
                positions: positions.to_vec(),
            },
            defs_before,
        );
        Ok(outs[0])
    }

    /// R7. The definition's body is `F, R` where `F` has as many atoms as
    /// `f_positions`. `renaming` is a variable renaming of the definition
    /// under which its `F` equals the selected atoms of the clause.
    pub fn diff_replace(
        &mut self,
        id: ClauseId,
        def: ClauseId,
        f_positions: &[usize],
        renaming: &BTreeMap<Sym, Sym>,
    ) -> Result<ClauseId, RuleError> {
        let c = self.current_clause(id)?.clone();
        let d = self.definition(def)?.clone();
        check_positions(f_positions, c.body.len())?;
        let n = f_positions.len();
        if d.body.len() < n {
            return Err(RuleError::BodyMismatch);
        }
        let dvars = d.atom_vars();
        let mut images = BTreeSet::new();
        let mut names = BTreeMap::new();
        for v in &dvars {
            let img = renaming
                .get(&v.name)
                .cloned()
                .unwrap_or_else(|| v.name.clone());
            if !images.insert(img.clone()) {
                return Err(RuleError::NotARenaming);
            }
            names.insert(v.name.clone(), crate::term::Var::new(img, v.sort.clone()));
        }
        for v in d.constraint.vars() {
            if !names.contains_key(&v) {
                let img = renaming.get(&v).cloned().unwrap_or_else(|| v.clone());
                if !images.insert(img.clone()) {
                    return Err(RuleError::NotARenaming);
                }
                names.insert(v, crate::term::Var::new(img, Sort::Int));
            }
        }
        let dr = rename_clause(&d, &names);
        let (fd, rd) = dr.body.split_at(n);
        for (a, &p) in fd.iter().zip(f_positions) {
            if *a != c.body[p] {
                return Err(RuleError::BodyMismatch);
            }
        }
        moded_partition(fd, &self.base.modes)?;
        let rview = moded_partition(rd, &self.base.modes)?;
        self.outputs_are_vars(rd)?;
        let cvars = c.var_names();
        if let Some(w) = rview.outputs.iter().find(|w| cvars.contains(&w.name)) {
            return Err(RuleError::OutputClash(w.name.clone()));
        }
        if !entails(&c.constraint, &dr.constraint) {
            return Err(RuleError::ConstraintNotEntailed);
        }
        let dh = dr.head.clone().expect("definitions have heads");
        let dl = self.levels.level(&dh.pred);
        let hl = self.levels.head_level(c.head.as_ref());
        if hl <= dl {
            return Err(RuleError::LevelViolation { head: hl, def: dl });
        }
        let mut replacement: Vec<Atom> = rd.to_vec();
        replacement.push(dh);
        let e = splice(&c, f_positions, replacement);
        let outs = self.replace(id, vec![e]);
        let defs_before = self.defs.len();
        self.record(
            RuleTag::DiffReplace,
            vec![id],
            &outs,
            Witness::DiffReplace {
                definition: def,
                positions: f_positions.to_vec(),
                renaming: renaming.clone(),
            },
            defs_before,
        );
        Ok(outs[0])
    }
}
