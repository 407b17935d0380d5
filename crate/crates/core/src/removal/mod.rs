//! The removal driver: repeated define/fold, unfold and replace rounds until
//! every clause left has basic-typed atoms only.

mod unfold;

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use thiserror::Error;

use crate::clause::{Clause, ClauseId};
use crate::constraints::{entails, project, widen, Constraint};
use crate::program::Program;
use crate::rules::{audit_condition_u, Audit, RuleError, RuleTag, Sequence, Trace};
use crate::structure::{bvars, moded_partition, partial_matches, sharing_blocks};
use crate::subst::{variant_atoms, Substitution};
use crate::term::{Atom, Sort, Sym, Term, Var};

pub use unfold::{is_descending, is_head_instance};

/// Which source atoms of a new definition are marked before Phase 1.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MarkingPolicy {
    /// The leftmost source atom among those of maximal level.
    #[default]
    LeftmostMaxLevel,
    AllSources,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Config {
    pub max_iterations: usize,
    pub max_definitions: usize,
    pub diff_introduce: bool,
    pub marking: MarkingPolicy,
    /// Unfolding steps allowed inside one call of the Unfold procedure.
    pub unfold_budget: usize,
    /// Search nodes for one partial-match enumeration.
    pub match_limit: usize,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            max_iterations: 50,
            max_definitions: 200,
            diff_introduce: true,
            marking: MarkingPolicy::default(),
            unfold_budget: 20_000,
            match_limit: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RemovalError {
    #[error("no termination after {iterations} iterations ({definitions} definitions)")]
    IterationCapExceeded {
        iterations: usize,
        definitions: usize,
    },
    #[error("definition cap exceeded: {definitions} definitions")]
    DefinitionCapExceeded { definitions: usize },
    #[error("unfolding budget of {0} steps exhausted")]
    UnfoldBudgetExceeded(usize),
    #[error("definition {0} has no source atom")]
    NoSourceAtom(ClauseId),
    #[error(transparent)]
    Rule(#[from] RuleError),
}

#[derive(Clone, Debug)]
pub struct Outcome {
    /// The basic-typed clauses, with declarations for the predicates they use.
    pub program: Program,
    pub transf_cls: Vec<ClauseId>,
    pub trace: Trace,
    pub iterations: usize,
    pub definitions: usize,
    /// Difference replacement appeared in the derivation, so a proof of
    /// unsatisfiability for the output says nothing about the input.
    pub r7_used: bool,
    pub audit: Audit,
}

/// Produced by one Diff-Define-Fold step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Case {
    Fold,
    Generalize,
    DiffIntroduce,
    Project,
}

/// Loop state. `defs` and `new_defs` live in the sequence: its definition
/// list is `Defs` followed by the round's `NewDefs`.
#[derive(Clone, Debug)]
pub struct AlgorithmState {
    pub seq: Sequence,
    pub config: Config,
    pub in_cls: Vec<ClauseId>,
    pub transf_cls: Vec<ClauseId>,
    pub new_defs: Vec<ClauseId>,
    pub iteration: usize,
    pulled: BTreeSet<Sym>,
    descending: BTreeMap<Sym, bool>,
}

/// Runs the algorithm to completion.
pub fn run(program: &Program, config: &Config) -> Result<Outcome, RemovalError> {
    let mut st = AlgorithmState::new(program, config.clone())?;
    st.run()?;
    Ok(st.outcome())
}

fn sort_map(c: &Clause) -> BTreeMap<Sym, Sort> {
    let mut m: BTreeMap<Sym, Sort> = c
        .atom_vars()
        .into_iter()
        .map(|v| (v.name, v.sort))
        .collect();
    for v in c.constraint.vars() {
        m.entry(v).or_insert(Sort::Int);
    }
    m
}

fn var_terms(vs: &[Var]) -> Vec<Term> {
    vs.iter().map(|v| Term::Var(v.clone())).collect()
}

fn basic_names(vs: &[Var]) -> BTreeSet<Sym> {
    vs.iter()
        .filter(|v| v.sort.is_basic())
        .map(|v| v.name.clone())
        .collect()
}

fn basic(vs: Vec<Var>) -> Vec<Var> {
    vs.into_iter().filter(|v| v.sort.is_basic()).collect()
}

/// Positions in `body` of `atoms`, each position used once.
fn locate(body: &[Atom], atoms: &[Atom]) -> Option<Vec<usize>> {
    let mut used = vec![false; body.len()];
    let mut out = Vec::new();
    for a in atoms {
        let i = (0..body.len()).find(|&i| !used[i] && body[i] == *a)?;
        used[i] = true;
        out.push(i);
    }
    Some(out)
}

impl AlgorithmState {
    pub fn new(program: &Program, config: Config) -> Result<Self, RemovalError> {
        let seq = Sequence::new(program)?;
        let in_cls = program
            .clauses
            .iter()
            .filter(|c| c.is_goal())
            .map(|c| c.id)
            .collect();
        Ok(AlgorithmState {
            seq,
            config,
            in_cls,
            transf_cls: Vec::new(),
            new_defs: Vec::new(),
            iteration: 0,
            pulled: BTreeSet::new(),
            descending: BTreeMap::new(),
        })
    }

    fn clause(&self, id: ClauseId) -> Clause {
        self.seq.clause(id).expect("known clause").clone()
    }

    pub fn run(&mut self) -> Result<(), RemovalError> {
        if !self.seq.initial().has_adts() {
            self.transf_cls = self.seq.initial().clauses.iter().map(|c| c.id).collect();
            self.in_cls.clear();
            return Ok(());
        }
        while !self.in_cls.is_empty() {
            if self.iteration >= self.config.max_iterations {
                return Err(RemovalError::IterationCapExceeded {
                    iterations: self.iteration,
                    definitions: self.seq.definitions().len(),
                });
            }
            self.iteration += 1;
            self.new_defs.clear();
            let fld = self.diff_define_fold()?;
            let defs = self.seq.definitions().len();
            if defs > self.config.max_definitions {
                return Err(RemovalError::DefinitionCapExceeded { definitions: defs });
            }
            let new_defs = self.new_defs.clone();
            let unf = self.unfold_proc(&new_defs)?;
            self.in_cls = self.replace_proc(&unf);
            self.transf_cls.extend(fld);
        }
        Ok(())
    }

    pub fn outcome(&self) -> Outcome {
        let mut program = self.seq.program_of(&self.transf_cls);
        let used = program.used_preds();
        program.preds.retain(|p, _| used.contains(p));
        program.modes.retain(|p, _| used.contains(p));
        program.datatypes.clear();
        program.levels =
            crate::program::LevelMap::from_clauses(program.preds.keys(), &program.clauses);
        let trace = self.seq.trace().clone();
        Outcome {
            program,
            transf_cls: self.transf_cls.clone(),
            iterations: self.iteration,
            definitions: self.seq.definitions().len(),
            r7_used: trace.uses(RuleTag::DiffReplace),
            audit: audit_condition_u(&trace),
            trace,
        }
    }

    /// Processes `in_cls` until every clause is basic-typed. Returns the
    /// folded clauses (`FldCls`).
    pub fn diff_define_fold(&mut self) -> Result<Vec<ClauseId>, RemovalError> {
        let mut work: VecDeque<ClauseId> = std::mem::take(&mut self.in_cls).into();
        let mut fld = Vec::new();
        while let Some(id) = work.pop_front() {
            let c = self.clause(id);
            if c.has_basic_types() {
                fld.push(id);
                for p in c.body.iter().map(|a| &a.pred) {
                    if self.seq.is_p0_pred(p) && self.pulled.insert(p.clone()) {
                        let ks: Vec<ClauseId> = self
                            .seq
                            .p0_definite()
                            .iter()
                            .filter(|k| k.head.as_ref().is_some_and(|h| &h.pred == p))
                            .map(|k| k.id)
                            .collect();
                        work.extend(ks);
                    }
                }
                continue;
            }
            let (e, _) = self.step(id)?;
            work.push_front(e);
        }
        Ok(fld)
    }

    /// Positions of the leftmost sharing block holding an ADT argument.
    pub fn select_block(c: &Clause) -> Option<Vec<usize>> {
        sharing_blocks(&c.body)
            .into_iter()
            .find(|b| b.iter().any(|&i| c.body[i].has_adts()))
    }

    /// One application of the first applicable case to the selected block
    /// of clause `id`.
    pub fn step(&mut self, id: ClauseId) -> Result<(ClauseId, Case), RemovalError> {
        let c = self.clause(id);
        let Some(block) = Self::select_block(&c) else {
            return Err(RuleError::BadPositions(vec![]).into());
        };
        if let Some(e) = self.try_fold(id, &block) {
            return Ok((e, Case::Fold));
        }
        if let Some(e) = self.try_generalize(id, &block) {
            return Ok((e, Case::Generalize));
        }
        if self.config.diff_introduce {
            if let Some(e) = self.try_diff_introduce(id, &block) {
                return Ok((e, Case::DiffIntroduce));
            }
        }
        Ok((self.try_project(id, &block)?, Case::Project))
    }

    /// Definitions whose body is a variant of the atoms at `block`, with the
    /// positions and substitution a fold would use.
    fn variant_defs(
        &self,
        c: &Clause,
        block: &[usize],
    ) -> Vec<(ClauseId, Vec<usize>, Substitution, Constraint)> {
        let b: Vec<Atom> = block.iter().map(|&i| c.body[i].clone()).collect();
        let mut out = Vec::new();
        for &d in self.seq.definitions() {
            let dc = self.seq.clause(d).expect("definition stored");
            if dc.body.len() != b.len() {
                continue;
            }
            let Some(r) = variant_atoms(&dc.body, &b, &BTreeMap::new()) else {
                continue;
            };
            let positions: Vec<usize> = r.permutation.iter().map(|&j| block[j]).collect();
            let subst = r.as_substitution(&sort_map(dc));
            let Ok(dtheta) = dc.constraint.substitute(subst.map()) else {
                continue;
            };
            out.push((d, positions, subst, dtheta));
        }
        out
    }

    pub fn try_fold(&mut self, id: ClauseId, block: &[usize]) -> Option<ClauseId> {
        let c = self.clause(id);
        for (d, positions, subst, dtheta) in self.variant_defs(&c, block) {
            if !entails(&c.constraint, &dtheta) {
                continue;
            }
            if let Ok(e) = self.seq.fold(id, d, &positions, &subst) {
                return Some(e);
            }
        }
        None
    }

    pub fn try_generalize(&mut self, id: ClauseId, block: &[usize]) -> Option<ClauseId> {
        let c = self.clause(id);
        let (_, _, _, dtheta) = self.variant_defs(&c, block).into_iter().next()?;
        let b: Vec<Atom> = block.iter().map(|&i| c.body[i].clone()).collect();
        let mut trial = self.clone();
        let e = trial
            .define_and_fold(id, "gen", widen(&dtheta, &c.constraint), b, block)
            .ok()?;
        *self = trial;
        Some(e)
    }

    /// Introduces `prefix_k(bvars(body)) <- constraint, body` and folds the
    /// atoms at `positions` of clause `id` with it.
    fn define_and_fold(
        &mut self,
        id: ClauseId,
        prefix: &str,
        constraint: Constraint,
        body: Vec<Atom>,
        positions: &[usize],
    ) -> Result<ClauseId, RuleError> {
        let pred = self.seq.fresh_pred(prefix);
        let head = Atom {
            pred,
            args: var_terms(&basic(bvars(&body))),
        };
        let def = self.seq.define(Clause::new(Some(head), constraint, body))?;
        self.new_defs.push(def);
        self.seq.fold(id, def, positions, &Substitution::identity())
    }

    pub fn try_project(&mut self, id: ClauseId, block: &[usize]) -> Result<ClauseId, RemovalError> {
        let c = self.clause(id);
        let b: Vec<Atom> = block.iter().map(|&i| c.body[i].clone()).collect();
        let keep = match moded_partition(&b, self.seq.modes()) {
            Ok(view) => basic_names(&view.inputs),
            Err(_) => basic_names(&bvars(&b)),
        };
        let pi = project(&c.constraint, &keep);
        Ok(self.define_and_fold(id, "new", pi, b, block)?)
    }

    pub fn try_diff_introduce(&mut self, id: ClauseId, block: &[usize]) -> Option<ClauseId> {
        let defs: Vec<ClauseId> = self.seq.definitions().to_vec();
        for d in defs {
            let mut trial = self.clone();
            if let Some(e) = trial.diff_introduce_with(id, block, d) {
                *self = trial;
                return Some(e);
            }
        }
        None
    }

    fn diff_introduce_with(
        &mut self,
        id: ClauseId,
        block: &[usize],
        d: ClauseId,
    ) -> Option<ClauseId> {
        let c = self.clause(id);
        let dc = self.clause(d);
        let b: Vec<Atom> = block.iter().map(|&i| c.body[i].clone()).collect();
        let dr = self.seq.fresh().rename_clause(&dc);
        // original definition variables to their renamed copies
        let back: BTreeMap<Sym, Var> = dc
            .atom_vars()
            .into_iter()
            .zip(dr.atom_vars())
            .map(|(a, b)| (a.name, b))
            .collect();
        let cvars = c.var_names();
        let modes = self.seq.modes().clone();
        let levels = self.seq.levels().clone();
        let hl = levels.head_level(c.head.as_ref());
        for m in partial_matches(&dr.body, &b, self.config.match_limit) {
            let matched: BTreeSet<usize> = m.pairs.iter().map(|p| p.1).collect();
            let m_atoms: Vec<Atom> = matched.iter().map(|&j| b[j].clone()).collect();
            if sharing_blocks(&m_atoms).len() != 1 {
                continue;
            }
            let f_idx: Vec<usize> = (0..b.len()).filter(|j| !matched.contains(j)).collect();
            if f_idx.is_empty() {
                continue;
            }
            let f: Vec<Atom> = f_idx.iter().map(|&j| b[j].clone()).collect();
            let in_pattern: BTreeSet<usize> = m.pairs.iter().map(|p| p.0).collect();
            let r: Vec<Atom> = (0..dr.body.len())
                .filter(|i| !in_pattern.contains(i))
                .map(|i| m.subst.atom(&dr.body[i]))
                .collect();
            if r.is_empty() {
                continue;
            }
            let Ok(rview) = moded_partition(&r, &modes) else {
                continue;
            };
            if rview.outputs.iter().any(|w| cvars.contains(&w.name)) {
                continue;
            }
            if rview.inputs.iter().any(|v| !cvars.contains(&v.name)) {
                continue;
            }
            if f.iter().chain(&r).any(|a| levels.level(&a.pred) >= hl) {
                continue;
            }
            let Ok(fview) = moded_partition(&f, &modes) else {
                continue;
            };
            let f_pos: Vec<usize> = f_idx.iter().map(|&j| block[j]).collect();
            let mut trial = self.clone();
            let Some(cp) = trial.introduce_diff(id, &c, &f, &r, &f_pos, &fview.inputs) else {
                continue;
            };
            // D's body instantiated inside C'
            let subst = Substitution::from_map(
                back.iter()
                    .map(|(orig, renamed)| {
                        (orig.clone(), m.subst.term(&Term::Var(renamed.clone())))
                    })
                    .filter(|(k, t)| t.as_var().is_none_or(|v| &v.name != k))
                    .collect(),
            );
            let image = subst.atoms(&dc.body);
            let cpc = trial.clause(cp);
            let Some(positions) = locate(&cpc.body, &image) else {
                continue;
            };
            let Ok(dtheta) = dc.constraint.substitute(subst.map()) else {
                continue;
            };
            let done = if entails(&cpc.constraint, &dtheta) {
                trial.seq.fold(cp, d, &positions, &subst).ok()
            } else {
                trial
                    .define_and_fold(
                        cp,
                        "gen",
                        widen(&dtheta, &cpc.constraint),
                        image,
                        &positions,
                    )
                    .ok()
            };
            if let Some(e) = done {
                *self = trial;
                return Some(e);
            }
        }
        None
    }

    /// Creates (or reuses) the difference definition for `F, R` and applies
    /// difference replacement to clause `id`.
    fn introduce_diff(
        &mut self,
        id: ClauseId,
        c: &Clause,
        f: &[Atom],
        r: &[Atom],
        f_pos: &[usize],
        f_inputs: &[Var],
    ) -> Option<ClauseId> {
        let fr: Vec<Atom> = f.iter().chain(r).cloned().collect();
        let defs: Vec<ClauseId> = self.seq.definitions().to_vec();
        for e in defs {
            let ec = self.clause(e);
            let Some(ren) = variant_atoms(&ec.body, &fr, &BTreeMap::new()) else {
                continue;
            };
            if ren.permutation[..f.len()].iter().any(|&j| j >= f.len()) {
                continue;
            }
            if !entails(&c.constraint, &ec.constraint.rename(&ren.map)) {
                continue;
            }
            let positions: Vec<usize> = ren.permutation[..f.len()]
                .iter()
                .map(|&j| f_pos[j])
                .collect();
            if let Ok(cp) = self.seq.diff_replace(id, e, &positions, &ren.map) {
                return Some(cp);
            }
        }
        let mut z = basic(bvars(r));
        for v in basic(bvars(f)) {
            if !z.contains(&v) {
                z.push(v);
            }
        }
        let pred = self.seq.fresh_pred("diff");
        let head = Atom {
            pred,
            args: var_terms(&z),
        };
        let pi = project(&c.constraint, &basic_names(f_inputs));
        let def = self.seq.define(Clause::new(Some(head), pi, fr)).ok()?;
        self.new_defs.push(def);
        self.seq.diff_replace(id, def, f_pos, &BTreeMap::new()).ok()
    }

    /// Phase 1 unfolds marked source atoms, Phase 2 head instances that are
    /// marked or descending.
    pub fn unfold_proc(&mut self, new_defs: &[ClauseId]) -> Result<Vec<ClauseId>, RemovalError> {
        let modes = self.seq.modes().clone();
        let mut unf: Vec<ClauseId> = new_defs.to_vec();
        for &id in new_defs {
            let c = self.clause(id);
            let sources = crate::structure::source_atoms(&c.body, &modes).unwrap_or_default();
            if sources.is_empty() {
                return Err(RemovalError::NoSourceAtom(id));
            }
            let mut marks = vec![false; c.body.len()];
            match self.config.marking {
                MarkingPolicy::AllSources => sources.iter().for_each(|&i| marks[i] = true),
                MarkingPolicy::LeftmostMaxLevel => {
                    let top = sources
                        .iter()
                        .map(|&i| self.seq.levels().level(&c.body[i].pred))
                        .max();
                    if let Some(&i) = sources
                        .iter()
                        .find(|&&i| Some(self.seq.levels().level(&c.body[i].pred)) == top)
                    {
                        marks[i] = true;
                    }
                }
            }
            self.seq.set_marks(id, marks)?;
        }
        let mut steps = 0;
        loop {
            let next = unf.iter().enumerate().find_map(|(k, &id)| {
                let c = self.seq.clause(id)?;
                c.marks.iter().position(|&m| m).map(|i| (k, id, i))
            });
            let Some((k, id, i)) = next else { break };
            self.unfold_at(&mut unf, k, id, i, &mut steps)?;
        }
        for &id in &unf {
            let n = self.clause(id).body.len();
            self.seq.set_marks(id, vec![true; n])?;
        }
        let ds: Vec<Clause> = self.seq.p0_definite().into_iter().cloned().collect();
        loop {
            let mut next = None;
            'scan: for (k, &id) in unf.iter().enumerate() {
                let c = self.clause(id);
                for (i, a) in c.body.iter().enumerate() {
                    let wanted =
                        c.marks.get(i).copied().unwrap_or(false) || self.descending(&a.pred);
                    if wanted && self.head_instance(&ds, &c, i) {
                        next = Some((k, id, i));
                        break 'scan;
                    }
                }
            }
            let Some((k, id, i)) = next else { break };
            self.unfold_at(&mut unf, k, id, i, &mut steps)?;
        }
        Ok(unf)
    }

    fn unfold_at(
        &mut self,
        unf: &mut Vec<ClauseId>,
        k: usize,
        id: ClauseId,
        i: usize,
        steps: &mut usize,
    ) -> Result<(), RemovalError> {
        *steps += 1;
        if *steps > self.config.unfold_budget {
            return Err(RemovalError::UnfoldBudgetExceeded(
                self.config.unfold_budget,
            ));
        }
        let outs = self.seq.unfold(id, i)?;
        unf.splice(k..=k, outs);
        Ok(())
    }

    fn head_instance(&mut self, ds: &[Clause], c: &Clause, i: usize) -> bool {
        let refs: Vec<&Clause> = ds.iter().collect();
        let modes = self.seq.modes().clone();
        is_head_instance(&c.body[i], c, &refs, &modes, self.seq.fresh())
    }

    fn descending(&mut self, p: &Sym) -> bool {
        if let Some(&d) = self.descending.get(p) {
            return d;
        }
        let ds: Vec<&Clause> = self.seq.p0_definite();
        let d = is_descending(p, &ds, self.seq.modes());
        self.descending.insert(p.clone(), d);
        d
    }

    /// R5 and R6 until neither applies.
    pub fn replace_proc(&mut self, unf: &[ClauseId]) -> Vec<ClauseId> {
        let modes = self.seq.modes().clone();
        let mut out = Vec::new();
        for &start in unf {
            let mut id = start;
            'fix: loop {
                let c = self.clause(id);
                for j in 0..c.body.len() {
                    for i in 0..j {
                        let (a, b) = (&c.body[i], &c.body[j]);
                        let Some(m) = modes.get(&a.pred) else {
                            continue;
                        };
                        if a.pred == b.pred && m.inputs.iter().all(|&p| a.args[p] == b.args[p]) {
                            if let Ok(n) = self.seq.functionality(id, &[i], &[j]) {
                                id = n;
                                continue 'fix;
                            }
                        }
                    }
                }
                for i in 0..c.body.len() {
                    // an atom without outputs is a test, not a total map
                    let has_out = modes
                        .get(&c.body[i].pred)
                        .is_some_and(|m| !m.outputs.is_empty());
                    if !has_out {
                        continue;
                    }
                    if let Ok(n) = self.seq.totality(id, &[i]) {
                        id = n;
                        continue 'fix;
                    }
                }
                break;
            }
            out.push(id);
        }
        out
    }
}
