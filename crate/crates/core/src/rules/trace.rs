use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use super::{RuleError, Sequence};
use crate::clause::{Clause, ClauseId};
use crate::display;
use crate::program::Program;
use crate::subst::Substitution;
use crate::term::{Atom, Sym};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RuleTag {
    Define,
    Unfold,
    Fold,
    Delete,
    Functionality,
    Totality,
    DiffReplace,
}

impl RuleTag {
    pub fn code(self) -> &'static str {
        match self {
            RuleTag::Define => "R1",
            RuleTag::Unfold => "R2",
            RuleTag::Fold => "R3",
            RuleTag::Delete => "R4",
            RuleTag::Functionality => "R5",
            RuleTag::Totality => "R6",
            RuleTag::DiffReplace => "R7",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RuleTag::Define => "define",
            RuleTag::Unfold => "unfold",
            RuleTag::Fold => "fold",
            RuleTag::Delete => "delete",
            RuleTag::Functionality => "functionality",
            RuleTag::Totality => "totality",
            RuleTag::DiffReplace => "diff-replace",
        }
    }
}

impl fmt::Display for RuleTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.code(), self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Witness {
    Define {
        pred: Sym,
        level: u32,
    },
    Unfold {
        index: usize,
        atom: Atom,
        level: u32,
        /// `P0` clause behind each output, in output order.
        using: Vec<ClauseId>,
        fresh_start: u64,
    },
    Fold {
        definition: ClauseId,
        positions: Vec<usize>,
        subst: Substitution,
    },
    Delete,
    Functionality {
        first: Vec<usize>,
        second: Vec<usize>,
    },
    Totality {
        positions: Vec<usize>,
    },
    DiffReplace {
        definition: ClauseId,
        positions: Vec<usize>,
        renaming: BTreeMap<Sym, Sym>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub rule: RuleTag,
    pub inputs: Vec<ClauseId>,
    pub outputs: Vec<Clause>,
    pub witness: Witness,
    /// `|Defs_i|` when the step was applied; `Defs_i` is the prefix of the
    /// sequence's definitions of that length.
    pub defs_before: usize,
}

fn ids(xs: &[ClauseId]) -> String {
    let v: Vec<String> = xs.iter().map(|c| c.to_string()).collect();
    format!("[{}]", v.join(","))
}

fn positions(xs: &[usize]) -> String {
    let v: Vec<String> = xs.iter().map(|c| c.to_string()).collect();
    format!("[{}]", v.join(","))
}

impl Step {
    pub fn output_ids(&self) -> Vec<ClauseId> {
        self.outputs.iter().map(|c| c.id).collect()
    }

    fn summary(&self) -> String {
        match &self.witness {
            Witness::Define { pred, level } => format!("pred={pred} level={level}"),
            Witness::Unfold {
                index,
                atom,
                level,
                using,
                fresh_start,
            } => format!(
                "atom={index}:{} level={level} using={} fresh={fresh_start}",
                display::atom(atom),
                ids(using)
            ),
            Witness::Fold {
                definition,
                positions: p,
                subst,
            } => {
                let s: Vec<String> = subst
                    .iter()
                    .map(|(v, t)| format!("{v}->{}", display::term(t)))
                    .collect();
                format!(
                    "def={definition} at={} subst={{{}}}",
                    positions(p),
                    s.join(",")
                )
            }
            Witness::Delete => "unsat".to_string(),
            Witness::Functionality { first, second } => {
                format!("keep={} drop={}", positions(first), positions(second))
            }
            Witness::Totality { positions: p } => format!("drop={}", positions(p)),
            Witness::DiffReplace {
                definition,
                positions: p,
                renaming,
            } => {
                let s: Vec<String> = renaming.iter().map(|(a, b)| format!("{a}->{b}")).collect();
                format!(
                    "def={definition} at={} renaming={{{}}}",
                    positions(p),
                    s.join(",")
                )
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Trace {
    pub steps: Vec<Step>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn uses(&self, rule: RuleTag) -> bool {
        self.steps.iter().any(|s| s.rule == rule)
    }

    /// One line per step: index, rule, inputs, outputs, witness, and the
    /// derived clauses.
    pub fn to_log(&self) -> String {
        let mut out = String::new();
        for (i, s) in self.steps.iter().enumerate() {
            let clauses: Vec<String> = s
                .outputs
                .iter()
                .map(|c| format!("{}: {}", c.id, display::clause(c)))
                .collect();
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\n",
                i + 1,
                s.rule,
                ids(&s.inputs),
                ids(&s.output_ids()),
                s.summary(),
                clauses.join(" | ")
            ));
        }
        out
    }

    /// Re-applies every step to a fresh sequence over `p0`, checking that
    /// each one yields the recorded clauses.
    pub fn replay(&self, p0: &Program) -> Result<Sequence, ReplayError> {
        let mut seq = Sequence::new(p0).map_err(|e| ReplayError::Rule { step: 0, source: e })?;
        for (i, s) in self.steps.iter().enumerate() {
            let step = i + 1;
            let err = |e: RuleError| ReplayError::Rule { step, source: e };
            let input = |k: usize| s.inputs.get(k).copied().ok_or(ReplayError::Malformed(step));
            let got: Vec<ClauseId> = match &s.witness {
                Witness::Define { .. } => {
                    let d = s.outputs.first().ok_or(ReplayError::Malformed(step))?;
                    vec![seq.define(d.clone()).map_err(err)?]
                }
                Witness::Unfold {
                    index, fresh_start, ..
                } => {
                    seq.fresh().set_counter(*fresh_start);
                    seq.unfold(input(0)?, *index).map_err(err)?
                }
                Witness::Fold {
                    definition,
                    positions,
                    subst,
                } => vec![seq
                    .fold(input(0)?, *definition, positions, subst)
                    .map_err(err)?],
                Witness::Delete => {
                    seq.delete(input(0)?).map_err(err)?;
                    vec![]
                }
                Witness::Functionality { first, second } => {
                    vec![seq.functionality(input(0)?, first, second).map_err(err)?]
                }
                Witness::Totality { positions } => {
                    vec![seq.totality(input(0)?, positions).map_err(err)?]
                }
                Witness::DiffReplace {
                    definition,
                    positions,
                    renaming,
                } => vec![seq
                    .diff_replace(input(0)?, *definition, positions, renaming)
                    .map_err(err)?],
            };
            let same = got.len() == s.outputs.len()
                && got.iter().zip(&s.outputs).all(|(id, want)| {
                    let c = seq.clause(*id).expect("just derived");
                    c.id == want.id
                        && c.head == want.head
                        && c.body == want.body
                        && c.constraint == want.constraint
                });
            if !same {
                return Err(ReplayError::Diverged(step));
            }
        }
        Ok(seq)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplayError {
    #[error("step {step}: {source}")]
    Rule { step: usize, source: RuleError },
    #[error("step {0} derives different clauses on replay")]
    Diverged(usize),
    #[error("step {0} lacks the data needed to replay it")]
    Malformed(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Audit {
    Pass,
    Fail {
        definition: ClauseId,
        reason: String,
    },
}

impl Audit {
    pub fn passed(&self) -> bool {
        matches!(self, Audit::Pass)
    }
}

impl fmt::Display for Audit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Audit::Pass => f.write_str("pass"),
            Audit::Fail { definition, reason } => write!(f, "fail({definition}: {reason})"),
        }
    }
}

/// Every definition used for folding must be unfolded somewhere in the
/// sequence w.r.t. an atom at its head's level. An unfold of a clause that
/// descends from the definition through earlier unfolds counts as well.
pub fn audit_condition_u(trace: &Trace) -> Audit {
    let mut head_level: BTreeMap<ClauseId, u32> = BTreeMap::new();
    for s in &trace.steps {
        if let Witness::Define { level, .. } = &s.witness {
            for o in &s.outputs {
                head_level.insert(o.id, *level);
            }
        }
    }
    // origin definition of every clause derived from one by unfolding
    let mut origin: BTreeMap<ClauseId, ClauseId> = head_level.keys().map(|d| (*d, *d)).collect();
    let mut satisfied: BTreeSet<ClauseId> = BTreeSet::new();
    for s in &trace.steps {
        if let Witness::Unfold { level, .. } = &s.witness {
            if let Some(&d) = s.inputs.first().and_then(|i| origin.get(i)) {
                if head_level.get(&d) == Some(level) {
                    satisfied.insert(d);
                }
                for o in &s.outputs {
                    origin.insert(o.id, d);
                }
            }
        }
    }
    for s in &trace.steps {
        if let Witness::Fold { definition, .. } = &s.witness {
            if !head_level.contains_key(definition) {
                return Audit::Fail {
                    definition: *definition,
                    reason: "folded with a clause that is not a definition".into(),
                };
            }
            if !satisfied.contains(definition) {
                return Audit::Fail {
                    definition: *definition,
                    reason: "never unfolded w.r.t. an atom at its head level".into(),
                };
            }
        }
    }
    Audit::Pass
}
