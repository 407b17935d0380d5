//! Reading and writing problems: a Prolog-like surface syntax and an
//! SMT-LIB subset with datatype declarations.

mod emit;
mod prolog;
mod smtlib;

use std::collections::BTreeMap;
use std::path::Path;

use thiserror::Error;

use crate::clause::ClauseId;
use crate::constraints::ConstraintError;
use crate::program::{ModeSignature, Modes, Program, ProgramError};
use crate::term::{Sym, Term};

pub use emit::{emit_prolog, emit_smtlib};
pub use prolog::{parse_prolog, parse_prolog_with};
pub use smtlib::parse_smtlib;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrontendError {
    #[error("line {line}, column {col}: expected {expected}, found {found}")]
    Syntax {
        line: usize,
        col: usize,
        expected: String,
        found: String,
    },
    #[error("clause {clause} (line {line}): {conflict}")]
    Type {
        clause: usize,
        line: usize,
        conflict: String,
    },
    #[error("no mode annotation for `{0}`")]
    MissingMode(Sym),
    #[error("unsupported construct: {0}")]
    UnsupportedFeature(String),
    #[error("assertion is not a Horn clause: {0}")]
    NonHornAssertion(String),
    #[error("undeclared symbol `{0}`")]
    Undeclared(String),
    #[error("line {line}: {source}")]
    Constraint {
        line: usize,
        source: ConstraintError,
    },
    #[error(transparent)]
    Program(#[from] ProgramError),
}

/// Source lines covered by a clause (1-based, inclusive).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModeWarning {
    pub clause: ClauseId,
    pub pred: Sym,
    pub position: usize,
}

impl std::fmt::Display for ModeWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}: output argument {} of `{}` is not a variable; the mode directive is kept",
            self.clause,
            self.position + 1,
            self.pred
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceProblem {
    pub program: Program,
    /// Predicates whose modes came from a directive.
    pub explicit_modes: Vec<Sym>,
    pub spans: BTreeMap<ClauseId, Span>,
    pub warnings: Vec<ModeWarning>,
}

impl SourceProblem {
    pub fn line_of(&self, id: ClauseId) -> Option<usize> {
        self.spans.get(&id).map(|s| s.start)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Prolog,
    Smtlib,
}

impl Format {
    /// By extension, falling back to a look at the first token.
    pub fn detect(path: Option<&Path>, text: &str) -> Format {
        match path.and_then(|p| p.extension()).and_then(|e| e.to_str()) {
            Some("smt2") | Some("smt") => return Format::Smtlib,
            Some("pl") | Some("chc") => return Format::Prolog,
            _ => {}
        }
        let first = text
            .lines()
            .map(str::trim)
            .find(|l| !l.is_empty() && !l.starts_with(';') && !l.starts_with('%'));
        match first {
            Some(l) if l.starts_with('(') => Format::Smtlib,
            _ => Format::Prolog,
        }
    }
}

pub fn parse(text: &str, format: Format) -> Result<SourceProblem, FrontendError> {
    match format {
        Format::Prolog => parse_prolog(text),
        Format::Smtlib => parse_smtlib(text),
    }
}

/// Modes for every declared predicate: the program's own modes where
/// present, otherwise the last argument is the output.
pub fn derive_modes(program: &Program) -> Vec<ModeSignature> {
    program
        .preds
        .values()
        .map(|sig| {
            program
                .modes
                .get(&sig.name)
                .cloned()
                .unwrap_or_else(|| ModeSignature::last_output(sig.name.clone(), sig.args.len()))
        })
        .collect()
}

/// Body atoms whose output positions hold something other than a variable.
pub fn mode_conflicts(program: &Program, explicit: &[Sym]) -> Vec<ModeWarning> {
    let mut out = Vec::new();
    for c in &program.clauses {
        for a in &c.body {
            if !explicit.contains(&a.pred) {
                continue;
            }
            let Some(m) = program.modes.get(&a.pred) else {
                continue;
            };
            for &p in &m.outputs {
                if !matches!(a.args.get(p), Some(Term::Var(_))) {
                    out.push(ModeWarning {
                        clause: c.id,
                        pred: a.pred.clone(),
                        position: p,
                    });
                }
            }
        }
    }
    out
}

/// Fills in modes for the predicates that have none.
pub(crate) fn complete_modes(program: &mut Program) {
    let modes: Modes = derive_modes(program)
        .into_iter()
        .map(|m| (m.pred.clone(), m))
        .collect();
    program.modes = modes;
}

/// Errors with `MissingMode` for the first predicate lacking a mode.
pub fn require_modes(program: &Program) -> Result<(), FrontendError> {
    match program
        .preds
        .keys()
        .find(|p| !program.modes.contains_key(*p))
    {
        Some(p) => Err(FrontendError::MissingMode(p.clone())),
        None => Ok(()),
    }
}
