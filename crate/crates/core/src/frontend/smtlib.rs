use std::collections::{BTreeMap, BTreeSet};

use super::{complete_modes, FrontendError, SourceProblem, Span};
use crate::clause::{Clause, ClauseId};
use crate::constraints::{Atomic, Constraint, Norm, RelOp};
use crate::program::{Constructor, DataType, PredSig, Program};
use crate::subst::unify_pairs;
use crate::term::{ArithOp, Atom, Sort, Sym, Term, Var};

#[derive(Clone, Debug, PartialEq)]
enum Sexp {
    Atom(String, usize),
    List(Vec<Sexp>, usize),
}

impl Sexp {
    fn line(&self) -> usize {
        match self {
            Sexp::Atom(_, l) | Sexp::List(_, l) => *l,
        }
    }

    fn sym(&self) -> Option<&str> {
        match self {
            Sexp::Atom(s, _) => Some(s),
            Sexp::List(..) => None,
        }
    }

    fn list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List(xs, _) => Some(xs),
            Sexp::Atom(..) => None,
        }
    }
}

impl std::fmt::Display for Sexp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Sexp::Atom(s, _) => f.write_str(s),
            Sexp::List(xs, _) => {
                f.write_str("(")?;
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{x}")?;
                }
                f.write_str(")")
            }
        }
    }
}

fn syntax(line: usize, col: usize, expected: &str, found: &str) -> FrontendError {
    FrontendError::Syntax {
        line,
        col,
        expected: expected.into(),
        found: found.into(),
    }
}

fn read_all(text: &str) -> Result<Vec<Sexp>, FrontendError> {
    let chars: Vec<char> = text.chars().collect();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    // open lists: (items, line, col)
    let mut stack: Vec<(Vec<Sexp>, usize, usize)> = Vec::new();
    let mut top = Vec::new();
    while i < chars.len() {
        let c = chars[i];
        match c {
            '\n' => {
                line += 1;
                col = 1;
                i += 1;
                continue;
            }
            ';' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            _ if c.is_whitespace() => {
                i += 1;
                col += 1;
                continue;
            }
            '(' => {
                stack.push((Vec::new(), line, col));
                i += 1;
                col += 1;
                continue;
            }
            ')' => {
                let (items, l, _) = stack
                    .pop()
                    .ok_or_else(|| syntax(line, col, "an s-expression", "`)`"))?;
                let e = Sexp::List(items, l);
                match stack.last_mut() {
                    Some(parent) => parent.0.push(e),
                    None => top.push(e),
                }
                i += 1;
                col += 1;
                continue;
            }
            _ => {}
        }
        let (sl, sc) = (line, col);
        let mut s = String::new();
        if c == '|' || c == '"' {
            i += 1;
            col += 1;
            loop {
                let Some(&d) = chars.get(i) else {
                    return Err(syntax(sl, sc, &format!("closing `{c}`"), "end of input"));
                };
                i += 1;
                if d == '\n' {
                    line += 1;
                    col = 1;
                } else {
                    col += 1;
                }
                if d == c {
                    break;
                }
                s.push(d);
            }
            if c == '"' {
                s = format!("\"{s}\"");
            }
        } else {
            while i < chars.len()
                && !chars[i].is_whitespace()
                && !matches!(chars[i], '(' | ')' | ';' | '|' | '"')
            {
                s.push(chars[i]);
                i += 1;
                col += 1;
            }
        }
        let e = Sexp::Atom(s, sl);
        match stack.last_mut() {
            Some(parent) => parent.0.push(e),
            None => top.push(e),
        }
    }
    if let Some((_, l, c)) = stack.last() {
        return Err(syntax(*l, *c, "`)` closing this list", "end of input"));
    }
    Ok(top)
}

fn unsupported(what: impl Into<String>) -> FrontendError {
    FrontendError::UnsupportedFeature(what.into())
}

fn is_numeral(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_digit())
}

struct Decls {
    datatypes: Vec<DataType>,
    ctors: BTreeMap<String, (Sym, Vec<Sort>)>,
    preds: BTreeMap<Sym, PredSig>,
}

impl Decls {
    fn sort(&self, e: &Sexp, pending: &BTreeSet<String>) -> Result<Sort, FrontendError> {
        match e.sym() {
            Some("Int") => Ok(Sort::Int),
            Some("Bool") => Ok(Sort::Bool),
            Some(s)
                if pending.contains(s) || self.datatypes.iter().any(|d| d.name.as_str() == s) =>
            {
                Ok(Sort::Adt(Sym::new(s)))
            }
            Some(s) => Err(unsupported(format!("sort `{s}`"))),
            None => Err(unsupported(format!("sort `{e}`"))),
        }
    }

    /// `(name)`, `name` or `(name (sel sort) ...)`.
    fn ctor(&self, e: &Sexp, pending: &BTreeSet<String>) -> Result<Constructor, FrontendError> {
        if let Some(s) = e.sym() {
            return Ok(Constructor {
                name: Sym::new(s),
                fields: vec![],
                selectors: vec![],
            });
        }
        let xs = e.list().unwrap_or_default();
        let name = xs
            .first()
            .and_then(Sexp::sym)
            .ok_or_else(|| unsupported(format!("constructor `{e}`")))?;
        let mut fields = Vec::new();
        let mut selectors = Vec::new();
        for f in &xs[1..] {
            match f.list() {
                Some([sel, sort]) if sel.sym().is_some() => {
                    selectors.push(Sym::new(sel.sym().unwrap_or_default()));
                    fields.push(self.sort(sort, pending)?);
                }
                _ => return Err(unsupported(format!("constructor field `{f}`"))),
            }
        }
        Ok(Constructor {
            name: Sym::new(name),
            fields,
            selectors,
        })
    }

    fn add_datatypes(
        &mut self,
        names: Vec<String>,
        bodies: Vec<&[Sexp]>,
    ) -> Result<(), FrontendError> {
        let pending: BTreeSet<String> = names.iter().cloned().collect();
        for (name, ctors) in names.into_iter().zip(bodies) {
            if ctors.first().and_then(Sexp::sym) == Some("par") {
                return Err(unsupported(format!("parameterized datatype `{name}`")));
            }
            let cs = ctors
                .iter()
                .map(|c| self.ctor(c, &pending))
                .collect::<Result<Vec<_>, _>>()?;
            for c in &cs {
                self.ctors
                    .insert(c.name.to_string(), (Sym::new(&name), c.fields.clone()));
            }
            self.datatypes.push(DataType {
                name: Sym::new(&name),
                ctors: cs,
            });
        }
        Ok(())
    }

    fn declare_datatypes(&mut self, args: &[Sexp]) -> Result<(), FrontendError> {
        let [heads, bodies] = args else {
            return Err(unsupported("malformed declare-datatypes"));
        };
        let heads = heads
            .list()
            .ok_or_else(|| unsupported("malformed declare-datatypes"))?;
        let bodies = bodies
            .list()
            .ok_or_else(|| unsupported("malformed declare-datatypes"))?;
        if heads.is_empty() {
            // legacy form: (declare-datatypes () ((name ctor ...) ...))
            let mut names = Vec::new();
            let mut ctors = Vec::new();
            for b in bodies {
                let xs = b
                    .list()
                    .ok_or_else(|| unsupported(format!("datatype `{b}`")))?;
                let name = xs
                    .first()
                    .and_then(Sexp::sym)
                    .ok_or_else(|| unsupported(format!("datatype `{b}`")))?;
                names.push(name.to_string());
                ctors.push(&xs[1..]);
            }
            return self.add_datatypes(names, ctors);
        }
        if heads.len() != bodies.len() {
            return Err(unsupported("declare-datatypes arity mismatch"));
        }
        let mut names = Vec::new();
        for h in heads {
            match h.list() {
                Some([n, k]) if n.sym().is_some() => {
                    if k.sym() != Some("0") {
                        return Err(unsupported(format!("parameterized datatype `{n}`")));
                    }
                    names.push(n.sym().unwrap_or_default().to_string());
                }
                _ => return Err(unsupported(format!("datatype head `{h}`"))),
            }
        }
        let ctors = bodies
            .iter()
            .map(|b| {
                b.list()
                    .ok_or_else(|| unsupported(format!("datatype body `{b}`")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        self.add_datatypes(names, ctors)
    }
}

/// Collects one assertion as `body → head` by polarity.
struct Conv<'a> {
    decls: &'a Decls,
    scopes: Vec<BTreeMap<String, Var>>,
    taken: BTreeSet<String>,
    heads: Vec<Atom>,
    body: Vec<Atom>,
    constraint: Constraint,
    adt_eqs: Vec<(Term, Term)>,
    /// The assertion holds vacuously (a `true` disjunct or a `false` conjunct).
    vacuous: bool,
    line: usize,
}

fn sanitize(name: &str) -> String {
    let mut s: String = name
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect();
    if s.is_empty() || s.starts_with(|c: char| c.is_ascii_digit()) {
        s.insert(0, 'v');
    }
    s
}

impl Conv<'_> {
    fn lookup(&self, name: &str) -> Option<&Var> {
        self.scopes.iter().rev().find_map(|s| s.get(name))
    }

    fn bind(&mut self, bindings: &Sexp) -> Result<(), FrontendError> {
        let xs = bindings
            .list()
            .ok_or_else(|| unsupported(format!("binder `{bindings}`")))?;
        let mut scope = BTreeMap::new();
        for b in xs {
            let Some([n, s]) = b.list() else {
                return Err(unsupported(format!("binding `{b}`")));
            };
            let n = n
                .sym()
                .ok_or_else(|| unsupported(format!("binding `{b}`")))?;
            let sort = self.decls.sort(s, &BTreeSet::new())?;
            let mut name = sanitize(n);
            let base = name.clone();
            let mut k = 1;
            while !self.taken.insert(name.clone()) {
                k += 1;
                name = format!("{base}{k}");
            }
            scope.insert(n.to_string(), Var::new(name.as_str(), sort));
        }
        self.scopes.push(scope);
        Ok(())
    }

    fn term(&self, e: &Sexp) -> Result<Term, FrontendError> {
        match e {
            Sexp::Atom(s, _) => {
                if is_numeral(s) {
                    return s
                        .parse::<i64>()
                        .map(Term::Int)
                        .map_err(|_| unsupported(format!("numeral `{s}` out of range")));
                }
                match s.as_str() {
                    "true" => return Ok(Term::Bool(true)),
                    "false" => return Ok(Term::Bool(false)),
                    _ => {}
                }
                if let Some(v) = self.lookup(s) {
                    return Ok(Term::Var(v.clone()));
                }
                if let Some((dt, fields)) = self.decls.ctors.get(s) {
                    if fields.is_empty() {
                        return Ok(Term::Ctor {
                            name: Sym::new(s),
                            sort: dt.clone(),
                            args: vec![],
                        });
                    }
                }
                Err(FrontendError::Undeclared(s.clone()))
            }
            Sexp::List(xs, _) => {
                let Some((f, args)) = xs.split_first() else {
                    return Err(unsupported("empty application"));
                };
                let Some(f) = f.sym() else {
                    return Err(unsupported(format!("term `{e}`")));
                };
                let ts = args
                    .iter()
                    .map(|a| self.term(a))
                    .collect::<Result<Vec<_>, _>>()?;
                match f {
                    "+" => Ok(Term::Arith(ArithOp::Add, ts)),
                    "*" => Ok(Term::Arith(ArithOp::Mul, ts)),
                    "-" if ts.len() == 1 => Ok(match &ts[0] {
                        Term::Int(k) => Term::Int(-k),
                        t => Term::Arith(ArithOp::Neg, vec![t.clone()]),
                    }),
                    "-" => Ok(Term::Arith(ArithOp::Sub, ts)),
                    _ => match self.decls.ctors.get(f) {
                        Some((dt, fields)) if fields.len() == ts.len() => Ok(Term::Ctor {
                            name: Sym::new(f),
                            sort: dt.clone(),
                            args: ts,
                        }),
                        _ => Err(unsupported(format!("function `{f}`"))),
                    },
                }
            }
        }
    }

    fn atomic(&mut self, n: Norm, positive: bool) {
        match (n, positive) {
            (Norm::True, true) | (Norm::False, false) => self.vacuous = true,
            (Norm::True, false) | (Norm::False, true) => {}
            (Norm::Atom(a), false) => self.constraint.push(a),
            (Norm::Atom(a), true) => self.constraint.push(a.negate()),
        }
    }

    fn relation(
        &mut self,
        op: RelOp,
        l: &Term,
        r: &Term,
        positive: bool,
    ) -> Result<(), FrontendError> {
        if l.sort() != r.sort() {
            return Err(FrontendError::Type {
                clause: 0,
                line: self.line,
                conflict: format!("`{}` relates {} and {}", op.symbol(), l.sort(), r.sort()),
            });
        }
        if !l.sort().is_basic() {
            if op == RelOp::Eq && !positive {
                self.adt_eqs.push((l.clone(), r.clone()));
                return Ok(());
            }
            return Err(unsupported("disequality between data terms"));
        }
        let n = Atomic::relation(l, op, r).map_err(|source| FrontendError::Constraint {
            line: self.line,
            source,
        })?;
        self.atomic(n, positive);
        Ok(())
    }

    fn formula(&mut self, e: &Sexp, positive: bool) -> Result<(), FrontendError> {
        if let Sexp::Atom(s, _) = e {
            match s.as_str() {
                "true" => {
                    self.atomic(Norm::True, positive);
                    return Ok(());
                }
                "false" => {
                    self.atomic(Norm::False, positive);
                    return Ok(());
                }
                _ => {}
            }
            if let Some(v) = self.lookup(s).cloned() {
                if v.sort != Sort::Bool {
                    return Err(unsupported(format!("non-boolean `{s}` used as a formula")));
                }
                self.atomic(Norm::Atom(Atomic::BoolLit(v.name, true)), positive);
                return Ok(());
            }
            let p = Sym::new(s);
            if self.decls.preds.contains_key(&p) {
                return self.pred_atom(
                    Atom {
                        pred: p,
                        args: vec![],
                    },
                    positive,
                );
            }
            return Err(FrontendError::Undeclared(s.clone()));
        }
        let xs = e.list().unwrap_or_default();
        let Some((head, args)) = xs.split_first() else {
            return Err(unsupported("empty formula"));
        };
        let Some(f) = head.sym() else {
            return Err(unsupported(format!("formula `{e}`")));
        };
        match f {
            "and" | "or" => {
                let conj = f == "and";
                // a conjunction in the head or a disjunction in the body
                if conj == positive && args.len() > 1 {
                    return Err(FrontendError::NonHornAssertion(format!(
                        "line {}: `{f}` with {} operands",
                        e.line(),
                        args.len()
                    )));
                }
                for a in args {
                    self.formula(a, positive)?;
                }
                Ok(())
            }
            "not" => match args {
                [a] => self.formula(a, !positive),
                _ => Err(unsupported("`not` arity")),
            },
            "=>" => {
                if !positive {
                    return Err(FrontendError::NonHornAssertion(format!(
                        "line {}: implication in a body",
                        e.line()
                    )));
                }
                let Some((last, prems)) = args.split_last() else {
                    return Err(unsupported("`=>` arity"));
                };
                for p in prems {
                    self.formula(p, false)?;
                }
                self.formula(last, true)
            }
            "forall" | "exists" => {
                let [bindings, body] = args else {
                    return Err(unsupported(format!("`{f}` arity")));
                };
                // universal in the head, existential in the body
                if (f == "forall") != positive {
                    return Err(unsupported(format!("`{f}` under negation")));
                }
                self.bind(bindings)?;
                let r = self.formula(body, positive);
                self.scopes.pop();
                r
            }
            "!" => match args.first() {
                Some(a) => self.formula(a, positive),
                None => Err(unsupported("empty annotation")),
            },
            "=" | "distinct" | "<" | "<=" | ">" | ">=" => {
                let ts = args
                    .iter()
                    .map(|a| self.term(a))
                    .collect::<Result<Vec<_>, _>>()?;
                if ts.len() < 2 {
                    return Err(unsupported(format!("`{f}` arity")));
                }
                if f == "distinct" {
                    if positive && ts.len() > 2 {
                        return Err(FrontendError::NonHornAssertion(format!(
                            "line {}: `distinct` in a head",
                            e.line()
                        )));
                    }
                    for i in 0..ts.len() {
                        for j in i + 1..ts.len() {
                            self.relation(RelOp::Ne, &ts[i], &ts[j], positive)?;
                        }
                    }
                    return Ok(());
                }
                let op = match f {
                    "=" => RelOp::Eq,
                    "<" => RelOp::Lt,
                    "<=" => RelOp::Le,
                    ">" => RelOp::Gt,
                    _ => RelOp::Ge,
                };
                if positive && ts.len() > 2 {
                    return Err(FrontendError::NonHornAssertion(format!(
                        "line {}: chained `{f}` in a head",
                        e.line()
                    )));
                }
                for w in ts.windows(2) {
                    self.relation(op, &w[0], &w[1], positive)?;
                }
                Ok(())
            }
            _ => {
                let p = Sym::new(f);
                if !self.decls.preds.contains_key(&p) {
                    return Err(unsupported(format!("`{f}` in a formula")));
                }
                let ts = args
                    .iter()
                    .map(|a| self.term(a))
                    .collect::<Result<Vec<_>, _>>()?;
                self.pred_atom(Atom { pred: p, args: ts }, positive)
            }
        }
    }

    fn pred_atom(&mut self, a: Atom, positive: bool) -> Result<(), FrontendError> {
        if positive {
            self.heads.push(a);
            if self.heads.len() > 1 {
                return Err(FrontendError::NonHornAssertion(format!(
                    "line {}: more than one positive atom",
                    self.line
                )));
            }
        } else {
            self.body.push(a);
        }
        Ok(())
    }
}

pub fn parse_smtlib(text: &str) -> Result<SourceProblem, FrontendError> {
    let cmds = read_all(text)?;
    let mut decls = Decls {
        datatypes: Vec::new(),
        ctors: BTreeMap::new(),
        preds: BTreeMap::new(),
    };
    let mut clauses = Vec::new();
    let mut spans = BTreeMap::new();
    for cmd in &cmds {
        let Some(xs) = cmd.list() else {
            return Err(syntax(cmd.line(), 1, "a command", &cmd.to_string()));
        };
        let Some((name, args)) = xs.split_first() else {
            return Err(syntax(cmd.line(), 1, "a command", "`()`"));
        };
        match name.sym().unwrap_or_default() {
            "set-logic" | "set-info" | "set-option" | "check-sat" | "exit" | "get-model"
            | "get-info" => {}
            "declare-datatypes" => decls.declare_datatypes(args)?,
            "declare-datatype" => match args {
                [n, body] if n.sym().is_some() => {
                    let body = body
                        .list()
                        .ok_or_else(|| unsupported(format!("datatype `{n}`")))?;
                    decls
                        .add_datatypes(vec![n.sym().unwrap_or_default().to_string()], vec![body])?
                }
                _ => return Err(unsupported("malformed declare-datatype")),
            },
            "declare-fun" => {
                let [n, params, ret] = args else {
                    return Err(unsupported("malformed declare-fun"));
                };
                let n = n
                    .sym()
                    .ok_or_else(|| unsupported("malformed declare-fun"))?;
                if ret.sym() != Some("Bool") {
                    return Err(unsupported(format!("uninterpreted function `{n}`")));
                }
                let ps = params
                    .list()
                    .ok_or_else(|| unsupported("malformed declare-fun"))?;
                let sorts = ps
                    .iter()
                    .map(|s| decls.sort(s, &BTreeSet::new()))
                    .collect::<Result<Vec<_>, _>>()?;
                decls.preds.insert(
                    Sym::new(n),
                    PredSig {
                        name: Sym::new(n),
                        args: sorts,
                    },
                );
            }
            "assert" => {
                let [f] = args else {
                    return Err(unsupported("malformed assert"));
                };
                let mut conv = Conv {
                    decls: &decls,
                    scopes: Vec::new(),
                    taken: BTreeSet::new(),
                    heads: Vec::new(),
                    body: Vec::new(),
                    constraint: Constraint::top(),
                    adt_eqs: Vec::new(),
                    vacuous: false,
                    line: cmd.line(),
                };
                conv.formula(f, true)?;
                if conv.vacuous {
                    continue;
                }
                let id = ClauseId(clauses.len() as u32 + 1);
                let mut clause =
                    Clause::new(conv.heads.pop(), conv.constraint, conv.body).with_id(id);
                if !conv.adt_eqs.is_empty() {
                    match unify_pairs(conv.adt_eqs) {
                        None => continue,
                        Some(u) => {
                            let line = cmd.line();
                            for (x, y) in &u.equations {
                                clause
                                    .constraint
                                    .relate(x, RelOp::Eq, y)
                                    .map_err(|source| FrontendError::Constraint { line, source })?;
                            }
                            clause = u
                                .subst
                                .clause(&clause)
                                .map_err(|source| FrontendError::Constraint { line, source })?;
                        }
                    }
                }
                spans.insert(
                    id,
                    Span {
                        start: cmd.line(),
                        end: cmd.line(),
                    },
                );
                clauses.push(clause);
            }
            other => return Err(unsupported(format!("command `{other}`"))),
        }
    }
    let mut program = Program {
        datatypes: decls.datatypes,
        preds: decls.preds,
        clauses,
        ..Program::default()
    };
    complete_modes(&mut program);
    program.compute_levels();
    program.check()?;
    Ok(SourceProblem {
        program,
        explicit_modes: Vec::new(),
        spans,
        warnings: Vec::new(),
    })
}
