use std::collections::BTreeMap;

use super::{complete_modes, mode_conflicts, FrontendError, SourceProblem, Span};
use crate::clause::{Clause, ClauseId};
use crate::constraints::{Constraint, RelOp};
use crate::program::{
    Constructor, DataType, ModeSignature, PredSig, Program, CONS, LIST_SORT, NIL,
};
use crate::subst::unify_pairs;
use crate::term::{ArithOp, Atom, Sort, Sym, Term, Var};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Var(String),
    Ident(String),
    Int(i64),
    Punct(&'static str),
    Eof,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

// longest first
const PUNCT: [&str; 19] = [
    "=\\=", "=:=", ":-", "\\=", "=<", ">=", "=", "<", ">", "+", "-", "*", "(", ")", "[", "]", "|",
    ",", ".",
];

fn syntax(line: usize, col: usize, expected: &str, found: &str) -> FrontendError {
    FrontendError::Syntax {
        line,
        col,
        expected: expected.to_string(),
        found: found.to_string(),
    }
}

fn lex(text: &str) -> Result<Vec<Token>, FrontendError> {
    let chars: Vec<char> = text.chars().collect();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let mut out = Vec::new();
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '%' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'*') {
            let (sl, sc) = (line, col);
            i += 2;
            col += 2;
            loop {
                if i >= chars.len() {
                    return Err(syntax(sl, sc, "`*/`", "end of input"));
                }
                if chars[i] == '*' && chars.get(i + 1) == Some(&'/') {
                    i += 2;
                    col += 2;
                    break;
                }
                if chars[i] == '\n' {
                    line += 1;
                    col = 1;
                } else {
                    col += 1;
                }
                i += 1;
            }
            continue;
        }
        let start = i;
        let tok = if c.is_ascii_digit() {
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            let k = s
                .parse::<i64>()
                .map_err(|_| syntax(line, col, "an integer that fits in 64 bits", &s))?;
            Tok::Int(k)
        } else if c.is_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            if c.is_uppercase() || c == '_' {
                Tok::Var(s)
            } else {
                Tok::Ident(s)
            }
        } else if let Some(p) = PUNCT.iter().find(|p| {
            p.chars()
                .enumerate()
                .all(|(k, pc)| chars.get(i + k) == Some(&pc))
        }) {
            i += p.len();
            Tok::Punct(p)
        } else {
            return Err(syntax(line, col, "a token", &format!("`{c}`")));
        };
        out.push(Token { tok, line, col });
        col += i - start;
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Var(s) | Tok::Ident(s) => format!("`{s}`"),
        Tok::Int(k) => format!("`{k}`"),
        Tok::Punct(p) => format!("`{p}`"),
        Tok::Eof => "end of input".to_string(),
    }
}

#[derive(Clone, Debug)]
enum Raw {
    Var(String),
    Int(i64),
    App(String, Vec<Raw>),
    Arith(ArithOp, Vec<Raw>),
}

#[derive(Clone, Debug)]
enum Lit {
    Atom(String, Vec<Raw>),
    Rel(Raw, RelOp, Raw),
    True,
    False,
}

struct RawClause {
    head: Option<(String, Vec<Raw>)>,
    body: Vec<Lit>,
    span: Span,
}

enum Item {
    Clause(RawClause),
    Mode {
        pred: String,
        outputs: Vec<bool>,
    },
    Datatype {
        name: String,
        ctors: Vec<(String, Vec<String>)>,
    },
    Pred {
        name: String,
        sorts: Vec<String>,
        line: usize,
    },
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    anon: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn is(&self, p: &str) -> bool {
        matches!(&self.peek().tok, Tok::Punct(q) if *q == p)
    }

    fn err(&self, expected: &str) -> FrontendError {
        let t = self.peek();
        syntax(t.line, t.col, expected, &describe(&t.tok))
    }

    fn expect(&mut self, p: &str) -> Result<(), FrontendError> {
        if self.is(p) {
            self.bump();
            Ok(())
        } else {
            Err(self.err(&format!("`{p}`")))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, FrontendError> {
        match &self.peek().tok {
            Tok::Ident(s) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => Err(self.err(what)),
        }
    }

    fn items(&mut self) -> Result<Vec<Item>, FrontendError> {
        let mut out = Vec::new();
        while self.peek().tok != Tok::Eof {
            if self.is(":-") {
                self.bump();
                out.push(self.directive()?);
            } else {
                out.push(Item::Clause(self.clause()?));
            }
        }
        Ok(out)
    }

    fn directive(&mut self) -> Result<Item, FrontendError> {
        let line = self.peek().line;
        let kind = self.ident("`mode`, `datatype` or `pred`")?;
        let item = match kind.as_str() {
            "mode" => {
                let pred = self.ident("a predicate name")?;
                let mut outputs = Vec::new();
                if self.is("(") {
                    self.bump();
                    loop {
                        if self.is("+") {
                            outputs.push(false);
                        } else if self.is("-") {
                            outputs.push(true);
                        } else {
                            return Err(self.err("`+` or `-`"));
                        }
                        self.bump();
                        if self.is(",") {
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    self.expect(")")?;
                }
                Item::Mode { pred, outputs }
            }
            "datatype" => {
                let name = self.ident("a datatype name")?;
                if self.is("(") {
                    return Err(FrontendError::UnsupportedFeature(format!(
                        "parameterized datatype `{name}`"
                    )));
                }
                self.expect("=")?;
                let mut ctors = Vec::new();
                loop {
                    let c = self.ident("a constructor name")?;
                    let fields = if self.is("(") {
                        self.sort_list()?
                    } else {
                        Vec::new()
                    };
                    ctors.push((c, fields));
                    if self.is("|") {
                        self.bump();
                    } else {
                        break;
                    }
                }
                Item::Datatype { name, ctors }
            }
            "pred" => {
                let name = self.ident("a predicate name")?;
                let sorts = if self.is("(") {
                    self.sort_list()?
                } else {
                    Vec::new()
                };
                Item::Pred { name, sorts, line }
            }
            _ => {
                return Err(FrontendError::UnsupportedFeature(format!(
                    "directive `{kind}`"
                )))
            }
        };
        self.expect(".")?;
        Ok(item)
    }

    fn sort_list(&mut self) -> Result<Vec<String>, FrontendError> {
        self.expect("(")?;
        let mut out = Vec::new();
        loop {
            if let Tok::Var(v) = &self.peek().tok {
                return Err(FrontendError::UnsupportedFeature(format!(
                    "type variable `{v}`"
                )));
            }
            out.push(self.ident("a sort name")?);
            if self.is(",") {
                self.bump();
            } else {
                break;
            }
        }
        self.expect(")")?;
        Ok(out)
    }

    fn clause(&mut self) -> Result<RawClause, FrontendError> {
        let start = self.peek().line;
        let name = self.ident("a clause head")?;
        let head = if name == "false" && !self.is("(") {
            None
        } else if self.is("(") {
            Some((name, self.args()?))
        } else {
            Some((name, Vec::new()))
        };
        let mut body = Vec::new();
        if self.is(":-") {
            self.bump();
            loop {
                body.push(self.literal()?);
                if self.is(",") {
                    self.bump();
                } else {
                    break;
                }
            }
        } else if !self.is(".") {
            return Err(self.err("`:-` or `.`"));
        }
        let end = self.peek().line;
        self.expect(".")?;
        Ok(RawClause {
            head,
            body,
            span: Span { start, end },
        })
    }

    fn args(&mut self) -> Result<Vec<Raw>, FrontendError> {
        self.expect("(")?;
        let mut out = vec![self.expr()?];
        while self.is(",") {
            self.bump();
            out.push(self.expr()?);
        }
        self.expect(")")?;
        Ok(out)
    }

    fn relop(&self) -> Option<RelOp> {
        let Tok::Punct(p) = &self.peek().tok else {
            return None;
        };
        Some(match *p {
            "=" | "=:=" => RelOp::Eq,
            "\\=" | "=\\=" => RelOp::Ne,
            "<" => RelOp::Lt,
            "=<" => RelOp::Le,
            ">" => RelOp::Gt,
            ">=" => RelOp::Ge,
            _ => return None,
        })
    }

    fn literal(&mut self) -> Result<Lit, FrontendError> {
        let at = self.peek().clone();
        let lhs = self.expr()?;
        if let Some(op) = self.relop() {
            self.bump();
            let rhs = self.expr()?;
            return Ok(Lit::Rel(lhs, op, rhs));
        }
        match lhs {
            Raw::App(name, args) if args.is_empty() && name == "true" => Ok(Lit::True),
            Raw::App(name, args) if args.is_empty() && name == "false" => Ok(Lit::False),
            Raw::App(name, args)
                if !matches!(name.as_str(), NIL | CONS) || at.tok != Tok::Punct("[") =>
            {
                Ok(Lit::Atom(name, args))
            }
            _ => Err(syntax(
                at.line,
                at.col,
                "a predicate atom or a constraint",
                &describe(&at.tok),
            )),
        }
    }

    fn expr(&mut self) -> Result<Raw, FrontendError> {
        let mut t = self.product()?;
        loop {
            let op = if self.is("+") {
                ArithOp::Add
            } else if self.is("-") {
                ArithOp::Sub
            } else {
                return Ok(t);
            };
            self.bump();
            let r = self.product()?;
            t = Raw::Arith(op, vec![t, r]);
        }
    }

    fn product(&mut self) -> Result<Raw, FrontendError> {
        let mut t = self.unary()?;
        while self.is("*") {
            self.bump();
            let r = self.unary()?;
            t = Raw::Arith(ArithOp::Mul, vec![t, r]);
        }
        Ok(t)
    }

    fn unary(&mut self) -> Result<Raw, FrontendError> {
        if self.is("-") {
            self.bump();
            return Ok(match self.unary()? {
                Raw::Int(k) => Raw::Int(-k),
                other => Raw::Arith(ArithOp::Neg, vec![other]),
            });
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Raw, FrontendError> {
        let t = self.peek().clone();
        match t.tok {
            Tok::Var(v) => {
                self.bump();
                if v == "_" {
                    self.anon += 1;
                    Ok(Raw::Var(format!("_{}", self.anon)))
                } else {
                    Ok(Raw::Var(v))
                }
            }
            Tok::Int(k) => {
                self.bump();
                Ok(Raw::Int(k))
            }
            Tok::Ident(name) => {
                self.bump();
                let args = if self.is("(") {
                    self.args()?
                } else {
                    Vec::new()
                };
                Ok(Raw::App(name, args))
            }
            Tok::Punct("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect(")")?;
                Ok(e)
            }
            Tok::Punct("[") => {
                self.bump();
                self.list()
            }
            _ => Err(self.err("a term")),
        }
    }

    fn list(&mut self) -> Result<Raw, FrontendError> {
        if self.is("]") {
            self.bump();
            return Ok(Raw::App(NIL.into(), vec![]));
        }
        let mut elems = vec![self.expr()?];
        while self.is(",") {
            self.bump();
            elems.push(self.expr()?);
        }
        let tail = if self.is("|") {
            self.bump();
            self.expr()?
        } else {
            Raw::App(NIL.into(), vec![])
        };
        self.expect("]")?;
        Ok(elems
            .into_iter()
            .rev()
            .fold(tail, |acc, e| Raw::App(CONS.into(), vec![e, acc])))
    }
}

/// Union-find over sort variables.
#[derive(Default)]
struct Typer {
    parent: Vec<usize>,
    sort: Vec<Option<Sort>>,
}

impl Typer {
    fn node(&mut self, s: Option<Sort>) -> usize {
        self.parent.push(self.parent.len());
        self.sort.push(s);
        self.parent.len() - 1
    }

    fn find(&mut self, x: usize) -> usize {
        let p = self.parent[x];
        if p == x {
            return x;
        }
        let r = self.find(p);
        self.parent[x] = r;
        r
    }

    fn unify(&mut self, a: usize, b: usize) -> Result<(), (Sort, Sort)> {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return Ok(());
        }
        match (self.sort[ra].clone(), self.sort[rb].clone()) {
            (Some(x), Some(y)) if x != y => return Err((x, y)),
            (None, s) => self.sort[ra] = s,
            _ => {}
        }
        self.parent[rb] = ra;
        Ok(())
    }

    fn resolved(&mut self, x: usize) -> Sort {
        let r = self.find(x);
        self.sort[r].clone().unwrap_or(Sort::Int)
    }
}

struct Ctx {
    ctors: BTreeMap<String, (Sym, Vec<Sort>)>,
    preds: BTreeMap<String, Vec<usize>>,
    typer: Typer,
}

impl Ctx {
    fn is_bool_const(&self, name: &str, args: &[Raw]) -> bool {
        args.is_empty() && (name == "true" || name == "false") && !self.ctors.contains_key(name)
    }

    fn infer(&mut self, r: &Raw, vars: &mut BTreeMap<String, usize>) -> Result<usize, String> {
        match r {
            Raw::Var(v) => {
                if let Some(n) = vars.get(v) {
                    return Ok(*n);
                }
                let n = self.typer.node(None);
                vars.insert(v.clone(), n);
                Ok(n)
            }
            Raw::Int(_) => Ok(self.typer.node(Some(Sort::Int))),
            Raw::App(name, args) if self.is_bool_const(name, args) => {
                Ok(self.typer.node(Some(Sort::Bool)))
            }
            Raw::App(name, args) => {
                let (dt, fields) = self
                    .ctors
                    .get(name)
                    .cloned()
                    .ok_or_else(|| format!("unknown constructor `{name}`"))?;
                if fields.len() != args.len() {
                    return Err(format!(
                        "constructor `{name}` takes {} arguments, got {}",
                        fields.len(),
                        args.len()
                    ));
                }
                for (i, (a, s)) in args.iter().zip(fields).enumerate() {
                    let n = self.infer(a, vars)?;
                    let want = self.typer.node(Some(s));
                    self.typer
                        .unify(n, want)
                        .map_err(|(x, y)| format!("argument {} of `{name}`: {x} vs {y}", i + 1))?;
                }
                Ok(self.typer.node(Some(Sort::Adt(dt))))
            }
            Raw::Arith(_, args) => {
                for a in args {
                    let n = self.infer(a, vars)?;
                    let int = self.typer.node(Some(Sort::Int));
                    self.typer
                        .unify(n, int)
                        .map_err(|(x, _)| format!("{x} term in arithmetic"))?;
                }
                Ok(self.typer.node(Some(Sort::Int)))
            }
        }
    }

    fn pred_nodes(&mut self, pred: &str, arity: usize) -> Result<Vec<usize>, String> {
        if let Some(ns) = self.preds.get(pred) {
            if ns.len() != arity {
                return Err(format!(
                    "`{pred}` used with {arity} arguments, elsewhere with {}",
                    ns.len()
                ));
            }
            return Ok(ns.clone());
        }
        let ns: Vec<usize> = (0..arity).map(|_| self.typer.node(None)).collect();
        self.preds.insert(pred.to_string(), ns.clone());
        Ok(ns)
    }

    fn infer_atom(
        &mut self,
        pred: &str,
        args: &[Raw],
        vars: &mut BTreeMap<String, usize>,
    ) -> Result<(), String> {
        let ns = self.pred_nodes(pred, args.len())?;
        for (i, (a, n)) in args.iter().zip(ns).enumerate() {
            let m = self.infer(a, vars)?;
            self.typer
                .unify(m, n)
                .map_err(|(x, y)| format!("argument {} of `{pred}`: {x} vs {y}", i + 1))?;
        }
        Ok(())
    }

    fn infer_clause(&mut self, c: &RawClause) -> Result<BTreeMap<String, usize>, String> {
        let mut vars = BTreeMap::new();
        if let Some((p, args)) = &c.head {
            self.infer_atom(p, args, &mut vars)?;
        }
        for l in &c.body {
            match l {
                Lit::Atom(p, args) => self.infer_atom(p, args, &mut vars)?,
                Lit::Rel(a, op, b) => {
                    let x = self.infer(a, &mut vars)?;
                    let y = self.infer(b, &mut vars)?;
                    self.typer
                        .unify(x, y)
                        .map_err(|(s, t)| format!("`{}` relates {s} and {t}", op.symbol()))?;
                    if !matches!(op, RelOp::Eq | RelOp::Ne) {
                        let int = self.typer.node(Some(Sort::Int));
                        self.typer
                            .unify(x, int)
                            .map_err(|(s, _)| format!("`{}` on {s}", op.symbol()))?;
                    }
                }
                Lit::True | Lit::False => {}
            }
        }
        Ok(vars)
    }

    fn build(&mut self, r: &Raw, vars: &BTreeMap<String, usize>) -> Term {
        match r {
            Raw::Var(v) => {
                let sort = self.typer.resolved(vars[v]);
                Term::Var(Var::new(v.as_str(), sort))
            }
            Raw::Int(k) => Term::Int(*k),
            Raw::App(name, args) if self.is_bool_const(name, args) => Term::Bool(name == "true"),
            Raw::App(name, args) => {
                let dt = self.ctors[name].0.clone();
                Term::Ctor {
                    name: Sym::new(name),
                    sort: dt,
                    args: args.iter().map(|a| self.build(a, vars)).collect(),
                }
            }
            Raw::Arith(op, args) => {
                Term::Arith(*op, args.iter().map(|a| self.build(a, vars)).collect())
            }
        }
    }
}

fn sort_of(name: &str, datatypes: &BTreeMap<String, ()>) -> Result<Sort, FrontendError> {
    match name {
        "int" => Ok(Sort::Int),
        "bool" => Ok(Sort::Bool),
        _ if datatypes.contains_key(name) => Ok(Sort::Adt(Sym::new(name))),
        _ => Err(FrontendError::Undeclared(name.to_string())),
    }
}

pub fn parse_prolog(text: &str) -> Result<SourceProblem, FrontendError> {
    parse_prolog_with(text, true)
}

/// With `derive` off, only predicates named in `:- mode` directives get
/// modes.
pub fn parse_prolog_with(text: &str, derive: bool) -> Result<SourceProblem, FrontendError> {
    let mut parser = Parser {
        toks: lex(text)?,
        pos: 0,
        anon: 0,
    };
    let items = parser.items()?;

    let mut dt_names: BTreeMap<String, ()> = BTreeMap::new();
    for it in &items {
        if let Item::Datatype { name, .. } = it {
            dt_names.insert(name.clone(), ());
        }
    }
    let user_list = dt_names.contains_key(LIST_SORT)
        || items.iter().any(|it| {
            matches!(it, Item::Datatype { ctors, .. } if ctors.iter().any(|(c, _)| c == NIL || c == CONS))
        });
    dt_names.insert(LIST_SORT.to_string(), ());

    let mut datatypes = Vec::new();
    if !user_list {
        datatypes.push(DataType::int_list());
    }
    for it in &items {
        if let Item::Datatype { name, ctors } = it {
            let mut cs = Vec::new();
            for (c, fields) in ctors {
                let sorts = fields
                    .iter()
                    .map(|f| sort_of(f, &dt_names))
                    .collect::<Result<Vec<_>, _>>()?;
                cs.push(Constructor {
                    name: Sym::new(c),
                    selectors: (1..=sorts.len())
                        .map(|i| Sym::new(&format!("{c}_{i}")))
                        .collect(),
                    fields: sorts,
                });
            }
            datatypes.push(DataType {
                name: Sym::new(name),
                ctors: cs,
            });
        }
    }

    let mut ctx = Ctx {
        ctors: BTreeMap::new(),
        preds: BTreeMap::new(),
        typer: Typer::default(),
    };
    for d in &datatypes {
        for c in &d.ctors {
            ctx.ctors
                .insert(c.name.to_string(), (d.name.clone(), c.fields.clone()));
        }
    }
    for it in &items {
        if let Item::Pred { name, sorts, line } = it {
            let ns = ctx
                .pred_nodes(name, sorts.len())
                .map_err(|conflict| FrontendError::Type {
                    clause: 0,
                    line: *line,
                    conflict,
                })?;
            for (n, s) in ns.into_iter().zip(sorts) {
                let s = sort_of(s, &dt_names)?;
                let want = ctx.typer.node(Some(s));
                ctx.typer
                    .unify(n, want)
                    .map_err(|(x, y)| FrontendError::Type {
                        clause: 0,
                        line: *line,
                        conflict: format!("`{name}` declared twice: {x} vs {y}"),
                    })?;
            }
        }
    }

    let raw: Vec<&RawClause> = items
        .iter()
        .filter_map(|it| match it {
            Item::Clause(c) => Some(c),
            _ => None,
        })
        .collect();
    let mut var_maps = Vec::new();
    for (i, c) in raw.iter().enumerate() {
        let vars = ctx
            .infer_clause(c)
            .map_err(|conflict| FrontendError::Type {
                clause: i + 1,
                line: c.span.start,
                conflict,
            })?;
        var_maps.push(vars);
    }

    let mut clauses = Vec::new();
    let mut spans = BTreeMap::new();
    for (i, (c, vars)) in raw.iter().zip(&var_maps).enumerate() {
        let id = ClauseId(i as u32 + 1);
        let head = c
            .head
            .as_ref()
            .map(|(p, args)| Atom::new(p, args.iter().map(|a| ctx.build(a, vars)).collect()));
        let mut constraint = Constraint::top();
        let mut body = Vec::new();
        let mut adt_eqs = Vec::new();
        for l in &c.body {
            match l {
                Lit::Atom(p, args) => body.push(Atom::new(
                    p,
                    args.iter().map(|a| ctx.build(a, vars)).collect(),
                )),
                Lit::Rel(a, op, b) => {
                    let (a, b) = (ctx.build(a, vars), ctx.build(b, vars));
                    if a.sort().is_basic() {
                        constraint.relate(&a, *op, &b).map_err(|source| {
                            FrontendError::Constraint {
                                line: c.span.start,
                                source,
                            }
                        })?;
                    } else if *op == RelOp::Eq {
                        adt_eqs.push((a, b));
                    } else {
                        return Err(FrontendError::UnsupportedFeature(format!(
                            "disequality between data terms at line {}",
                            c.span.start
                        )));
                    }
                }
                Lit::True => {}
                Lit::False => constraint = Constraint::bottom(),
            }
        }
        let mut clause = Clause::new(head, constraint, body).with_id(id);
        if !adt_eqs.is_empty() {
            clause = match unify_pairs(adt_eqs) {
                None => Clause::new(clause.head, Constraint::bottom(), clause.body).with_id(id),
                Some(u) => {
                    for (x, y) in &u.equations {
                        clause
                            .constraint
                            .relate(x, RelOp::Eq, y)
                            .map_err(|source| FrontendError::Constraint {
                                line: c.span.start,
                                source,
                            })?;
                    }
                    u.subst
                        .clause(&clause)
                        .map_err(|source| FrontendError::Constraint {
                            line: c.span.start,
                            source,
                        })?
                }
            };
        }
        clauses.push(clause);
        spans.insert(id, c.span);
    }

    let mut preds = BTreeMap::new();
    for (name, ns) in ctx.preds.clone() {
        let args = ns.into_iter().map(|n| ctx.typer.resolved(n)).collect();
        preds.insert(
            Sym::new(&name),
            PredSig {
                name: Sym::new(&name),
                args,
            },
        );
    }

    let mut program = Program {
        datatypes,
        preds,
        clauses,
        ..Program::default()
    };
    let mut explicit = Vec::new();
    for it in &items {
        if let Item::Mode { pred, outputs } = it {
            let p = Sym::new(pred);
            if !program.preds.contains_key(&p) {
                return Err(FrontendError::Undeclared(pred.clone()));
            }
            let (o, i): (Vec<usize>, Vec<usize>) = (0..outputs.len()).partition(|k| outputs[*k]);
            program.modes.insert(
                p.clone(),
                ModeSignature {
                    pred: p.clone(),
                    inputs: i,
                    outputs: o,
                },
            );
            explicit.push(p);
        }
    }
    if !user_list && !uses_sort(&program, LIST_SORT) {
        program.datatypes.retain(|d| d.name.as_str() != LIST_SORT);
    }
    if derive {
        complete_modes(&mut program);
    }
    program.compute_levels();
    program.check()?;
    let warnings = mode_conflicts(&program, &explicit);
    Ok(SourceProblem {
        program,
        explicit_modes: explicit,
        spans,
        warnings,
    })
}

fn term_uses(t: &Term, sort: &str) -> bool {
    match t {
        Term::Var(v) => matches!(&v.sort, Sort::Adt(s) if s.as_str() == sort),
        Term::Ctor { sort: s, .. } if s.as_str() == sort => true,
        Term::Ctor { args, .. } | Term::Arith(_, args) => args.iter().any(|a| term_uses(a, sort)),
        _ => false,
    }
}

fn uses_sort(p: &Program, sort: &str) -> bool {
    let adt = Sort::Adt(Sym::new(sort));
    p.preds.values().any(|s| s.args.contains(&adt))
        || p.datatypes
            .iter()
            .filter(|d| d.name.as_str() != sort)
            .any(|d| d.ctors.iter().any(|c| c.fields.contains(&adt)))
        || p.clauses.iter().any(|c| {
            c.head
                .iter()
                .chain(&c.body)
                .any(|a| a.args.iter().any(|t| term_uses(t, sort)))
        })
}
