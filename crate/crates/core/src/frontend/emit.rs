use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::clause::Clause;
use crate::constraints::{Atomic, LinExpr, Rel};
use crate::display;
use crate::program::{DataType, Program};
use crate::rules::rename_clause;
use crate::term::{ArithOp, Atom, Sort, Sym, Term, Var};

/// Atom variables in occurrence order, then constraint-only ones.
fn clause_vars(c: &Clause) -> Vec<Var> {
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
    vars
}

fn canonical(c: &Clause, prefix: &str) -> (Clause, Vec<Var>) {
    let vars = clause_vars(c);
    let names: BTreeMap<Sym, Var> = vars
        .iter()
        .enumerate()
        .map(|(i, v)| {
            (
                v.name.clone(),
                Var::new(format!("{prefix}{i}").as_str(), v.sort.clone()),
            )
        })
        .collect();
    let renamed = vars.iter().map(|v| names[&v.name].clone()).collect();
    (rename_clause(c, &names), renamed)
}

fn smt_sort(s: &Sort) -> String {
    match s {
        Sort::Int => "Int".into(),
        Sort::Bool => "Bool".into(),
        Sort::Adt(n) => n.to_string(),
    }
}

fn smt_term(t: &Term) -> String {
    match t {
        Term::Var(v) => v.name.to_string(),
        Term::Int(k) if *k < 0 => format!("(- {})", k.unsigned_abs()),
        Term::Int(k) => k.to_string(),
        Term::Bool(b) => b.to_string(),
        Term::Ctor { name, args, .. } if args.is_empty() => name.to_string(),
        Term::Ctor { name, args, .. } => app(name.as_str(), args.iter().map(smt_term)),
        Term::Arith(op, args) => {
            let f = match op {
                ArithOp::Add => "+",
                ArithOp::Sub | ArithOp::Neg => "-",
                ArithOp::Mul => "*",
            };
            app(f, args.iter().map(smt_term))
        }
    }
}

fn app(f: &str, args: impl IntoIterator<Item = String>) -> String {
    let mut s = format!("({f}");
    for a in args {
        s.push(' ');
        s.push_str(&a);
    }
    s.push(')');
    s
}

fn sum(parts: Vec<String>) -> String {
    match parts.len() {
        0 => "0".into(),
        1 => parts.into_iter().next().unwrap_or_default(),
        _ => app("+", parts),
    }
}

/// Both sides of `e REL 0` with non-negative coefficients.
fn sides(e: &LinExpr) -> (String, String) {
    let (mut l, mut r) = (Vec::new(), Vec::new());
    for (v, a) in &e.coeffs {
        let (side, k) = if *a > 0 { (&mut l, *a) } else { (&mut r, -*a) };
        side.push(if k == 1 {
            v.to_string()
        } else {
            format!("(* {k} {v})")
        });
    }
    if e.constant > 0 {
        l.push(e.constant.to_string());
    } else if e.constant < 0 {
        r.push(e.constant.unsigned_abs().to_string());
    }
    (sum(l), sum(r))
}

fn smt_atomic(a: &Atomic) -> String {
    match a {
        Atomic::Lin(e, rel) => {
            let (l, r) = sides(e);
            match rel {
                Rel::Eq => format!("(= {l} {r})"),
                Rel::Ne => format!("(not (= {l} {r}))"),
                Rel::Le => format!("(<= {l} {r})"),
            }
        }
        Atomic::BoolLit(v, true) => v.to_string(),
        Atomic::BoolLit(v, false) => format!("(not {v})"),
        Atomic::BoolEq(a, b, true) => format!("(= {a} {b})"),
        Atomic::BoolEq(a, b, false) => format!("(not (= {a} {b}))"),
    }
}

fn smt_atom(a: &Atom) -> String {
    if a.args.is_empty() {
        a.pred.to_string()
    } else {
        app(a.pred.as_str(), a.args.iter().map(smt_term))
    }
}

fn sort_refs(s: &Sort, out: &mut BTreeSet<Sym>) {
    if let Sort::Adt(n) = s {
        out.insert(n.clone());
    }
}

fn term_sorts(t: &Term, out: &mut BTreeSet<Sym>) {
    match t {
        Term::Var(v) => sort_refs(&v.sort, out),
        Term::Ctor { sort, args, .. } => {
            out.insert(sort.clone());
            args.iter().for_each(|a| term_sorts(a, out));
        }
        Term::Arith(_, args) => args.iter().for_each(|a| term_sorts(a, out)),
        Term::Int(_) | Term::Bool(_) => {}
    }
}

/// Datatypes reachable from the used predicates and clause terms.
fn needed_datatypes<'a>(p: &'a Program, used: &BTreeSet<Sym>) -> Vec<&'a DataType> {
    let mut want = BTreeSet::new();
    for name in used {
        if let Some(sig) = p.preds.get(name) {
            sig.args.iter().for_each(|s| sort_refs(s, &mut want));
        }
    }
    for c in &p.clauses {
        for a in c.head.iter().chain(&c.body) {
            a.args.iter().for_each(|t| term_sorts(t, &mut want));
        }
    }
    let mut stack: Vec<Sym> = want.iter().cloned().collect();
    while let Some(n) = stack.pop() {
        if let Some(d) = p.datatype(&n) {
            for c in &d.ctors {
                for f in &c.fields {
                    if let Sort::Adt(m) = f {
                        if want.insert(m.clone()) {
                            stack.push(m.clone());
                        }
                    }
                }
            }
        }
    }
    let mut out: Vec<&DataType> = p
        .datatypes
        .iter()
        .filter(|d| want.contains(&d.name))
        .collect();
    out.sort_by(|a, b| a.name.cmp(&b.name));
    out
}

/// SMT-LIB Horn problem: datatypes and predicates sorted by name, clauses in
/// program order, variables renamed `v0, v1, ...` per clause.
pub fn emit_smtlib(p: &Program) -> String {
    let mut out = String::from("(set-logic HORN)\n");
    let used = p.used_preds();
    let dts = needed_datatypes(p, &used);
    if !dts.is_empty() {
        let heads: Vec<String> = dts.iter().map(|d| format!("({} 0)", d.name)).collect();
        let bodies: Vec<String> = dts
            .iter()
            .map(|d| {
                let cs: Vec<String> = d
                    .ctors
                    .iter()
                    .map(|c| {
                        let mut s = format!("({}", c.name);
                        for (i, f) in c.fields.iter().enumerate() {
                            let sel = c
                                .selectors
                                .get(i)
                                .map(|s| s.to_string())
                                .unwrap_or_else(|| format!("{}_{}", c.name, i + 1));
                            let _ = write!(s, " ({sel} {})", smt_sort(f));
                        }
                        s.push(')');
                        s
                    })
                    .collect();
                format!("({})", cs.join(" "))
            })
            .collect();
        let _ = writeln!(
            out,
            "(declare-datatypes ({}) ({}))",
            heads.join(" "),
            bodies.join(" ")
        );
    }
    for name in &used {
        let sorts: Vec<String> = p
            .preds
            .get(name)
            .map(|s| s.args.iter().map(smt_sort).collect())
            .unwrap_or_default();
        let _ = writeln!(out, "(declare-fun {name} ({}) Bool)", sorts.join(" "));
    }
    for c in &p.clauses {
        let (c, vars) = canonical(c, "v");
        let mut body: Vec<String> = if c.constraint.is_false_marker() {
            vec!["false".into()]
        } else {
            c.constraint.atoms().iter().map(smt_atomic).collect()
        };
        body.extend(c.body.iter().map(smt_atom));
        let head = c
            .head
            .as_ref()
            .map_or_else(|| "false".to_string(), smt_atom);
        let mut f = match body.len() {
            0 => head,
            1 => format!("(=> {} {head})", body[0]),
            _ => format!("(=> (and {}) {head})", body.join(" ")),
        };
        if !vars.is_empty() {
            let bs: Vec<String> = vars
                .iter()
                .map(|v| format!("({} {})", v.name, smt_sort(&v.sort)))
                .collect();
            f = format!("(forall ({}) {f})", bs.join(" "));
        }
        let _ = writeln!(out, "(assert {f})");
    }
    out.push_str("(check-sat)\n");
    out
}

fn prolog_var(name: &str) -> bool {
    let mut cs = name.chars();
    cs.next()
        .is_some_and(|c| c.is_ascii_uppercase() || c == '_')
        && cs.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn prolog_sort(s: &Sort) -> String {
    s.to_string()
}

/// Prolog-like text the parser reads back: directives for datatypes other
/// than the built-in list, predicate signatures and modes, then clauses.
pub fn emit_prolog(p: &Program) -> String {
    let mut out = String::new();
    let builtin = DataType::int_list();
    for d in &p.datatypes {
        if d.name == builtin.name
            && d.ctors
                .iter()
                .map(|c| (&c.name, &c.fields))
                .eq(builtin.ctors.iter().map(|c| (&c.name, &c.fields)))
        {
            continue;
        }
        let cs: Vec<String> = d
            .ctors
            .iter()
            .map(|c| {
                if c.fields.is_empty() {
                    c.name.to_string()
                } else {
                    let fs: Vec<String> = c.fields.iter().map(prolog_sort).collect();
                    format!("{}({})", c.name, fs.join(", "))
                }
            })
            .collect();
        let _ = writeln!(out, ":- datatype {} = {}.", d.name, cs.join(" | "));
    }
    for sig in p.preds.values() {
        if sig.args.is_empty() {
            let _ = writeln!(out, ":- pred {}.", sig.name);
        } else {
            let fs: Vec<String> = sig.args.iter().map(prolog_sort).collect();
            let _ = writeln!(out, ":- pred {}({}).", sig.name, fs.join(", "));
        }
    }
    for m in p.modes.values() {
        if m.arity() == 0 {
            continue;
        }
        let ms: Vec<&str> = (0..m.arity())
            .map(|i| if m.outputs.contains(&i) { "-" } else { "+" })
            .collect();
        let _ = writeln!(out, ":- mode {}({}).", m.pred, ms.join(","));
    }
    for c in &p.clauses {
        let ok = clause_vars(c).iter().all(|v| prolog_var(v.name.as_str()));
        let text = if ok {
            display::clause(c)
        } else {
            display::clause(&canonical(c, "V").0)
        };
        out.push_str(&text);
        out.push('\n');
    }
    out
}
