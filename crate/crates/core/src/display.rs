//! Prolog-style rendering of terms, atoms and clauses.

use crate::clause::Clause;
use crate::program::{CONS, LIST_SORT, NIL};
use crate::term::{ArithOp, Atom, Term};

pub fn term(t: &Term) -> String {
    let mut s = String::new();
    write_term(t, &mut s, 0);
    s
}

fn is_list_ctor(sort: &str, name: &str) -> bool {
    sort == LIST_SORT && (name == NIL || name == CONS)
}

// precedence: 0 = top, 1 = additive operand, 2 = multiplicative operand
fn write_term(t: &Term, out: &mut String, prec: u8) {
    match t {
        Term::Var(v) => out.push_str(v.name.as_str()),
        Term::Int(k) => {
            if *k < 0 && prec > 0 {
                out.push_str(&format!("({k})"));
            } else {
                out.push_str(&k.to_string());
            }
        }
        Term::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Term::Ctor { name, sort, .. } if is_list_ctor(sort.as_str(), name.as_str()) => {
            write_list(t, out)
        }
        Term::Ctor { name, args, .. } => {
            out.push_str(name.as_str());
            if !args.is_empty() {
                out.push('(');
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    write_term(a, out, 0);
                }
                out.push(')');
            }
        }
        Term::Arith(op, args) => {
            let my_prec = match op {
                ArithOp::Add | ArithOp::Sub => 1,
                ArithOp::Mul | ArithOp::Neg => 2,
            };
            let paren = prec > my_prec;
            if paren {
                out.push('(');
            }
            match op {
                ArithOp::Add => {
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            match a {
                                Term::Arith(ArithOp::Neg, inner) => {
                                    out.push('-');
                                    write_term(&inner[0], out, 2);
                                    continue;
                                }
                                Term::Int(k) if *k < 0 => {
                                    out.push('-');
                                    out.push_str(&(-(*k as i128)).to_string());
                                    continue;
                                }
                                _ => out.push('+'),
                            }
                        }
                        write_term(a, out, 1);
                    }
                }
                ArithOp::Sub => {
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            out.push('-');
                            write_term(a, out, 2);
                        } else {
                            write_term(a, out, 1);
                        }
                    }
                }
                ArithOp::Neg => {
                    out.push('-');
                    write_term(&args[0], out, 3);
                }
                ArithOp::Mul => {
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            out.push('*');
                        }
                        write_term(a, out, 2);
                    }
                }
            }
            if paren {
                out.push(')');
            }
        }
    }
}

fn write_list(t: &Term, out: &mut String) {
    out.push('[');
    let mut cur = t;
    let mut first = true;
    loop {
        match cur {
            Term::Ctor { name, sort, args }
                if sort.as_str() == LIST_SORT && name.as_str() == CONS && args.len() == 2 =>
            {
                if !first {
                    out.push(',');
                }
                first = false;
                write_term(&args[0], out, 0);
                cur = &args[1];
            }
            Term::Ctor { name, sort, .. } if sort.as_str() == LIST_SORT && name.as_str() == NIL => {
                break
            }
            other => {
                out.push('|');
                write_term(other, out, 0);
                break;
            }
        }
    }
    out.push(']');
}

pub fn atom(a: &Atom) -> String {
    let mut s = a.pred.to_string();
    if !a.args.is_empty() {
        s.push('(');
        for (i, t) in a.args.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            write_term(t, &mut s, 0);
        }
        s.push(')');
    }
    s
}

pub fn clause(c: &Clause) -> String {
    let head = c.head.as_ref().map_or_else(|| "false".to_string(), atom);
    let mut body: Vec<String> = Vec::new();
    if c.constraint.is_false_marker() || !c.constraint.is_true() {
        body.push(c.constraint.to_string());
    }
    body.extend(c.body.iter().map(atom));
    if body.is_empty() {
        format!("{head}.")
    } else {
        format!("{head} :- {}.", body.join(", "))
    }
}
