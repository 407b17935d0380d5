//! Structural queries over atom conjunctions: sharing blocks, embeddings,
//! the subterm ordering and moded views.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::program::Modes;
use crate::subst::{match_atom, Substitution};
use crate::term::{conj_vars, Atom, Sym, Term, Var};

/// Partition of `atoms` (by index) under transitive sharing of ADT-typed
/// variables. Blocks are ordered by their first atom.
pub fn sharing_blocks(atoms: &[Atom]) -> Vec<Vec<usize>> {
    let n = atoms.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        let mut j = i;
        while p[j] != r {
            let next = p[j];
            p[j] = r;
            j = next;
        }
        r
    }
    let adt: Vec<BTreeSet<Sym>> = atoms
        .iter()
        .map(|a| a.adt_vars().into_iter().map(|v| v.name).collect())
        .collect();
    for i in 0..n {
        for j in i + 1..n {
            if !adt[i].is_disjoint(&adt[j]) {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut root_of_block: Vec<usize> = Vec::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        match root_of_block.iter().position(|&x| x == r) {
            Some(b) => blocks[b].push(i),
            None => {
                root_of_block.push(r);
                blocks.push(vec![i]);
            }
        }
    }
    blocks
}

/// Witness of `g1 ⊴ g2`: `subst(g1[i]) = g2[injection[i]]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Embedding {
    pub subst: Substitution,
    pub injection: Vec<usize>,
}

/// Finds an instance of all of `g1` inside `g2` under one substitution.
/// Variables of `g1` are the pattern variables; callers rename apart when
/// the two conjunctions share names.
pub fn embedded(g1: &[Atom], g2: &[Atom]) -> Option<Embedding> {
    if g1.len() > g2.len() {
        return None;
    }
    let mut order: Vec<usize> = (0..g1.len()).collect();
    order.sort_by(|&a, &b| g1[a].pred.cmp(&g1[b].pred).then(a.cmp(&b)));
    let mut inj = vec![usize::MAX; g1.len()];
    let mut used = vec![false; g2.len()];
    let mut s = Substitution::identity();
    if embed_search(g1, g2, &order, 0, &mut used, &mut inj, &mut s) {
        Some(Embedding {
            subst: s,
            injection: inj,
        })
    } else {
        None
    }
}

fn embed_search(
    g1: &[Atom],
    g2: &[Atom],
    order: &[usize],
    k: usize,
    used: &mut [bool],
    inj: &mut [usize],
    s: &mut Substitution,
) -> bool {
    if k == order.len() {
        return true;
    }
    let i = order[k];
    for j in 0..g2.len() {
        if used[j] {
            continue;
        }
        let saved = s.clone();
        if match_atom(&g1[i], &g2[j], s) {
            used[j] = true;
            inj[i] = j;
            if embed_search(g1, g2, order, k + 1, used, inj, s) {
                return true;
            }
            used[j] = false;
        }
        *s = saved;
    }
    false
}

/// Some atoms of a pattern matched, as instances, onto distinct atoms of a
/// target under one substitution. `pairs` holds `(pattern, target)` indices
/// in pattern order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartialMatch {
    pub pairs: Vec<(usize, usize)>,
    pub subst: Substitution,
}

/// All non-empty partial matches of `pattern` into `target`, largest first,
/// ties broken by the lexicographically smallest target indices. At most
/// `limit` search nodes are explored.
pub fn partial_matches(pattern: &[Atom], target: &[Atom], limit: usize) -> Vec<PartialMatch> {
    let mut out = Vec::new();
    let mut used = vec![false; target.len()];
    let mut pairs = Vec::new();
    let mut budget = limit;
    partial_search(
        pattern,
        target,
        0,
        &mut used,
        &mut pairs,
        Substitution::identity(),
        &mut out,
        &mut budget,
    );
    out.sort_by(|a: &PartialMatch, b: &PartialMatch| {
        b.pairs.len().cmp(&a.pairs.len()).then_with(|| {
            let ta: Vec<usize> = sorted_targets(a);
            let tb: Vec<usize> = sorted_targets(b);
            ta.cmp(&tb).then_with(|| a.pairs.cmp(&b.pairs))
        })
    });
    out
}

fn sorted_targets(m: &PartialMatch) -> Vec<usize> {
    let mut t: Vec<usize> = m.pairs.iter().map(|p| p.1).collect();
    t.sort();
    t
}

#[allow(clippy::too_many_arguments)]
fn partial_search(
    pattern: &[Atom],
    target: &[Atom],
    i: usize,
    used: &mut [bool],
    pairs: &mut Vec<(usize, usize)>,
    s: Substitution,
    out: &mut Vec<PartialMatch>,
    budget: &mut usize,
) {
    if *budget == 0 {
        return;
    }
    *budget -= 1;
    if i == pattern.len() {
        if !pairs.is_empty() {
            out.push(PartialMatch {
                pairs: pairs.clone(),
                subst: s,
            });
        }
        return;
    }
    for j in 0..target.len() {
        if used[j] {
            continue;
        }
        let mut s2 = s.clone();
        if match_atom(&pattern[i], &target[j], &mut s2) {
            used[j] = true;
            pairs.push((i, j));
            partial_search(pattern, target, i + 1, used, pairs, s2, out, budget);
            pairs.pop();
            used[j] = false;
        }
    }
    partial_search(pattern, target, i + 1, used, pairs, s, out, budget);
}

/// `t1 ≺ t2`: every component of `t1` is a subterm of some component of
/// `t2`, and at least one is a strict subterm.
pub fn subterm_lt(t1: &[Term], t2: &[Term]) -> bool {
    let all = t1.iter().all(|x| t2.iter().any(|y| x.is_subterm_of(y)));
    let strict = t1
        .iter()
        .any(|x| t2.iter().any(|y| x.is_strict_subterm_of(y)));
    all && strict
}

/// Splits the variables of `g` into basic-typed and ADT-typed ones, both in
/// first-occurrence order.
pub fn classify_vars(g: &[Atom]) -> (Vec<Var>, Vec<Var>) {
    conj_vars(g).into_iter().partition(|v| v.sort.is_basic())
}

pub fn bvars(g: &[Atom]) -> Vec<Var> {
    classify_vars(g).0
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModeError {
    #[error("no mode signature for predicate `{0}`")]
    MissingMode(Sym),
    #[error("no valid ordering: {0}")]
    NoValidOrdering(String),
}

/// A conjunction read as a total functional map from `inputs` to `outputs`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModedView {
    /// Atom indices in an order satisfying the producer-before-consumer
    /// condition.
    pub order: Vec<usize>,
    pub inputs: Vec<Var>,
    pub outputs: Vec<Var>,
    /// Per original atom index.
    pub atom_inputs: Vec<Vec<Var>>,
    pub atom_outputs: Vec<Vec<Var>>,
}

fn arg_vars(a: &Atom, positions: &[usize]) -> Vec<Var> {
    let mut out = Vec::new();
    for &p in positions {
        if let Some(t) = a.args.get(p) {
            t.collect_vars(&mut out);
        }
    }
    out
}

/// Input and output variables of a single moded atom.
pub fn atom_io(a: &Atom, modes: &Modes) -> Result<(Vec<Var>, Vec<Var>), ModeError> {
    let m = modes
        .get(&a.pred)
        .ok_or_else(|| ModeError::MissingMode(a.pred.clone()))?;
    Ok((arg_vars(a, &m.inputs), arg_vars(a, &m.outputs)))
}

pub fn moded_partition(block: &[Atom], modes: &Modes) -> Result<ModedView, ModeError> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for a in block {
        let (x, y) = atom_io(a, modes)?;
        if let Some(v) = y.iter().find(|v| x.contains(v)) {
            return Err(ModeError::NoValidOrdering(format!(
                "`{}` is both input and output of `{}`",
                v.name,
                crate::display::atom(a)
            )));
        }
        xs.push(x);
        ys.push(y);
    }
    for i in 0..block.len() {
        for j in i + 1..block.len() {
            if let Some(v) = ys[i].iter().find(|v| ys[j].contains(v)) {
                return Err(ModeError::NoValidOrdering(format!(
                    "`{}` is an output of two atoms",
                    v.name
                )));
            }
        }
    }
    let mut placed = vec![false; block.len()];
    let mut order = Vec::new();
    while order.len() < block.len() {
        let ready = (0..block.len()).find(|&i| {
            !placed[i]
                && (0..block.len())
                    .all(|j| j == i || placed[j] || ys[j].iter().all(|v| !xs[i].contains(v)))
        });
        match ready {
            Some(i) => {
                placed[i] = true;
                order.push(i);
            }
            None => {
                return Err(ModeError::NoValidOrdering(
                    "cyclic dependency between outputs and inputs".into(),
                ))
            }
        }
    }
    let all_out: Vec<Var> = ys.iter().flatten().cloned().collect();
    let mut inputs = Vec::new();
    for v in xs.iter().flatten() {
        if !all_out.contains(v) && !inputs.contains(v) {
            inputs.push(v.clone());
        }
    }
    let mut outputs = Vec::new();
    for v in &all_out {
        if !outputs.contains(v) {
            outputs.push(v.clone());
        }
    }
    Ok(ModedView {
        order,
        inputs,
        outputs,
        atom_inputs: xs,
        atom_outputs: ys,
    })
}

/// Indices of atoms whose inputs are all inputs of the whole conjunction.
pub fn source_atoms(atoms: &[Atom], modes: &Modes) -> Result<Vec<usize>, ModeError> {
    let view = moded_partition(atoms, modes)?;
    Ok((0..atoms.len())
        .filter(|&i| view.atom_inputs[i].iter().all(|v| view.inputs.contains(v)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::ModeSignature;

    fn lv(n: &str) -> Term {
        Term::Var(Var::adt(n, "list"))
    }

    fn iv(n: &str) -> Term {
        Term::Var(Var::int(n))
    }

    fn cons(h: Term, t: Term) -> Term {
        Term::ctor("cons", "list", vec![h, t])
    }

    fn modes() -> Modes {
        let mut m = Modes::new();
        for (p, n) in [("append", 3), ("rev", 2), ("len", 2)] {
            m.insert(Sym::new(p), ModeSignature::last_output(Sym::new(p), n));
        }
        m
    }

    fn clause1_body() -> Vec<Atom> {
        vec![
            Atom::new("append", vec![lv("Xs"), lv("Ys"), lv("Zs")]),
            Atom::new("rev", vec![lv("Zs"), lv("Rs")]),
            Atom::new("len", vec![lv("Xs"), iv("N0")]),
            Atom::new("len", vec![lv("Ys"), iv("N1")]),
            Atom::new("len", vec![lv("Rs"), iv("N2")]),
        ]
    }

    #[test]
    fn blocks() {
        assert_eq!(sharing_blocks(&clause1_body()), vec![vec![0, 1, 2, 3, 4]]);
        let ints = vec![Atom::new("p", vec![iv("N")]), Atom::new("q", vec![iv("M")])];
        assert_eq!(sharing_blocks(&ints), vec![vec![0], vec![1]]);
        let g = vec![
            Atom::new("p", vec![lv("Xs")]),
            Atom::new("q", vec![lv("Xs"), lv("Ys")]),
            Atom::new("r", vec![lv("Ys")]),
            Atom::new("s", vec![lv("Zs")]),
        ];
        assert_eq!(sharing_blocks(&g), vec![vec![0, 1, 2], vec![3]]);
    }

    #[test]
    fn simple_embedding() {
        let g1 = vec![Atom::new("p", vec![iv("X"), Term::Int(0)])];
        let g2 = vec![
            Atom::new("q", vec![iv("Y")]),
            Atom::new("p", vec![Term::Int(3), Term::Int(0)]),
        ];
        let e = embedded(&g1, &g2).unwrap();
        assert_eq!(e.injection, vec![1]);
        assert_eq!(e.subst.get(&Sym::new("X")), Some(&Term::Int(3)));
        let g = clause1_body();
        assert_eq!(embedded(&g, &g).unwrap().injection, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn subterm_ordering() {
        let xs = lv("Xs");
        let x = iv("X");
        let l = cons(x.clone(), xs.clone());
        assert!(subterm_lt(&[xs.clone()], &[l.clone()]));
        assert!(!subterm_lt(&[xs.clone()], &[xs.clone()]));
        assert!(subterm_lt(&[x, xs], &[l]));
    }

    #[test]
    fn classification() {
        let g = vec![
            Atom::new(
                "append",
                vec![
                    lv("Rs"),
                    cons(iv("X"), Term::ctor("nil", "list", vec![])),
                    lv("R1s"),
                ],
            ),
            Atom::new("len", vec![lv("R1s"), iv("N21")]),
            Atom::new("len", vec![lv("Rs"), iv("N2")]),
        ];
        let (b, a) = classify_vars(&g);
        let names = |vs: Vec<Var>| {
            vs.into_iter()
                .map(|v| v.name.to_string())
                .collect::<Vec<_>>()
        };
        assert_eq!(names(b), vec!["X", "N21", "N2"]);
        assert_eq!(names(a), vec!["Rs", "R1s"]);
        assert_eq!(classify_vars(&[]), (vec![], vec![]));
    }

    #[test]
    fn moded_views() {
        let g = vec![
            Atom::new("append", vec![lv("Xs"), lv("Ys"), lv("Zs")]),
            Atom::new("rev", vec![lv("Zs"), lv("Rs")]),
        ];
        let v = moded_partition(&g, &modes()).unwrap();
        assert_eq!(
            v.inputs,
            vec![Var::adt("Xs", "list"), Var::adt("Ys", "list")]
        );
        assert_eq!(
            v.outputs,
            vec![Var::adt("Zs", "list"), Var::adt("Rs", "list")]
        );
        // consumer listed first gets reordered
        let swapped = vec![g[1].clone(), g[0].clone()];
        assert_eq!(
            moded_partition(&swapped, &modes()).unwrap().order,
            vec![1, 0]
        );
        let clash = vec![
            Atom::new("len", vec![lv("Xs"), iv("N")]),
            Atom::new("len", vec![lv("Ys"), iv("N")]),
        ];
        assert!(matches!(
            moded_partition(&clash, &modes()),
            Err(ModeError::NoValidOrdering(_))
        ));
    }

    #[test]
    fn sources_of_clause1() {
        assert_eq!(
            source_atoms(&clause1_body(), &modes()).unwrap(),
            vec![0, 2, 3]
        );
        let g = vec![
            Atom::new("append", vec![lv("Xs"), lv("Ys"), lv("Zs")]),
            Atom::new("rev", vec![lv("Zs"), lv("Rs")]),
        ];
        assert_eq!(source_atoms(&g, &modes()).unwrap(), vec![0]);
    }
}
