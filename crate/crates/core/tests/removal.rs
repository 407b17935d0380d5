use hornstrip::frontend::parse_prolog;
use hornstrip::removal::{
    is_descending, is_head_instance, run, AlgorithmState, Case, Config, RemovalError,
};
use hornstrip::rules::Fresh;
use hornstrip::structure::source_atoms;
use hornstrip::subst::variant_of;
use hornstrip::{Clause, ClauseId, Program};

const REVERSE: &str = include_str!("fixtures/reverse.pl");

const FINAL_SET: &str = "\
false :- N2=\\=N0+N1, new1(N0,N1,N2).
new1(N0,N1,N2) :- N0=0, new2(N1,N2).
new1(N0,N1,N2) :- N0=N+1, new1(N,N1,M), diff1(M,X,N2).
new2(M,N) :- M=0, N=0.
new2(M1,N1) :- M1=M+1, new2(M,N), diff1(N,X,N1).
diff1(N0,X,N1) :- N0=0, N1=1.
diff1(N0,X,N1) :- N0=N+1, N1=M+1, diff1(N,X,M).
";

fn program(text: &str) -> Program {
    parse_prolog(text).unwrap().program
}

/// Clauses of `extra`, read together with the list predicates so that
/// list sorts are inferred.
fn with_lists(extra: &str) -> Vec<Clause> {
    let p = program(&format!("{REVERSE}{extra}"));
    p.clauses[7..].to_vec()
}

fn same_set(got: &[Clause], want: &[Clause]) -> bool {
    let mut used = vec![false; got.len()];
    got.len() == want.len()
        && want.iter().all(|w| {
            let hit = (0..got.len()).find(|&i| !used[i] && variant_of(&got[i], w).is_some());
            hit.map(|i| used[i] = true).is_some()
        })
}

fn goal(st: &AlgorithmState) -> ClauseId {
    st.in_cls[0]
}

#[test]
fn reverse_final_set() {
    let out = run(&program(REVERSE), &Config::default()).unwrap();
    let want = program(FINAL_SET).clauses;
    assert!(
        same_set(&out.program.clauses, &want),
        "{:#?}",
        out.program.clauses
    );
    assert_eq!(out.iterations, 3);
    assert_eq!(out.definitions, 3);
    assert!(out.r7_used);
    assert!(out.audit.passed());
    assert!(out.program.clauses.iter().all(|c| c.has_basic_types()));
    assert!(!out.program.has_adts());
}

#[test]
fn basic_program_is_unchanged() {
    let p = program("false :- X>0, p(X).\np(X) :- X=0.\np(X) :- X=Y+1, Y>=0, p(Y).\n");
    let out = run(&p, &Config::default()).unwrap();
    assert_eq!(out.program.clauses, p.clauses);
    assert_eq!(out.definitions, 0);
    assert!(out.trace.is_empty());
}

#[test]
fn no_diff_hits_the_cap() {
    let cfg = Config {
        diff_introduce: false,
        ..Config::default()
    };
    let r = run(&program(REVERSE), &cfg);
    assert!(
        matches!(
            r,
            Err(RemovalError::IterationCapExceeded { iterations: 50, .. })
        ),
        "{r:?}"
    );
}

#[test]
fn deterministic_trace() {
    let p = program(REVERSE);
    let a = run(&p, &Config::default()).unwrap();
    let b = run(&p, &Config::default()).unwrap();
    assert_eq!(a.trace.to_log(), b.trace.to_log());
}

#[test]
fn walkthrough() {
    let p = program(REVERSE);
    let mut st = AlgorithmState::new(&p, Config::default()).unwrap();
    let (e9, case) = st.step(goal(&st)).unwrap();
    assert_eq!(case, Case::Project);
    let def8 = st.new_defs[0];
    let d = st.seq.clause(def8).unwrap();
    let clause8 = with_lists(
        "new1(N0,N1,N2) :- append(Xs,Ys,Zs), rev(Zs,Rs), len(Xs,N0), len(Ys,N1), len(Rs,N2).\n",
    );
    assert!(variant_of(d, &clause8[0]).is_some(), "{d}");
    let clause9 = program("false :- N2=\\=N0+N1, new1(N0,N1,N2).\n").clauses;
    assert!(variant_of(st.seq.clause(e9).unwrap(), &clause9[0]).is_some());

    let unf = st.unfold_proc(&[def8]).unwrap();
    let got: Vec<Clause> = unf
        .iter()
        .map(|&id| st.seq.clause(id).unwrap().clone())
        .collect();
    let want = with_lists(
        "new1(N0,N1,N2) :- N0=0, rev(Zs,Rs), len(Zs,N1), len(Rs,N2).\n\
         new1(N01,N1,N21) :- N01=N0+1, append(Xs,Ys,Zs), rev(Zs,Rs), \
         len(Xs,N0), len(Ys,N1), append(Rs,[X],R1s), len(R1s,N21).\n",
    );
    assert!(same_set(&got, &want), "{got:#?}");

    let rcls = st.replace_proc(&unf);
    let (c10, c11) = (rcls[0], rcls[1]);
    st.new_defs.clear();
    let (_, case) = st.step(c10).unwrap();
    assert_eq!(case, Case::Project);
    let (e14, case) = st.step(c11).unwrap();
    assert_eq!(case, Case::DiffIntroduce);
    let diff = st.seq.clause(*st.new_defs.last().unwrap()).unwrap();
    let clause12 = with_lists("diff(N2,X,N21) :- append(Rs,[X],R1s), len(R1s,N21), len(Rs,N2).\n");
    let renamed = clause12[0].clone();
    assert_eq!(diff.head.as_ref().unwrap().args.len(), 3);
    assert_eq!(diff.body.len(), 3);
    let mut d12 = diff.clone();
    d12.head.as_mut().unwrap().pred = renamed.head.as_ref().unwrap().pred.clone();
    assert!(variant_of(&d12, &renamed).is_some(), "{diff}");
    let e = st.seq.clause(e14).unwrap();
    assert!(e.has_basic_types());
    assert_eq!(e.body.len(), 2);
}

const MK: &str = ":- mode mk(+,-).\n\
    mk(N,L) :- N=0, L=[].\n\
    mk(N,[X|L]) :- N>0, M=N-1, mk(M,L).\n\
    len([],N) :- N=0.\n\
    len([X|Xs],N1) :- N1=N0+1, len(Xs,N0).\n";

#[test]
fn fold_and_generalize() {
    let text = format!(
        "{MK}false :- N=0, M>0, mk(N,L), len(L,M).\n\
         false :- N=1, M>5, mk(N,L), len(L,M).\n\
         false :- N=0, M>3, mk(N,L), len(L,M).\n"
    );
    let p = program(&text);
    let mut st = AlgorithmState::new(&p, Config::default()).unwrap();
    let goals = st.in_cls.clone();
    let (_, case) = st.step(goals[0]).unwrap();
    assert_eq!(case, Case::Project);
    let d = st.seq.clause(st.new_defs[0]).unwrap();
    assert_eq!(d.constraint.atoms().len(), 1, "{d}");
    let (_, case) = st.step(goals[1]).unwrap();
    assert_eq!(case, Case::Generalize);
    let g = st.seq.clause(st.new_defs[1]).unwrap();
    assert!(g.constraint.is_true(), "{g}");
    let (_, case) = st.step(goals[2]).unwrap();
    assert_eq!(case, Case::Fold);
    assert_eq!(st.new_defs.len(), 2);
}

#[test]
fn sources() {
    let p = program(REVERSE);
    let body = &p.clauses[0].body;
    assert_eq!(source_atoms(body, &p.modes).unwrap(), vec![0, 2, 3]);
    assert_eq!(source_atoms(&body[..2], &p.modes).unwrap(), vec![0]);
    assert_eq!(source_atoms(&body[..1], &p.modes).unwrap(), vec![0]);
}

#[test]
fn head_instances() {
    let p = program(REVERSE);
    let ds: Vec<&Clause> = p.clauses[1..].iter().collect();
    let cs = with_lists("q(N) :- append([X|Xs],Ys,Zs), append(Xs,Ys,Zs), len(Xs,N).\n");
    let c = &cs[0];
    let mut fresh = Fresh::for_program(&p);
    assert!(is_head_instance(&c.body[0], c, &ds, &p.modes, &mut fresh));
    assert!(!is_head_instance(&c.body[1], c, &ds, &p.modes, &mut fresh));
    assert!(is_head_instance(&c.body[2], c, &[], &p.modes, &mut fresh));
}

#[test]
fn descending_predicates() {
    let p = program(REVERSE);
    let ds: Vec<&Clause> = p.clauses[1..].iter().collect();
    for name in ["append", "rev", "len"] {
        assert!(is_descending(&name.into(), &ds, &p.modes), "{name}");
    }
    let q = program("p(X) :- p(X).\nr(X) :- X=1.\n");
    let ds: Vec<&Clause> = q.clauses.iter().collect();
    assert!(!is_descending(&"p".into(), &ds, &q.modes));
    assert!(is_descending(&"r".into(), &ds, &q.modes));
}

#[test]
fn replace_removes_duplicates_and_dead_atoms() {
    let p = program(&format!(
        "{REVERSE}false :- N=\\=M, len(Xs,N), len(Xs,M).\nfalse :- N>0, len(Xs,N), rev(Xs,Rs).\nfalse :- N>0, len(Xs,N).\n"
    ));
    let mut st = AlgorithmState::new(&p, Config::default()).unwrap();
    let goals = st.in_cls[1..].to_vec();
    let out = st.replace_proc(&goals);
    let dup = st.seq.clause(out[0]).unwrap();
    assert_eq!(dup.body.len(), 1);
    assert_eq!(dup.constraint.atoms().len(), 2, "{dup}");
    let dead = st.seq.clause(out[1]).unwrap();
    assert_eq!(dead.body.len(), 1, "{dead}");
    assert_eq!(dead.body[0].pred.as_str(), "len");
    assert_eq!(out[2], goals[2]);
}

#[test]
fn definition_heads_are_basic() {
    let out = run(&program(REVERSE), &Config::default()).unwrap();
    let seq = out.trace.replay(&program(REVERSE)).unwrap();
    for &d in seq.definitions() {
        let h = seq.clause(d).unwrap().head.clone().unwrap();
        assert!(!h.has_adts());
    }
}
