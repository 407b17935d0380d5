//! End-to-end acceptance checks. Each check prints one PASS/FAIL line; the
//! test fails if any check does.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use hornstrip::frontend::{emit_smtlib, parse_prolog};
use hornstrip::removal::{self, Config, RemovalError};
use hornstrip::rules::{RuleTag, Sequence, Witness};
use hornstrip::{Atom, Clause, ClauseId, Program, Sym};
use hornstrip_cli::{corpus, run_file, Options, Status};
use hornstrip_solver::{interpret_raw, solve, PipelineAnswer, RawVerdict, SolverConfig};

type Check = Result<String, String>;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn bench_dir() -> PathBuf {
    root().join("bench")
}

fn program(text: &str) -> Program {
    parse_prolog(text).unwrap().program
}

fn reverse() -> Program {
    program(&std::fs::read_to_string(bench_dir().join("reverse.pl")).unwrap())
}

fn solver() -> Option<SolverConfig> {
    let cfg = SolverConfig::default().with_env();
    let exe = shlex::split(&cfg.cmd)?.into_iter().next()?;
    Command::new(&exe)
        .arg("-version")
        .output()
        .ok()
        .map(|_| cfg)
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

fn rename_preds(cs: &[Clause], map: &[(Sym, Sym)]) -> Vec<Clause> {
    let rn = |a: &Atom| {
        let mut a = a.clone();
        if let Some((_, to)) = map.iter().find(|(from, _)| *from == a.pred) {
            a.pred = to.clone();
        }
        a
    };
    cs.iter()
        .map(|c| {
            Clause::new(
                c.head.as_ref().map(rn),
                c.constraint.clone(),
                c.body.iter().map(rn).collect(),
            )
        })
        .collect()
}

fn same_set(got: &[Clause], want: &[Clause]) -> bool {
    let mut used = vec![false; got.len()];
    got.len() == want.len()
        && want.iter().all(|w| {
            let hit =
                (0..got.len()).find(|&i| !used[i] && hornstrip::variant_of(&got[i], w).is_some());
            hit.map(|i| used[i] = true).is_some()
        })
}

/// Equal as clause sets up to variables and a renaming of the predicates
/// outside `fixed`.
fn same_modulo_preds(got: &[Clause], want: &[Clause], fixed: &BTreeSet<Sym>) -> bool {
    let fresh = |cs: &[Clause]| -> Vec<Sym> {
        let s: BTreeSet<Sym> = cs
            .iter()
            .flat_map(|c| c.preds().cloned())
            .filter(|p| !fixed.contains(p))
            .collect();
        s.into_iter().collect()
    };
    let (g, w) = (fresh(got), fresh(want));
    g.len() == w.len()
        && permutations(g.len()).into_iter().any(|perm| {
            let map: Vec<(Sym, Sym)> = perm
                .iter()
                .enumerate()
                .map(|(i, &j)| (g[i].clone(), w[j].clone()))
                .collect();
            same_set(&rename_preds(got, &map), want)
        })
}

const FINAL_SET: &str = "\
false :- N2=\\=N0+N1, new1(N0,N1,N2).
new1(N0,N1,N2) :- N0=0, new2(N1,N2).
new1(N0,N1,N2) :- N0=N+1, new1(N,N1,M), diff(M,X,N2).
new2(M,N) :- M=0, N=0.
new2(M1,N1) :- M1=M+1, new2(M,N), diff(N,X,N1).
diff(N0,X,N1) :- N0=0, N1=1.
diff(N0,X,N1) :- N0=N+1, N1=M+1, diff(N,X,M).
";

/// Clauses read in the context of the list predicates of the problem.
fn in_context(extra: &str) -> Vec<Clause> {
    let text = std::fs::read_to_string(bench_dir().join("reverse.pl")).unwrap();
    let base = program(&text).clauses.len();
    program(&format!("{text}{extra}")).clauses[base..].to_vec()
}

fn golden_derivation() -> Check {
    let p0 = reverse();
    let t = Instant::now();
    let out = removal::run(&p0, &Config::default()).map_err(|e| e.to_string())?;
    let elapsed = t.elapsed();
    let fixed: BTreeSet<Sym> = p0.preds.keys().cloned().collect();
    if out.program.clauses.len() != 7 || out.program.has_adts() {
        return Err(format!(
            "{} clauses, adts={}",
            out.program.clauses.len(),
            out.program.has_adts()
        ));
    }
    if !same_modulo_preds(&out.program.clauses, &program(FINAL_SET).clauses, &fixed) {
        return Err("final set differs".into());
    }
    let steps = &out.trace.steps;
    let find = |rule: RuleTag, inputs: &[u32]| {
        let ins: Vec<ClauseId> = inputs.iter().map(|&n| ClauseId(n)).collect();
        steps
            .iter()
            .find(|s| s.rule == rule && (ins.is_empty() || s.inputs == ins))
    };
    let def8 = find(RuleTag::Define, &[]).ok_or("no definition")?;
    if def8.output_ids() != [ClauseId(8)] {
        return Err("first definition is not clause 8".into());
    }
    let fold9 = find(RuleTag::Fold, &[1]).ok_or("clause 1 never folded")?;
    if fold9.output_ids() != [ClauseId(9)] {
        return Err("fold of clause 1 is not clause 9".into());
    }
    let unf = find(RuleTag::Unfold, &[8]).ok_or("clause 8 never unfolded")?;
    if unf.output_ids() != [ClauseId(10), ClauseId(11)] {
        return Err("unfolding clause 8 does not give clauses 10 and 11".into());
    }
    // clause 12: the difference definition
    let want12 = in_context(":- pred diff(int,int,int).\ndiff(N2,X,N21) :- append(Rs,[X],R1s), len(R1s,N21), len(Rs,N2).\n");
    let diff_def = steps
        .iter()
        .filter(|s| s.rule == RuleTag::Define)
        .find(|s| {
            let Witness::Define { pred, .. } = &s.witness else {
                return false;
            };
            let c = s.outputs.first();
            c.is_some_and(|c| same_modulo_preds(std::slice::from_ref(c), &want12, &fixed))
                && pred.as_str().starts_with("diff")
        })
        .ok_or("no definition matching clause 12")?;
    let d12 = diff_def.output_ids()[0];
    // clause 13: R7 with that definition on the unfolded descendant of 11
    let want13 = in_context(
        ":- pred diff(int,int,int).\n:- pred new1(int,int,int).\n\
         new1(N01,N1,N21) :- N01=N0+1, append(Xs,Ys,Zs), rev(Zs,Rs), len(Xs,N0), len(Ys,N1), len(Rs,N2), diff(N2,X,N21).\n",
    );
    let r7 = steps
        .iter()
        .find(|s| {
            s.rule == RuleTag::DiffReplace
                && matches!(&s.witness, Witness::DiffReplace { definition, .. } if *definition == d12)
                && s.outputs.first().is_some_and(|c| same_modulo_preds(std::slice::from_ref(c), &want13, &fixed))
        })
        .ok_or("no R7 step giving clause 13")?;
    let c13 = r7.output_ids()[0];
    let want14 = in_context(
        ":- pred diff(int,int,int).\n:- pred new1(int,int,int).\n\
         new1(N01,N1,N21) :- N01=N0+1, new1(N0,N1,N2), diff(N2,X,N21).\n",
    );
    let fold14 = steps
        .iter()
        .find(|s| s.rule == RuleTag::Fold && s.inputs == [c13])
        .ok_or("clause 13 never folded")?;
    let c14 = fold14.outputs.first().ok_or("missing clause")?;
    if !matches!(&fold14.witness, Witness::Fold { definition, .. } if *definition == ClauseId(8))
        || !same_modulo_preds(std::slice::from_ref(c14), &want14, &fixed)
    {
        return Err("fold of clause 13 is not clause 14".into());
    }
    if elapsed.as_secs_f64() >= 5.0 {
        return Err(format!("took {elapsed:?}"));
    }
    Ok(format!(
        "7 clauses, key steps c8 c9 c10/c11 {d12} {c13} {}, {} ms",
        fold14.output_ids()[0],
        elapsed.as_millis()
    ))
}

struct CorpusRun {
    name: String,
    status: Status,
    audit: String,
    smtlib: Option<String>,
    clauses_out: Option<usize>,
}

fn run_corpus(solver: Option<SolverConfig>) -> Vec<CorpusRun> {
    let opts = Options {
        solver,
        ..Options::default()
    };
    corpus(&bench_dir())
        .unwrap()
        .iter()
        .map(|f| {
            let (rep, art) = run_file(f, &opts);
            CorpusRun {
                name: rep.problem,
                status: rep.status,
                audit: rep.audit,
                smtlib: art.smtlib,
                clauses_out: rep.clauses_out,
            }
        })
        .collect()
}

fn successful(runs: &[CorpusRun]) -> impl Iterator<Item = &CorpusRun> {
    runs.iter().filter(|r| r.smtlib.is_some())
}

fn audits(runs: &[CorpusRun]) -> Check {
    let ok: Vec<&CorpusRun> = successful(runs).collect();
    let bad: Vec<&str> = ok
        .iter()
        .filter(|r| r.audit != "pass")
        .map(|r| r.name.as_str())
        .collect();
    if ok.is_empty() || !bad.is_empty() {
        return Err(format!(
            "audit failed on {bad:?} ({} successful runs)",
            ok.len()
        ));
    }
    Ok(format!("{} successful runs, all pass", ok.len()))
}

#[derive(Debug)]
enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

fn sexps(text: &str) -> Vec<Sexp> {
    let spaced = text.replace('(', " ( ").replace(')', " ) ");
    let mut stack: Vec<Vec<Sexp>> = vec![vec![]];
    for tok in spaced.split_whitespace() {
        match tok {
            "(" => stack.push(vec![]),
            ")" => {
                let l = stack.pop().unwrap();
                stack.last_mut().unwrap().push(Sexp::List(l));
            }
            t => stack.last_mut().unwrap().push(Sexp::Atom(t.to_string())),
        }
    }
    stack.pop().unwrap()
}

/// Sorts of every declared predicate argument and every bound variable.
fn sorts_in(e: &Sexp, out: &mut Vec<String>) {
    let Sexp::List(items) = e else { return };
    let head = match items.first() {
        Some(Sexp::Atom(h)) => h.as_str(),
        _ => "",
    };
    match (head, items.as_slice()) {
        ("declare-fun", [_, _, Sexp::List(args), ..]) => {
            for a in args {
                match a {
                    Sexp::Atom(s) => out.push(s.clone()),
                    Sexp::List(_) => out.push("<compound sort>".into()),
                }
            }
        }
        ("forall" | "exists", [_, Sexp::List(binds), ..]) => {
            for b in binds {
                match b {
                    Sexp::List(vs) if vs.len() == 2 => match &vs[1] {
                        Sexp::Atom(s) => out.push(s.clone()),
                        Sexp::List(_) => out.push("<compound sort>".into()),
                    },
                    _ => out.push("<bad binder>".into()),
                }
            }
        }
        ("declare-datatypes" | "declare-datatype" | "declare-sort", _) => {
            out.push(format!("<{head}>"))
        }
        _ => {}
    }
    for i in items {
        sorts_in(i, out);
    }
}

fn basic_types(runs: &[CorpusRun]) -> Check {
    let mut clauses = 0;
    for r in successful(runs) {
        let text = r.smtlib.as_deref().unwrap();
        let es = sexps(text);
        let mut sorts = Vec::new();
        for e in &es {
            sorts_in(e, &mut sorts);
        }
        if let Some(s) = sorts.iter().find(|s| *s != "Int" && *s != "Bool") {
            return Err(format!("{}: sort {s}", r.name));
        }
        let asserts = es
            .iter()
            .filter(|e| matches!(e, Sexp::List(l) if matches!(l.first(), Some(Sexp::Atom(a)) if a == "assert")))
            .count();
        if Some(asserts) != r.clauses_out {
            return Err(format!(
                "{}: {asserts} asserts for {:?} clauses",
                r.name, r.clauses_out
            ));
        }
        clauses += asserts;
    }
    if clauses == 0 {
        return Err("no clauses scanned".into());
    }
    Ok(format!("{clauses} output clauses scanned, all Int/Bool"))
}

const EXAMPLE1_D: &str = ":- mode a(+,-).\n:- mode r(+,-).\ndiff(Y,W) :- a(X,Y), r(X,W).\n";

fn example_1(cfg: Option<&SolverConfig>) -> Check {
    let p0 = program(&std::fs::read_to_string(bench_dir().join("example1.pl")).unwrap());
    let mut seq = Sequence::new(&p0).map_err(|e| e.to_string())?;
    let d = program(EXAMPLE1_D).clauses.remove(0);
    let d = seq
        .define(Clause::new(d.head, d.constraint, d.body))
        .map_err(|e| e.to_string())?;
    let goal = p0.clauses.iter().find(|c| c.is_goal()).ok_or("no goal")?.id;
    let e = seq
        .diff_replace(goal, d, &[0], &Default::default())
        .map_err(|e| e.to_string())?;
    let want_e =
        program(":- mode r(+,-).\n:- pred diff(int,int).\nfalse :- X=0, Y>0, r(X,W), diff(Y,W).\n")
            .clauses;
    if hornstrip::variant_of(seq.clause(e).unwrap(), &want_e[0]).is_none() {
        return Err(format!("E is {}", seq.clause(e).unwrap()));
    }
    let p2 = seq.program();
    let want_p2 = program(&format!(
        "{}false :- X=0, Y>0, r(X,W), diff(Y,W).\ndiff(Y,W) :- a(X,Y), r(X,W).\n",
        std::fs::read_to_string(bench_dir().join("example1.pl"))
            .unwrap()
            .replace("false :- X=0, Y>0, a(X,Y).\n", "")
    ));
    if !same_set(&p2.clauses, &want_p2.clauses) {
        return Err("P2 is not {E,1,2,3,D}".into());
    }
    let cfg = cfg.ok_or("no solver available")?;
    let v0 = solve(&emit_smtlib(&p0), cfg)
        .map_err(|e| e.to_string())?
        .raw;
    let v2 = solve(&emit_smtlib(&p2), cfg)
        .map_err(|e| e.to_string())?
        .raw;
    if v0 != RawVerdict::Sat || v2 != RawVerdict::Unsat {
        return Err(format!("P0 {v0}, P2 {v2}"));
    }
    let answer = interpret_raw(&v2, seq.trace().uses(RuleTag::DiffReplace));
    if answer != PipelineAnswer::Inconclusive("possible false positive".into()) {
        return Err(format!("answer {answer}"));
    }
    Ok(format!("P0 sat, P2 unsat, answer {answer}"))
}

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hornstrip"))
}

fn ablation() -> Check {
    let p0 = reverse();
    let no_diff = Config {
        diff_introduce: false,
        ..Config::default()
    };
    let r = removal::run(&p0, &no_diff);
    if !matches!(r, Err(RemovalError::IterationCapExceeded { .. })) {
        return Err(format!(
            "without diff: {:?}",
            r.map(|o| o.program.clauses.len())
        ));
    }
    let with = removal::run(&p0, &Config::default()).map_err(|e| format!("with diff: {e}"))?;
    if with.program.has_adts() {
        return Err("with diff: ADTs remain".into());
    }
    let input = bench_dir().join("reverse.pl");
    let code = cli()
        .args([
            "transform",
            "--no-diff",
            "--max-iterations",
            "20",
            "--input",
        ])
        .arg(&input)
        .output()
        .map_err(|e| e.to_string())?
        .status
        .code();
    if code != Some(2) {
        return Err(format!("cli exit {code:?}"));
    }
    Ok(format!(
        "no-diff: cap (cli exit 2); diff: {} clauses",
        with.program.clauses.len()
    ))
}

/// Runs one of the core crate's randomized suites through cargo. The time
/// limit applies to the suite itself, as reported by the test harness, not
/// to any rebuild cargo does first.
fn oracle_suite(test: &str, limit_s: Option<f64>) -> Check {
    let cargo = std::env::var("CARGO").unwrap_or_else(|_| "cargo".into());
    let out = Command::new(cargo)
        .current_dir(root())
        .args(["test", "-q", "-p", "hornstrip", "--test", test])
        .output()
        .map_err(|e| e.to_string())?;
    let stdout = String::from_utf8_lossy(&out.stdout);
    let summary = stdout
        .lines()
        .find(|l| l.starts_with("test result:"))
        .unwrap_or("")
        .to_string();
    if !out.status.success() || !summary.contains(" 0 failed") {
        let err = String::from_utf8_lossy(&out.stderr);
        return Err(format!("{summary} {}", err.lines().last().unwrap_or("")));
    }
    let secs: f64 = summary
        .rsplit("finished in ")
        .next()
        .and_then(|t| t.trim().trim_end_matches('s').parse().ok())
        .ok_or_else(|| format!("no runtime in `{summary}`"))?;
    let summary = summary.trim_start_matches("test result: ");
    match limit_s {
        Some(l) if secs >= l => Err(format!("{summary} (limit {l} s)")),
        _ => Ok(summary.to_string()),
    }
}

fn corpus_outcome(runs: &[CorpusRun], have_solver: bool) -> Check {
    if !have_solver {
        return Err("no solver available".into());
    }
    let verified: Vec<&str> = runs
        .iter()
        .filter(|r| r.status == Status::Verified)
        .map(|r| r.name.as_str())
        .collect();
    let line = format!("{} of {} Verified", verified.len(), runs.len());
    if verified.len() >= 8 {
        Ok(line)
    } else {
        Err(line)
    }
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for i in 0..2 {
        let report = dir.path().join(format!("report{i}.tsv"));
        let traces = dir.path().join(format!("traces{i}"));
        let out = cli()
            .args(["bench", "--no-timings", "--jobs", "4", "--input"])
            .arg(bench_dir())
            .arg("--report")
            .arg(&report)
            .arg("--trace")
            .arg(&traces)
            .output()
            .map_err(|e| e.to_string())?;
        let mut files = vec![(
            "report".to_string(),
            std::fs::read(&report).map_err(|e| e.to_string())?,
        )];
        files.push(("table".into(), out.stdout));
        let mut names: Vec<PathBuf> = std::fs::read_dir(&traces)
            .map_err(|e| e.to_string())?
            .flatten()
            .map(|e| e.path())
            .collect();
        names.sort();
        for n in names {
            files.push((
                n.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&n).unwrap(),
            ));
        }
        outputs.push(files);
    }
    if outputs[0] != outputs[1] {
        return Err("bench outputs differ between runs".into());
    }
    Ok(format!(
        "{} files identical across two runs",
        outputs[0].len()
    ))
}

#[test]
fn acceptance() {
    let cfg = solver();
    let runs = run_corpus(cfg.clone());
    let checks: Vec<(&str, Check)> = vec![
        ("golden derivation", golden_derivation()),
        ("condition (U) audit on the corpus", audits(&runs)),
        ("basic-typed output", basic_types(&runs)),
        ("false positive via R7", example_1(cfg.as_ref())),
        ("ablation without difference predicates", ablation()),
        (
            "constraint oracle suite",
            oracle_suite("constraint_oracle", Some(60.0)),
        ),
        ("core oracle suite", oracle_suite("core_oracle", None)),
        ("mini-corpus outcome", corpus_outcome(&runs, cfg.is_some())),
        ("bench determinism", determinism()),
    ];
    let mut out = String::new();
    for (i, (name, r)) in checks.iter().enumerate() {
        match r {
            Ok(d) => out.push_str(&format!("criterion {}: PASS  {name}: {d}\n", i + 1)),
            Err(d) => out.push_str(&format!("criterion {}: FAIL  {name}: {d}\n", i + 1)),
        }
    }
    std::io::stdout().write_all(out.as_bytes()).unwrap();
    assert!(checks.iter().all(|(_, r)| r.is_ok()), "{out}");
}
