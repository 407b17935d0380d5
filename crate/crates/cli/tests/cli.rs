use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hornstrip_cli::{expectation, seed_names, tsv, COLUMNS};

fn bench(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../bench")
        .join(name)
}

fn hornstrip(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hornstrip"))
        .args(args)
        .env_remove("HORNSTRIP_SOLVER_CMD")
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn transform_writes_basic_smtlib() {
    let rev = bench("reverse.pl");
    let o = hornstrip(&["transform", "--input", rev.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let smt = String::from_utf8(o.stdout).unwrap();
    assert_eq!(smt.matches("(assert ").count(), 7);
    assert!(!smt.contains("declare-datatype"));
    assert!(smt.trim_end().ends_with("(check-sat)"));
}

#[test]
fn output_extension_picks_the_format() {
    let dir = tempfile::tempdir().unwrap();
    let rev = bench("reverse.pl");
    let pl = dir.path().join("out.pl");
    let smt = dir.path().join("out.smt2");
    let trace = dir.path().join("out.trace");
    for out in [&pl, &smt] {
        let o = hornstrip(&[
            "transform",
            "--input",
            rev.to_str().unwrap(),
            "--output",
            out.to_str().unwrap(),
            "--trace",
            trace.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
    }
    let prolog = std::fs::read_to_string(&pl).unwrap();
    let p = hornstrip::frontend::parse_prolog(&prolog).unwrap().program;
    assert_eq!(p.clauses.len(), 7);
    assert!(!p.has_adts());
    assert!(std::fs::read_to_string(&smt)
        .unwrap()
        .starts_with("(set-logic HORN)"));
    let log = std::fs::read_to_string(&trace).unwrap();
    assert!(log.lines().next().unwrap().contains("R1 define"));
}

#[test]
fn input_errors_exit_3_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.pl");
    std::fs::write(&bad, "false :- p(X.\n").unwrap();
    let o = hornstrip(&["transform", "--input", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let e = stderr(&o);
    assert!(e.contains("bad.pl: line 1, column 13"), "{e}");
    let o = hornstrip(&["transform", "--input", "/nonexistent/x.pl"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn caps_exit_2() {
    let rev = bench("reverse.pl");
    let o = hornstrip(&[
        "transform",
        "--no-diff",
        "--max-iterations",
        "5",
        "--input",
        rev.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(
        stderr(&o).contains("no termination after 5 iterations"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn solver_answers_map_to_exit_codes() {
    let rev = bench("reverse.pl");
    let rev = rev.to_str().unwrap();
    let run = |cmd: &str| {
        hornstrip(&[
            "solve",
            "--input",
            rev,
            "--solver-cmd",
            cmd,
            "--timeout-ms",
            "5000",
        ])
    };
    let o = run("sh -c 'echo sat'");
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("Verified"));
    let o = run("sh -c 'echo unsat'");
    assert_eq!(o.status.code(), Some(1));
    assert!(
        stderr(&o).contains("possible false positive"),
        "{}",
        stderr(&o)
    );
    assert_eq!(run("sh -c 'echo unknown'").status.code(), Some(1));
    assert_eq!(run("/nonexistent/solver {file}").status.code(), Some(1));
    let o = hornstrip(&[
        "solve",
        "--input",
        rev,
        "--solver-cmd",
        "sh -c 'sleep 5'",
        "--timeout-ms",
        "200",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("solver timeout"));
}

#[test]
fn solver_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("solver.toml");
    std::fs::write(
        &cfg,
        "[solver]\ncmd = \"sh -c 'echo proved'\"\nsat_regex = \"^proved$\"\n",
    )
    .unwrap();
    let rev = bench("reverse.pl");
    let o = hornstrip(&[
        "solve",
        "--input",
        rev.to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    std::fs::write(&cfg, "[solver]\nbogus = 1\n").unwrap();
    let o = hornstrip(&[
        "solve",
        "--input",
        rev.to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn bench_report_columns() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    std::fs::create_dir(&corpus).unwrap();
    for f in ["reverse.pl", "len_nonneg.pl"] {
        std::fs::copy(bench(f), corpus.join(f)).unwrap();
    }
    std::fs::write(corpus.join("broken.pl"), "p(.\n").unwrap();
    let report = dir.path().join("r.tsv");
    let o = hornstrip(&[
        "bench",
        "--no-solve",
        "--no-timings",
        "--input",
        corpus.to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&report).unwrap();
    let lines: Vec<Vec<&str>> = text.lines().map(|l| l.split('\t').collect()).collect();
    assert_eq!(lines[0], COLUMNS);
    let names: Vec<&str> = lines[1..].iter().map(|l| l[0]).collect();
    assert_eq!(names, ["broken.pl", "len_nonneg.pl", "reverse.pl"]);
    assert!(lines.iter().all(|l| l.len() == COLUMNS.len()));
    let rev = &lines[3];
    assert_eq!(
        &rev[1..9],
        ["7", "3", "3", "3", "new1,new2,diff1", "2", "7", "pass"]
    );
    assert_eq!(&rev[12..], ["-", "-", "-"]);
    assert_eq!(tsv(&[], false), format!("{}\n", COLUMNS.join("\t")));
}

#[test]
fn expectation_comments() {
    assert_eq!(
        expectation("% a problem\n% expect: verified\nfalse.\n").as_deref(),
        Some("verified")
    );
    assert_eq!(
        expectation("; expect: cap\n(check-sat)\n").as_deref(),
        Some("cap")
    );
    assert_eq!(expectation("false.\n% expect: verified\n"), None);
}

#[test]
fn seeded_names_follow_output_order() {
    let text = std::fs::read_to_string(bench("reverse.pl")).unwrap();
    let p0 = hornstrip::frontend::parse_prolog(&text).unwrap().program;
    let out = hornstrip::removal::run(&p0, &Default::default()).unwrap();
    let mut p = out.program.clone();
    // pretend earlier definitions were discarded
    let bump = |s: &hornstrip::Sym| match s.as_str() {
        "new1" => hornstrip::Sym::new("new7"),
        "new2" => hornstrip::Sym::new("new9"),
        _ => s.clone(),
    };
    for c in &mut p.clauses {
        for a in c.head.iter_mut().chain(c.body.iter_mut()) {
            a.pred = bump(&a.pred);
        }
    }
    p.preds = p
        .preds
        .into_values()
        .map(|mut v| {
            v.name = bump(&v.name);
            (v.name.clone(), v)
        })
        .collect();
    p.modes = p
        .modes
        .into_values()
        .map(|mut m| {
            m.pred = bump(&m.pred);
            (m.pred.clone(), m)
        })
        .collect();
    let q = seed_names(&p, &p0);
    assert!(hornstrip::subst::variant_clauses(
        &q.clauses,
        &out.program.clauses
    ));
    assert!(q.preds.contains_key(&hornstrip::Sym::new("new2")));
}
