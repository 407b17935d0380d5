use std::time::Instant;

use hornstrip::rules::Trace;
use hornstrip_solver::{
    interpret, interpret_raw, solve, PipelineAnswer, RawVerdict, SolverConfig, SolverError,
    SolverVerdict, ENV_CMD, ENV_TIMEOUT,
};

fn shell(script: &str, timeout_ms: u64) -> SolverConfig {
    SolverConfig {
        cmd: format!("sh -c '{script}' {{file}}"),
        timeout_ms,
        ..SolverConfig::default()
    }
}

fn z3() -> Option<SolverConfig> {
    let ok = std::process::Command::new("z3")
        .arg("-version")
        .output()
        .is_ok();
    if !ok {
        eprintln!("z3 not on PATH; skipping");
    }
    ok.then(|| SolverConfig {
        timeout_ms: 60_000,
        ..SolverConfig::default()
    })
}

#[test]
fn only_sat_verifies() {
    let raws = [
        RawVerdict::Sat,
        RawVerdict::Unsat,
        RawVerdict::Unknown,
        RawVerdict::Timeout,
        RawVerdict::Error("x".into()),
    ];
    for r in &raws {
        for r7 in [false, true] {
            let a = interpret_raw(r, r7);
            assert_eq!(
                a == PipelineAnswer::Verified,
                *r == RawVerdict::Sat,
                "{r:?} {r7}"
            );
        }
    }
    assert_eq!(
        interpret_raw(&RawVerdict::Unsat, true),
        PipelineAnswer::Inconclusive("possible false positive".into())
    );
    assert_eq!(
        interpret_raw(&RawVerdict::Timeout, false),
        PipelineAnswer::Inconclusive("solver timeout".into())
    );
    let v = SolverVerdict {
        raw: RawVerdict::Sat,
        elapsed_ms: 0,
        model: None,
    };
    assert_eq!(interpret(&v, &Trace::default()), PipelineAnswer::Verified);
}

#[test]
fn status_line_and_model() {
    let v = solve(
        "(check-sat)\n",
        &shell(
            "cat \"$0\" > /dev/null; echo; echo sat; echo \"(model)\"",
            5_000,
        ),
    )
    .unwrap();
    assert_eq!(v.raw, RawVerdict::Sat);
    assert_eq!(v.model.as_deref(), Some("(model)"));
    let v = solve("", &shell("echo unsat", 5_000)).unwrap();
    assert_eq!(v.raw, RawVerdict::Unsat);
    let v = solve("", &shell("echo unknown", 5_000)).unwrap();
    assert_eq!(v.raw, RawVerdict::Unknown);
}

#[test]
fn problem_reaches_the_solver() {
    // the file argument and the stdin route both see the text
    let v = solve("sat\n", &shell("cat \"$0\"", 5_000)).unwrap();
    assert_eq!(v.raw, RawVerdict::Sat);
    let cfg = SolverConfig {
        cmd: "cat".into(),
        ..SolverConfig::default()
    };
    assert_eq!(solve("unsat\n", &cfg).unwrap().raw, RawVerdict::Unsat);
}

#[test]
fn bad_outputs() {
    let r = solve("", &shell("echo hello", 5_000));
    assert!(matches!(r, Err(SolverError::MalformedOutput(_))), "{r:?}");
    let v = solve("", &shell("echo oops >&2; exit 3", 5_000)).unwrap();
    assert!(
        matches!(v.raw, RawVerdict::Error(ref e) if e.contains("oops")),
        "{v:?}"
    );
    let cfg = SolverConfig {
        cmd: "/nonexistent/solver {file}".into(),
        ..SolverConfig::default()
    };
    assert!(matches!(
        solve("", &cfg),
        Err(SolverError::SolverNotFound(_))
    ));
}

fn alive_with(marker: &str) -> usize {
    let mut n = 0;
    for e in std::fs::read_dir("/proc").unwrap().flatten() {
        if let Ok(cmd) = std::fs::read(e.path().join("cmdline")) {
            let cmd = String::from_utf8_lossy(&cmd).replace('\0', " ");
            if cmd.contains(marker) && !cmd.contains("sh -c") {
                n += 1;
            }
        }
    }
    n
}

#[test]
fn timeout_kills_the_process_group() {
    let t = Instant::now();
    let v = solve("", &shell("sleep 37.25 & sleep 37.25; echo sat", 300)).unwrap();
    assert_eq!(v.raw, RawVerdict::Timeout);
    assert!(t.elapsed().as_secs() < 10);
    std::thread::sleep(std::time::Duration::from_millis(200));
    assert_eq!(alive_with("sleep 37.25"), 0);
}

#[test]
fn config_file_and_overrides() {
    let cfg =
        SolverConfig::from_toml("[solver]\ncmd = \"eld {file}\"\ntimeout_ms = 1000\n").unwrap();
    assert_eq!(cfg.cmd, "eld {file}");
    assert_eq!(cfg.timeout_ms, 1000);
    assert_eq!(cfg.sat_regex, SolverConfig::default().sat_regex);
    assert_eq!(
        SolverConfig::from_toml("").unwrap(),
        SolverConfig::default()
    );
    assert!(SolverConfig::from_toml("[solver]\nbogus = 1\n").is_err());
    let cfg = cfg.with_overrides(|k| match k {
        ENV_CMD => Some("z3 -in".into()),
        ENV_TIMEOUT => Some("250".into()),
        _ => None,
    });
    assert_eq!((cfg.cmd.as_str(), cfg.timeout_ms), ("z3 -in", 250));
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

const EXAMPLE1_P2: &str = ":- mode a(+,-).\n:- mode r(+,-).\n\
    false :- X=0, Y>0, r(X,W), diff(Y,W).\n\
    a(X,Y) :- X=<0, Y=0.\n\
    a(X,Y) :- X>0, Y=1.\n\
    r(X,W) :- W=1.\n\
    diff(Y,W) :- a(X,Y), r(X,W).\n";

fn smt(prolog: &str) -> String {
    let p = hornstrip::frontend::parse_prolog(prolog).unwrap().program;
    hornstrip::frontend::emit_smtlib(&p)
}

#[test]
fn z3_on_known_problems() {
    let Some(cfg) = z3() else { return };
    assert_eq!(solve(&smt(FINAL_SET), &cfg).unwrap().raw, RawVerdict::Sat);
    assert_eq!(
        solve(&smt(EXAMPLE1_P2), &cfg).unwrap().raw,
        RawVerdict::Unsat
    );
}
