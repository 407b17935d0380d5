//! The pipeline behind the `hornstrip` binary: read a problem, remove its
//! data types, optionally hand the result to a solver, and report.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use hornstrip::frontend::{emit_prolog, emit_smtlib, parse, Format};
use hornstrip::removal::{self, Config, RemovalError};
use hornstrip::rules::{RuleTag, Witness};
use hornstrip::{Program, Sym};
use hornstrip_solver::{
    interpret_raw, solve, PipelineAnswer, RawVerdict, SolverConfig, SolverError,
};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Status {
    Verified,
    /// Transformation finished; no solver was asked.
    Transformed,
    Inconclusive(String),
    Cap(String),
    InputError(String),
}

impl Status {
    pub fn exit_code(&self) -> i32 {
        match self {
            Status::Verified | Status::Transformed => 0,
            Status::Inconclusive(_) => 1,
            Status::Cap(_) => 2,
            Status::InputError(_) => 3,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Options {
    pub format: Option<Format>,
    pub removal: Config,
    pub solver: Option<SolverConfig>,
    pub seed_names: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunReport {
    pub problem: String,
    pub clauses_in: usize,
    pub preds_in: usize,
    pub iterations: usize,
    pub definitions: Vec<String>,
    pub r7_uses: usize,
    pub clauses_out: Option<usize>,
    pub audit: String,
    pub verdict: String,
    pub answer: String,
    pub expected: String,
    pub parse_ms: u64,
    pub transform_ms: u64,
    pub solve_ms: u64,
    pub status: Status,
}

/// Column order of the tab-separated report.
pub const COLUMNS: [&str; 15] = [
    "problem",
    "clauses_in",
    "preds_in",
    "iterations",
    "definitions",
    "def_names",
    "r7_uses",
    "clauses_out",
    "audit",
    "verdict",
    "answer",
    "expected",
    "parse_ms",
    "transform_ms",
    "solve_ms",
];

impl RunReport {
    fn new(problem: &str) -> Self {
        RunReport {
            problem: problem.to_string(),
            clauses_in: 0,
            preds_in: 0,
            iterations: 0,
            definitions: vec![],
            r7_uses: 0,
            clauses_out: None,
            audit: "-".into(),
            verdict: "-".into(),
            answer: "-".into(),
            expected: "-".into(),
            parse_ms: 0,
            transform_ms: 0,
            solve_ms: 0,
            status: Status::Transformed,
        }
    }

    pub fn fields(&self, timings: bool) -> Vec<String> {
        let ms = |t: u64| if timings { t.to_string() } else { "-".into() };
        vec![
            self.problem.clone(),
            self.clauses_in.to_string(),
            self.preds_in.to_string(),
            self.iterations.to_string(),
            self.definitions.len().to_string(),
            if self.definitions.is_empty() {
                "-".into()
            } else {
                self.definitions.join(",")
            },
            self.r7_uses.to_string(),
            self.clauses_out.map_or("-".into(), |n| n.to_string()),
            self.audit.clone(),
            self.verdict.clone(),
            self.answer.clone(),
            self.expected.clone(),
            ms(self.parse_ms),
            ms(self.transform_ms),
            ms(self.solve_ms),
        ]
    }

    pub fn tsv_line(&self, timings: bool) -> String {
        self.fields(timings).join("\t")
    }
}

pub fn tsv(reports: &[RunReport], timings: bool) -> String {
    let mut out = COLUMNS.join("\t");
    out.push('\n');
    for r in reports {
        out.push_str(&r.tsv_line(timings));
        out.push('\n');
    }
    out
}

/// Space-aligned rendering of the same columns. Long name lists are
/// shortened to their first and last entries.
pub fn table(reports: &[RunReport], timings: bool) -> String {
    let rows: Vec<Vec<String>> = std::iter::once(COLUMNS.iter().map(|c| c.to_string()).collect())
        .chain(reports.iter().map(|r| {
            let mut f = r.fields(timings);
            if f[5].len() > 40 {
                let first = f[5].split(',').next().unwrap_or_default().to_string();
                let last = r.definitions.last().cloned().unwrap_or_default();
                f[5] = format!("{first},...,{last}");
            }
            f
        }))
        .collect();
    let widths: Vec<usize> = (0..COLUMNS.len())
        .map(|i| rows.iter().map(|r| r[i].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for r in rows {
        let cells: Vec<String> = r
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        let _ = writeln!(out, "{}", cells.join("  ").trim_end());
    }
    out
}

/// What a finished run produced besides its report.
#[derive(Clone, Debug, Default)]
pub struct Artifacts {
    pub smtlib: Option<String>,
    pub prolog: Option<String>,
    pub trace: String,
}

/// The `expect:` annotation in a leading comment, if any.
pub fn expectation(text: &str) -> Option<String> {
    text.lines()
        .map(str::trim_start)
        .take_while(|l| l.is_empty() || l.starts_with('%') || l.starts_with(';'))
        .find_map(|l| {
            let body = l.trim_start_matches(['%', ';']).trim();
            body.strip_prefix("expect:").map(|e| e.trim().to_string())
        })
}

/// Renumbers introduced predicates by first occurrence in `p`, separately
/// for each name stem.
pub fn seed_names(p: &Program, original: &Program) -> Program {
    let mut map: BTreeMap<Sym, Sym> = BTreeMap::new();
    let mut counters: BTreeMap<String, usize> = BTreeMap::new();
    for c in &p.clauses {
        for a in c.head.iter().chain(&c.body) {
            if original.preds.contains_key(&a.pred) || map.contains_key(&a.pred) {
                continue;
            }
            let stem = a
                .pred
                .as_str()
                .trim_end_matches(|ch: char| ch.is_ascii_digit())
                .to_string();
            let n = counters.entry(stem.clone()).or_insert(0);
            *n += 1;
            map.insert(a.pred.clone(), Sym::new(&format!("{stem}{n}")));
        }
    }
    let rn = |s: &Sym| map.get(s).cloned().unwrap_or_else(|| s.clone());
    let mut q = p.clone();
    for c in &mut q.clauses {
        for a in c.head.iter_mut().chain(c.body.iter_mut()) {
            a.pred = rn(&a.pred);
        }
    }
    q.preds = p
        .preds
        .iter()
        .map(|(k, v)| {
            let mut v = v.clone();
            v.name = rn(k);
            (v.name.clone(), v)
        })
        .collect();
    q.modes = p
        .modes
        .iter()
        .map(|(k, m)| {
            let mut m = m.clone();
            m.pred = rn(k);
            (m.pred.clone(), m)
        })
        .collect();
    q.compute_levels();
    q
}

fn ms(t: Instant) -> u64 {
    t.elapsed().as_millis() as u64
}

/// Runs the pipeline on problem text. `name` labels the report.
pub fn run_text(
    name: &str,
    text: &str,
    path: Option<&Path>,
    opts: &Options,
) -> (RunReport, Artifacts) {
    let mut rep = RunReport::new(name);
    let mut art = Artifacts::default();
    if let Some(e) = expectation(text) {
        rep.expected = e;
    }
    let t = Instant::now();
    let format = opts.format.unwrap_or_else(|| Format::detect(path, text));
    let sp = match parse(text, format) {
        Ok(sp) => sp,
        Err(e) => {
            rep.status = Status::InputError(format!("{name}: {e}"));
            return (rep, art);
        }
    };
    rep.parse_ms = ms(t);
    rep.clauses_in = sp.program.clauses.len();
    rep.preds_in = sp.program.preds.len();

    let t = Instant::now();
    let mut st = match removal::AlgorithmState::new(&sp.program, opts.removal.clone()) {
        Ok(st) => st,
        Err(e) => {
            rep.status = Status::InputError(format!("{name}: {e}"));
            return (rep, art);
        }
    };
    let result = st.run();
    let out = st.outcome();
    rep.transform_ms = ms(t);
    art.trace = out.trace.to_log();
    rep.iterations = out.iterations;
    rep.definitions = out
        .trace
        .steps
        .iter()
        .filter_map(|s| match &s.witness {
            Witness::Define { pred, .. } => Some(pred.to_string()),
            _ => None,
        })
        .collect();
    rep.r7_uses = out
        .trace
        .steps
        .iter()
        .filter(|s| s.rule == RuleTag::DiffReplace)
        .count();
    rep.audit = out.audit.to_string();
    if let Err(e) = result {
        rep.status = match e {
            RemovalError::IterationCapExceeded { .. }
            | RemovalError::DefinitionCapExceeded { .. } => Status::Cap(e.to_string()),
            other => Status::Inconclusive(format!("removal failed: {other}")),
        };
        return (rep, art);
    }
    let program = if opts.seed_names {
        seed_names(&out.program, &sp.program)
    } else {
        out.program
    };
    rep.clauses_out = Some(program.clauses.len());
    let smt = emit_smtlib(&program);
    art.prolog = Some(emit_prolog(&program));

    if let Some(cfg) = &opts.solver {
        let t = Instant::now();
        let raw = match solve(&smt, cfg) {
            Ok(v) => v.raw,
            Err(SolverError::SolverNotFound(s)) => {
                RawVerdict::Error(format!("solver not found: {s}"))
            }
            Err(e) => RawVerdict::Error(e.to_string()),
        };
        rep.solve_ms = ms(t);
        rep.verdict = raw.to_string();
        let answer = interpret_raw(&raw, out.r7_used);
        rep.answer = answer.to_string();
        rep.status = match answer {
            PipelineAnswer::Verified => Status::Verified,
            PipelineAnswer::Inconclusive(why) => match raw {
                RawVerdict::Error(e) => Status::Inconclusive(format!("{why}: {e}")),
                _ => Status::Inconclusive(why),
            },
        };
    }
    art.smtlib = Some(smt);
    (rep, art)
}

pub fn run_file(path: &Path, opts: &Options) -> (RunReport, Artifacts) {
    let name = path.file_name().map_or_else(
        || path.display().to_string(),
        |n| n.to_string_lossy().into_owned(),
    );
    match std::fs::read_to_string(path) {
        Ok(text) => run_text(&name, &text, Some(path), opts),
        Err(e) => {
            let mut rep = RunReport::new(&name);
            rep.status = Status::InputError(format!("{}: {e}", path.display()));
            (rep, Artifacts::default())
        }
    }
}

/// Problem files of a directory (`.pl`, `.chc`, `.smt2`), sorted by name.
pub fn corpus(dir: &Path) -> std::io::Result<Vec<std::path::PathBuf>> {
    let mut files: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            matches!(
                p.extension().and_then(|e| e.to_str()),
                Some("pl" | "chc" | "smt2")
            )
        })
        .collect();
    files.sort();
    Ok(files)
}
