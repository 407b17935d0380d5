//! Runs an external CHC solver on an SMT-LIB problem and reads its answer.
//!
//! Solvers are described by configuration only: a command template and
//! three regexes for the status line.

use std::io::{Read, Write};
use std::os::unix::process::CommandExt;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use hornstrip::rules::{RuleTag, Trace};
use regex::Regex;
use serde::Deserialize;
use thiserror::Error;
use wait_timeout::ChildExt;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("solver executable not found: {0}")]
    SolverNotFound(String),
    #[error("no status line in solver output: {0:?}")]
    MalformedOutput(String),
    #[error("bad command template `{0}`")]
    BadTemplate(String),
    #[error("bad regex: {0}")]
    BadRegex(#[from] regex::Error),
    #[error("bad config: {0}")]
    BadConfig(#[from] toml::de::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq, Eq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Command line; `{file}` is replaced by the problem path. Without the
    /// placeholder the problem goes to standard input.
    pub cmd: String,
    pub timeout_ms: u64,
    pub sat_regex: String,
    pub unsat_regex: String,
    pub unknown_regex: String,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            cmd: "z3 {file}".into(),
            timeout_ms: 300_000,
            sat_regex: r"^sat$".into(),
            unsat_regex: r"^unsat$".into(),
            unknown_regex: r"^(unknown|timeout)$".into(),
        }
    }
}

#[derive(Deserialize)]
struct ConfigFile {
    #[serde(default)]
    solver: SolverConfig,
}

pub const ENV_CMD: &str = "HORNSTRIP_SOLVER_CMD";
pub const ENV_TIMEOUT: &str = "HORNSTRIP_SOLVER_TIMEOUT_MS";

impl SolverConfig {
    /// Reads the `[solver]` table of a TOML document.
    pub fn from_toml(text: &str) -> Result<Self, SolverError> {
        Ok(toml::from_str::<ConfigFile>(text)?.solver)
    }

    /// Applies overrides from `lookup` (normally the process environment).
    pub fn with_overrides(mut self, lookup: impl Fn(&str) -> Option<String>) -> Self {
        if let Some(c) = lookup(ENV_CMD) {
            self.cmd = c;
        }
        if let Some(t) = lookup(ENV_TIMEOUT).and_then(|t| t.trim().parse().ok()) {
            self.timeout_ms = t;
        }
        for (key, slot) in [
            ("HORNSTRIP_SOLVER_SAT_REGEX", &mut self.sat_regex),
            ("HORNSTRIP_SOLVER_UNSAT_REGEX", &mut self.unsat_regex),
            ("HORNSTRIP_SOLVER_UNKNOWN_REGEX", &mut self.unknown_regex),
        ] {
            if let Some(v) = lookup(key) {
                *slot = v;
            }
        }
        self
    }

    pub fn with_env(self) -> Self {
        self.with_overrides(|k| std::env::var(k).ok())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RawVerdict {
    Sat,
    Unsat,
    Unknown,
    Timeout,
    Error(String),
}

impl std::fmt::Display for RawVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RawVerdict::Sat => f.write_str("sat"),
            RawVerdict::Unsat => f.write_str("unsat"),
            RawVerdict::Unknown => f.write_str("unknown"),
            RawVerdict::Timeout => f.write_str("timeout"),
            RawVerdict::Error(_) => f.write_str("error"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolverVerdict {
    pub raw: RawVerdict,
    pub elapsed_ms: u64,
    /// Output after the status line, verbatim (a model, when printed).
    pub model: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PipelineAnswer {
    Verified,
    Inconclusive(String),
}

impl std::fmt::Display for PipelineAnswer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PipelineAnswer::Verified => f.write_str("Verified"),
            PipelineAnswer::Inconclusive(r) => write!(f, "Inconclusive({r})"),
        }
    }
}

/// Only satisfiability of the transformed set carries back to the input.
pub fn interpret(verdict: &SolverVerdict, trace: &Trace) -> PipelineAnswer {
    interpret_raw(&verdict.raw, trace.uses(RuleTag::DiffReplace))
}

pub fn interpret_raw(raw: &RawVerdict, r7_used: bool) -> PipelineAnswer {
    let why = match raw {
        RawVerdict::Sat => return PipelineAnswer::Verified,
        RawVerdict::Unsat if r7_used => "possible false positive",
        RawVerdict::Unsat => "unsat transformed set",
        RawVerdict::Unknown => "solver unknown",
        RawVerdict::Timeout => "solver timeout",
        RawVerdict::Error(_) => "solver error",
    };
    PipelineAnswer::Inconclusive(why.into())
}

struct Matchers {
    sat: Regex,
    unsat: Regex,
    unknown: Regex,
}

/// The first non-empty output line decides the status.
fn classify(out: &str, m: &Matchers) -> Option<(RawVerdict, Option<String>)> {
    let mut lines = out.lines();
    let first = lines.by_ref().map(str::trim).find(|l| !l.is_empty())?;
    let raw = if m.unsat.is_match(first) {
        RawVerdict::Unsat
    } else if m.sat.is_match(first) {
        RawVerdict::Sat
    } else if m.unknown.is_match(first) {
        RawVerdict::Unknown
    } else {
        return None;
    };
    let rest: Vec<&str> = lines.collect();
    let model = (!rest.iter().all(|l| l.trim().is_empty())).then(|| rest.join("\n"));
    Some((raw, model))
}

fn drain(r: Option<impl Read + Send + 'static>) -> std::thread::JoinHandle<String> {
    std::thread::spawn(move || {
        let mut s = String::new();
        if let Some(mut r) = r {
            let _ = r.read_to_string(&mut s);
        }
        s
    })
}

/// Runs the configured solver on `problem`. The solver runs in its own
/// process group, which is killed as a whole at the timeout.
pub fn solve(problem: &str, cfg: &SolverConfig) -> Result<SolverVerdict, SolverError> {
    let m = Matchers {
        sat: Regex::new(&cfg.sat_regex)?,
        unsat: Regex::new(&cfg.unsat_regex)?,
        unknown: Regex::new(&cfg.unknown_regex)?,
    };
    let mut file = tempfile::Builder::new()
        .prefix("hornstrip-")
        .suffix(".smt2")
        .tempfile()?;
    file.write_all(problem.as_bytes())?;
    file.flush()?;
    let path = file.path().to_string_lossy().into_owned();
    let words = shlex::split(&cfg.cmd)
        .filter(|w| !w.is_empty())
        .ok_or_else(|| SolverError::BadTemplate(cfg.cmd.clone()))?;
    let via_stdin = !words.iter().any(|w| w.contains("{file}"));
    let words: Vec<String> = words.iter().map(|w| w.replace("{file}", &path)).collect();
    let mut cmd = Command::new(&words[0]);
    cmd.args(&words[1..])
        .stdin(if via_stdin {
            Stdio::piped()
        } else {
            Stdio::null()
        })
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .process_group(0);
    let start = Instant::now();
    let mut child = match cmd.spawn() {
        Ok(c) => c,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(SolverError::SolverNotFound(words[0].clone()))
        }
        Err(e) => return Err(e.into()),
    };
    if let Some(mut stdin) = child.stdin.take() {
        let text = problem.to_owned();
        std::thread::spawn(move || {
            let _ = stdin.write_all(text.as_bytes());
        });
    }
    let out = drain(child.stdout.take());
    let err = drain(child.stderr.take());
    let status = child.wait_timeout(Duration::from_millis(cfg.timeout_ms))?;
    let pgid = child.id() as libc::pid_t;
    let status = match status {
        Some(s) => Some(s),
        None => {
            // SAFETY: signalling our own child's process group.
            unsafe {
                libc::killpg(pgid, libc::SIGKILL);
            }
            let _ = child.wait();
            None
        }
    };
    // descendants that outlived the leader must not keep the pipes open
    unsafe {
        libc::killpg(pgid, libc::SIGKILL);
    }
    let elapsed_ms = start.elapsed().as_millis() as u64;
    let stdout = out.join().unwrap_or_default();
    let stderr = err.join().unwrap_or_default();
    let Some(status) = status else {
        return Ok(SolverVerdict {
            raw: RawVerdict::Timeout,
            elapsed_ms,
            model: None,
        });
    };
    match classify(&stdout, &m) {
        Some((raw, model)) => Ok(SolverVerdict {
            raw,
            elapsed_ms,
            model,
        }),
        None if !status.success() => Ok(SolverVerdict {
            raw: RawVerdict::Error(format!("{status}: {}", stderr.trim())),
            elapsed_ms,
            model: None,
        }),
        None => Err(SolverError::MalformedOutput(stdout)),
    }
}
