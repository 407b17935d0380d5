use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use hornstrip::frontend::Format;
use hornstrip::removal::Config;
use hornstrip_cli::{corpus, run_file, table, tsv, Artifacts, Options, RunReport, Status};
use hornstrip_solver::SolverConfig;

#[derive(Parser)]
#[command(
    name = "hornstrip",
    version,
    about = "Remove algebraic data types from constrained Horn clauses"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write the ADT-free clauses as SMT-LIB (or Prolog for a .pl output).
    Transform(Common),
    /// Transform, then run the solver on the result.
    Solve {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Run every problem of a directory and print a report table.
    Bench {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        solver: SolverArgs,
        /// Write tab-separated report lines here.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Skip the solver.
        #[arg(long)]
        no_solve: bool,
        /// Print `-` instead of timings.
        #[arg(long)]
        no_timings: bool,
        #[arg(long, default_value_t = 4)]
        jobs: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Prolog,
    Smtlib,
    Auto,
}

#[derive(Args)]
struct Common {
    /// Problem file (a directory for `bench`).
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "auto")]
    format: FormatArg,
    /// Output file (a directory for `bench`).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Trace log file (a directory for `bench`).
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Disable difference predicates.
    #[arg(long)]
    no_diff: bool,
    #[arg(long, default_value_t = 50)]
    max_iterations: usize,
    /// Number introduced predicates by first occurrence in the output.
    #[arg(long)]
    seed_names: bool,
}

#[derive(Args)]
struct SolverArgs {
    /// Command template; `{file}` stands for the problem file.
    #[arg(long)]
    solver_cmd: Option<String>,
    #[arg(long)]
    timeout_ms: Option<u64>,
    /// TOML file with a `[solver]` table.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Common {
    fn options(&self) -> Options {
        Options {
            format: match self.format {
                FormatArg::Prolog => Some(Format::Prolog),
                FormatArg::Smtlib => Some(Format::Smtlib),
                FormatArg::Auto => None,
            },
            removal: Config {
                diff_introduce: !self.no_diff,
                max_iterations: self.max_iterations,
                ..Config::default()
            },
            solver: None,
            seed_names: self.seed_names,
        }
    }
}

impl SolverArgs {
    fn config(&self) -> Result<SolverConfig> {
        let base = match &self.config {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading {}", p.display()))?;
                SolverConfig::from_toml(&text)
                    .with_context(|| format!("parsing {}", p.display()))?
            }
            None => SolverConfig::default(),
        };
        let mut cfg = base.with_env();
        if let Some(c) = &self.solver_cmd {
            cfg.cmd = c.clone();
        }
        if let Some(t) = self.timeout_ms {
            cfg.timeout_ms = t;
        }
        Ok(cfg)
    }
}

fn write_artifacts(common: &Common, art: &Artifacts) -> Result<()> {
    if let Some(t) = &common.trace {
        std::fs::write(t, &art.trace).with_context(|| format!("writing {}", t.display()))?;
    }
    let Some(out) = &common.output else {
        if let Some(s) = &art.smtlib {
            print!("{s}");
        }
        return Ok(());
    };
    let prolog = out.extension().is_some_and(|e| e == "pl");
    let text = if prolog { &art.prolog } else { &art.smtlib };
    if let Some(text) = text {
        std::fs::write(out, text).with_context(|| format!("writing {}", out.display()))?;
    }
    Ok(())
}

fn single(common: &Common, opts: &Options) -> Result<Status> {
    let (rep, art) = run_file(&common.input, opts);
    write_artifacts(common, &art)?;
    eprint!("{}", table(std::slice::from_ref(&rep), true));
    match &rep.status {
        Status::InputError(e) | Status::Cap(e) | Status::Inconclusive(e) => eprintln!("{e}"),
        Status::Verified | Status::Transformed => {}
    }
    Ok(rep.status)
}

fn bench(
    common: &Common,
    opts: &Options,
    report: Option<&Path>,
    no_timings: bool,
    jobs: usize,
) -> Result<Status> {
    let files =
        corpus(&common.input).with_context(|| format!("reading {}", common.input.display()))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()?;
    let results: Vec<(RunReport, Artifacts)> =
        pool.install(|| files.par_iter().map(|f| run_file(f, opts)).collect());
    for dir in [&common.trace, &common.output].into_iter().flatten() {
        std::fs::create_dir_all(dir)?;
    }
    for (rep, art) in &results {
        if let Some(dir) = &common.trace {
            std::fs::write(dir.join(format!("{}.trace", rep.problem)), &art.trace)?;
        }
        if let (Some(dir), Some(s)) = (&common.output, &art.smtlib) {
            std::fs::write(dir.join(format!("{}.smt2", rep.problem)), s)?;
        }
    }
    let reports: Vec<RunReport> = results.into_iter().map(|(r, _)| r).collect();
    print!("{}", table(&reports, !no_timings));
    if let Some(p) = report {
        std::fs::write(p, tsv(&reports, !no_timings))?;
    }
    Ok(Status::Transformed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Transform(common) => single(common, &common.options()),
        Cmd::Solve { common, solver } => solver.config().and_then(|cfg| {
            let mut opts = common.options();
            opts.solver = Some(cfg);
            single(common, &opts)
        }),
        Cmd::Bench {
            common,
            solver,
            report,
            no_solve,
            no_timings,
            jobs,
        } => solver.config().and_then(|cfg| {
            let mut opts = common.options();
            opts.solver = (!no_solve).then_some(cfg);
            bench(common, &opts, report.as_deref(), *no_timings, *jobs)
        }),
    };
    match result {
        Ok(status) => ExitCode::from(status.exit_code() as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
