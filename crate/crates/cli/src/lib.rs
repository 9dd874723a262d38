//! Command-line front end for the criticality solver.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qtt_nte::criticality::{solve_alpha, solve_keff, EigenOptions, EigenResult, MatvecMode};
use qtt_nte::report::{compare, ReportFormat, SolveKind, SolveReport};
use qtt_nte::transport::{OperatorSet, ProblemFile, Representation, TransportProblem};
use qtt_nte::{NteError, Result};

mod suite;

pub use suite::{run_suite, SuiteFile, SuiteRun};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "nte", version, about = "Discrete-ordinates criticality solver in dense, TT and QTT form")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solve one problem and write a report.
    Solve(SolveArgs),
    /// Compare two or more JSON reports of the same problem.
    Compare(CompareArgs),
    /// Run every solve listed in a suite file.
    Suite(SuiteArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Dense,
    Tt,
    Qtt,
}

impl From<ModeArg> for Representation {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Dense => Representation::Dense,
            ModeArg::Tt => Representation::Tt,
            ModeArg::Qtt => Representation::Qtt,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SolveArg {
    Keff,
    Alpha,
}

impl From<SolveArg> for SolveKind {
    fn from(s: SolveArg) -> Self {
        match s {
            SolveArg::Keff => SolveKind::Keff,
            SolveArg::Alpha => SolveKind::Alpha,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Json,
    Csv,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Json => ReportFormat::Json,
            FormatArg::Csv => ReportFormat::Csv,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MatvecArg {
    Exact,
    Fit,
}

#[derive(Args, Debug, Clone)]
pub struct SolveArgs {
    /// Problem definition (TOML).
    #[arg(long)]
    pub problem: PathBuf,
    #[arg(long, value_enum, default_value = "dense")]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value = "keff")]
    pub solve: SolveArg,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 500)]
    pub max_outer: usize,
    #[arg(long, default_value_t = 0x5eed)]
    pub seed: u64,
    /// Report destination; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// `json` writes the full report, `csv` the iteration history.
    #[arg(long, value_enum, default_value = "json")]
    pub format: FormatArg,
    /// Overrides the quadrature order N from the problem file.
    #[arg(long)]
    pub quadrature: Option<usize>,
    /// Overrides the node count of every axis.
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Multiplies every spatial extent.
    #[arg(long)]
    pub scale: Option<f64>,
    #[arg(long, value_enum, default_value = "exact")]
    pub matvec: MatvecArg,
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    /// JSON reports; the file stem labels each one.
    #[arg(required = true, num_args = 2..)]
    pub reports: Vec<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: FormatArg,
}

#[derive(Args, Debug)]
pub struct SuiteArgs {
    /// Suite definition (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Directory receiving one report per run plus a summary.
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

/// Everything needed to run one solve.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub problem_path: PathBuf,
    pub mode: Representation,
    pub solve: SolveKind,
    pub tol: f64,
    pub max_outer: usize,
    pub seed: u64,
    pub output_path: Option<PathBuf>,
    pub report_format: ReportFormat,
    pub quadrature: Option<usize>,
    pub nodes: Option<usize>,
    pub scale: Option<f64>,
    pub matvec: MatvecMode,
}

impl From<&SolveArgs> for RunConfig {
    fn from(a: &SolveArgs) -> Self {
        RunConfig {
            problem_path: a.problem.clone(),
            mode: a.mode.into(),
            solve: a.solve.into(),
            tol: a.tol,
            max_outer: a.max_outer,
            seed: a.seed,
            output_path: a.out.clone(),
            report_format: a.format.into(),
            quadrature: a.quadrature,
            nodes: a.nodes,
            scale: a.scale,
            matvec: match a.matvec {
                MatvecArg::Exact => MatvecMode::Exact,
                MatvecArg::Fit => MatvecMode::Fit,
            },
        }
    }
}

impl RunConfig {
    pub fn new(problem_path: impl Into<PathBuf>, mode: Representation, solve: SolveKind) -> Self {
        RunConfig {
            problem_path: problem_path.into(),
            mode,
            solve,
            tol: 1e-6,
            max_outer: 500,
            seed: 0x5eed,
            output_path: None,
            report_format: ReportFormat::Json,
            quadrature: None,
            nodes: None,
            scale: None,
            matvec: MatvecMode::Exact,
        }
    }

    pub fn eigen_options(&self) -> EigenOptions {
        EigenOptions {
            tol: self.tol,
            max_outer: self.max_outer,
            seed: self.seed,
            matvec: self.matvec,
            ..Default::default()
        }
    }

    pub fn load_problem(&self) -> Result<TransportProblem> {
        let mut file = ProblemFile::read(&self.problem_path)?;
        if let Some(n) = self.quadrature {
            file.quadrature.n = n;
        }
        if let Some(n) = self.nodes {
            file.set_nodes(n);
        }
        let p = file.into_problem()?;
        match self.scale {
            Some(f) => p.scaled_extent(f),
            None => Ok(p),
        }
    }
}

/// Exit code for an error, following `0 ok / 2 usage / 3 convergence / 4 numerical`.
pub fn exit_code(err: &NteError) -> i32 {
    match err.root() {
        NteError::Validation(_)
        | NteError::Parse(_)
        | NteError::Io(_)
        | NteError::Capacity { .. }
        | NteError::Unsupported(_)
        | NteError::NoFission => EXIT_USAGE,
        NteError::NotConverged(_) | NteError::Stagnation(_) => EXIT_NOT_CONVERGED,
        NteError::Singular(_) | NteError::Shape(_) | NteError::Context { .. } => EXIT_NUMERICAL,
    }
}

/// Outcome of [`run`]: a report whenever the problem could be assembled.
#[derive(Debug)]
pub struct RunOutcome {
    pub report: Option<SolveReport>,
    pub error: Option<NteError>,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        self.error.as_ref().map_or(EXIT_OK, exit_code)
    }
}

/// Loads, assembles and solves. Assembly and input errors give no report;
/// solver errors give a partial one.
pub fn run(config: &RunConfig) -> RunOutcome {
    let fail = |e: NteError| RunOutcome {
        report: None,
        error: Some(e),
    };
    let opts = config.eigen_options();
    if let Err(e) = opts.validate() {
        return fail(e);
    }
    let problem = match config.load_problem() {
        Ok(p) => p,
        Err(e) => return fail(e),
    };
    let t0 = Instant::now();
    let ops = match OperatorSet::assemble(&problem, config.mode) {
        Ok(o) => o,
        Err(e) => return fail(e),
    };
    let assembly = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    let solved: Result<EigenResult> = match config.solve {
        SolveKind::Keff => solve_keff(&ops, &opts),
        SolveKind::Alpha => solve_alpha(&ops, &opts),
    };
    match solved {
        Ok(r) => RunOutcome {
            report: Some(SolveReport::from_result(&problem, &ops, config.solve, &opts, &r, assembly)),
            error: None,
        },
        Err(e) => {
            let elapsed = t1.elapsed().as_secs_f64();
            RunOutcome {
                report: Some(SolveReport::from_error(&problem, &ops, config.solve, &opts, &e, assembly, elapsed)),
                error: Some(e),
            }
        }
    }
}

pub fn render_report(report: &SolveReport, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => report.to_json(),
        ReportFormat::Csv => report.history_csv(),
    }
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(p, text).map_err(|e| NteError::Io(e).context(p.display().to_string()))
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            if !text.ends_with('\n') {
                out.write_all(b"\n")?;
            }
            Ok(())
        }
    }
}

fn summary(report: &SolveReport) -> String {
    let value = report
        .eigenvalue
        .map_or_else(|| "none".to_string(), |v| format!("{v:.10}"));
    format!(
        "{} {} {}: eigenvalue {value}, {} iterations, {:.3}s, H compression {:.3e}",
        report.problem.name, report.mode, report.solve, report.iterations, report.wall_time_seconds, report.h_compression
    )
}

fn solve_command(args: &SolveArgs) -> i32 {
    let config = RunConfig::from(args);
    let outcome = run(&config);
    if let Some(report) = &outcome.report {
        eprintln!("{}", summary(report));
        let written = render_report(report, config.report_format)
            .and_then(|text| write_output(config.output_path.as_deref(), &text));
        if let Err(e) = written {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    }
    if let Some(e) = &outcome.error {
        eprintln!("error: {e}");
    }
    outcome.exit_code()
}

fn label_of(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

pub fn compare_files(paths: &[PathBuf], format: ReportFormat) -> Result<String> {
    let reports = paths
        .iter()
        .map(|p| Ok((label_of(p), SolveReport::from_file(p)?)))
        .collect::<Result<Vec<_>>>()?;
    let c = compare(&reports)?;
    match format {
        ReportFormat::Json => c.to_json(),
        ReportFormat::Csv => Ok(format!("{}\n{}", c.rows_csv()?, c.pairs_csv()?)),
    }
}

fn compare_command(args: &CompareArgs) -> i32 {
    match compare_files(&args.reports, args.format.into()).and_then(|t| write_output(args.out.as_deref(), &t)) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn suite_command(args: &SuiteArgs) -> i32 {
    match run_suite(&args.config, &args.out, args.jobs) {
        Ok(outcomes) => {
            for (label, code, line) in &outcomes {
                eprintln!("[{label}] exit {code}: {line}");
            }
            outcomes.iter().map(|(_, c, _)| *c).max().unwrap_or(EXIT_OK)
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Runs the parsed command and returns the process exit code.
pub fn dispatch(cli: &Cli) -> i32 {
    match &cli.command {
        Command::Solve(a) => solve_command(a),
        Command::Compare(a) => compare_command(a),
        Command::Suite(a) => suite_command(a),
    }
}

pub(crate) fn outcome_line(outcome: &RunOutcome) -> String {
    match (&outcome.report, &outcome.error) {
        (Some(r), None) => summary(r),
        (_, Some(e)) => e.to_string(),
        (None, None) => String::new(),
    }
}
