use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::acceptance;
use crate::config::{Algorithm, ConfigError, ExperimentConfig};
use crate::problem::{build_problem, Problem};
use crate::run::{qp_reference, run_problem, RunError};
use crate::summary::{summarize, RunSummary};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED_CHECK: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_ABORT: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "vmor", version, about = "Variable-metric over-relaxed HPE solvers: runs, sweeps, reference solutions and acceptance checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run one solver on one problem.
    Solve(SolveArgs),
    /// Run a grid of (algorithm, seed) cells, in parallel across cells.
    Bench(BenchArgs),
    /// Print the reference solution of a QP and its KKT residual.
    Oracle(OracleArgs),
    /// Run the acceptance suite, one PASS/FAIL line per criterion.
    Check(CheckArgs),
}

#[derive(Args, Debug, Default, Clone)]
pub struct SolverFlags {
    /// JSON config file; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub problem: Option<String>,
    #[arg(long)]
    pub sigma: Option<f64>,
    /// `adaptive` or a fixed value.
    #[arg(long)]
    pub theta: Option<String>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub xi0: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// FBHF step.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// PPG step.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Condat-Vu primal weight.
    #[arg(long)]
    pub r: Option<f64>,
    /// Condat-Vu dual weight.
    #[arg(long)]
    pub s: Option<f64>,
    #[arg(long)]
    pub gamma1: Option<f64>,
    #[arg(long)]
    pub gamma2: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[arg(long, value_enum)]
    pub algorithm: Option<Algorithm>,
    #[command(flatten)]
    pub flags: SolverFlags,
    /// Per-iteration CSV trace.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// JSON run summary.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Comma-separated algorithms; all that fit the problem when absent.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub algorithms: Vec<Algorithm>,
    /// Number of seeds, 0..N.
    #[arg(long, default_value_t = 5)]
    pub seeds: u64,
    #[command(flatten)]
    pub flags: SolverFlags,
    /// JSON array of run summaries, ordered by (algorithm, seed).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Run the cells on the calling thread.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    #[arg(long)]
    pub problem: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    /// Only criteria whose name contains this text.
    #[arg(long)]
    pub only: Option<String>,
    /// List the criteria and exit.
    #[arg(long)]
    pub list: bool,
}

fn parse_theta(s: &str) -> Result<Option<f64>, ConfigError> {
    if s.eq_ignore_ascii_case("adaptive") {
        return Ok(None);
    }
    s.parse::<f64>().map(Some).map_err(|_| ConfigError(format!("--theta expects `adaptive` or a number, got {s:?}")))
}

/// The file (or defaults) with every given flag applied on top.
pub fn merge(flags: &SolverFlags, algorithm: Option<Algorithm>) -> Result<ExperimentConfig, ConfigError> {
    let mut c = match &flags.config {
        Some(p) => ExperimentConfig::from_file(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(a) = algorithm {
        c.algorithm = a;
    }
    if let Some(p) = &flags.problem {
        c.problem = p.clone();
    }
    macro_rules! set {
        ($($f:ident),*) => { $( if let Some(v) = flags.$f { c.$f = v; } )* };
    }
    set!(sigma, beta, xi0, tol, max_iters, seed);
    if let Some(t) = &flags.theta {
        c.theta = parse_theta(t)?;
    }
    macro_rules! set_split {
        ($($f:ident),*) => { $( if flags.$f.is_some() { c.splitter.$f = flags.$f; } )* };
    }
    set_split!(gamma, alpha, r, s, gamma1, gamma2, mu, lambda);
    Ok(c)
}

fn write_file(path: &Path, text: &str) -> Result<(), RunError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| RunError::Config(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, text).map_err(|e| RunError::Config(format!("{}: {e}", path.display())))
}

fn exit_code(e: &RunError) -> i32 {
    match e {
        RunError::Config(_) => EXIT_CONFIG,
        RunError::Abort(_) => EXIT_ABORT,
    }
}

fn solve(args: SolveArgs) -> Result<(), RunError> {
    let mut cfg = merge(&args.flags, args.algorithm)?;
    if args.trace.is_some() {
        cfg.trace = args.trace;
    }
    if args.summary.is_some() {
        cfg.summary = args.summary;
    }
    cfg.validate()?;
    let problem = build_problem(&cfg.problem, cfg.seed)?;
    let out = run_problem(&cfg, &problem)?;
    if let Some(p) = &cfg.trace {
        write_file(p, &out.trace.to_csv())?;
    }
    let summary = summarize(&cfg, problem.kind(), &out);
    if let Some(p) = &cfg.summary {
        write_file(p, &summary.to_json())?;
    }
    println!(
        "{} on {}: {:?} after {} iterations in {:.3}s, residual {}",
        cfg.algorithm,
        cfg.problem,
        out.termination,
        out.iterations(),
        out.wall_time_s,
        out.final_residual.map_or("n/a".into(), |r| format!("{r:.3e}"))
    );
    Ok(())
}

/// Replaces or adds `seed=` in a generator descriptor; manifests are left alone.
fn with_seed(desc: &str, seed: u64) -> String {
    if desc.ends_with(".json") || desc.starts_with("manifest:") {
        return desc.to_string();
    }
    let (kind, rest) = desc.split_once(':').unwrap_or((desc, ""));
    let mut parts: Vec<String> = rest.split(',').filter(|p| !p.is_empty() && !p.starts_with("seed=")).map(String::from).collect();
    parts.insert(0, format!("seed={seed}"));
    format!("{kind}:{}", parts.join(","))
}

#[derive(Serialize)]
struct BenchCell {
    algorithm: Algorithm,
    seed: u64,
    summary: Option<RunSummary>,
    error: Option<String>,
}

fn bench(args: BenchArgs) -> Result<bool, RunError> {
    let base = merge(&args.flags, None)?;
    base.validate()?;
    let kind = build_problem(&with_seed(&base.problem, 0), 0)?.kind();
    let algorithms: Vec<Algorithm> = if args.algorithms.is_empty() {
        Algorithm::ALL.into_iter().filter(|a| kind == "qp" || *a == Algorithm::PadmmEbb).collect()
    } else {
        let mut a = args.algorithms.clone();
        a.sort();
        a.dedup();
        a
    };
    let cells: Vec<(Algorithm, u64)> = algorithms.iter().flat_map(|a| (0..args.seeds).map(move |s| (*a, s))).collect();
    let run_cell = |i: usize| {
        let (algorithm, seed) = cells[i];
        let cfg = ExperimentConfig { algorithm, seed, problem: with_seed(&base.problem, seed), trace: None, summary: None, ..base.clone() };
        let result = build_problem(&cfg.problem, seed).map_err(RunError::from).and_then(|p| {
            let out = run_problem(&cfg, &p)?;
            Ok(summarize(&cfg, p.kind(), &out))
        });
        match result {
            Ok(s) => BenchCell { algorithm, seed, summary: Some(s), error: None },
            Err(e) => BenchCell { algorithm, seed, summary: None, error: Some(e.to_string()) },
        }
    };
    let results = vmor::par::map_range_with(cells.len(), vmor::par::is_parallel() && !args.sequential, run_cell);
    let mut all_ok = true;
    for c in &results {
        match (&c.summary, &c.error) {
            (Some(s), _) => println!(
                "{:<10} seed {:>3}  {:>6} iters  {:?}  residual {}  {:.3}s",
                c.algorithm,
                c.seed,
                s.iterations,
                s.termination,
                s.final_values.residual.map_or("n/a".into(), |r| format!("{r:.2e}")),
                s.wall_time_s
            ),
            (None, e) => {
                all_ok = false;
                println!("{:<10} seed {:>3}  error: {}", c.algorithm, c.seed, e.as_deref().unwrap_or(""));
            }
        }
    }
    if let Some(p) = &args.out {
        write_file(p, &(serde_json::to_string_pretty(&results).expect("cells serialize") + "\n"))?;
    }
    Ok(all_ok)
}

#[derive(Serialize)]
struct OracleOut {
    x_star: Vec<f64>,
    y_star: Vec<f64>,
    kkt_residual: f64,
}

fn oracle(args: OracleArgs) -> Result<(), RunError> {
    match build_problem(&args.problem, args.seed)? {
        Problem::Qp(inst) => {
            let (x_star, y_star, kkt_residual) = qp_reference(&inst);
            println!("{}", serde_json::to_string_pretty(&OracleOut { x_star, y_star, kkt_residual }).expect("serializes"));
            Ok(())
        }
        Problem::Lrr(_) => Err(RunError::Config("no reference solution for lrr problems".into())),
    }
}

fn check(args: CheckArgs) -> bool {
    if args.list {
        acceptance::CRITERIA.iter().for_each(|c| println!("{c}"));
        return true;
    }
    let mut all = true;
    let mut count = 0;
    for name in acceptance::CRITERIA.iter().filter(|c| args.only.as_deref().is_none_or(|f| c.contains(f))) {
        if let Some(o) = acceptance::run_criterion(name) {
            println!("{}", o.line());
            all &= o.pass;
            count += 1;
        }
    }
    if count == 0 {
        eprintln!("no criterion matches {:?}", args.only.unwrap_or_default());
        return false;
    }
    all
}

/// Parses `argv` (program name first) and runs the command; returns the exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Solve(a) => solve(a).map(|_| true),
        Command::Bench(a) => bench(a),
        Command::Oracle(a) => oracle(a).map(|_| true),
        Command::Check(a) => Ok(check(a)),
    };
    match result {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_FAILED_CHECK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_are_substituted() {
        assert_eq!(with_seed("qp:seed=4,p=2,n=5,m=3", 7), "qp:seed=7,p=2,n=5,m=3");
        assert_eq!(with_seed("lrr", 1), "lrr:seed=1");
        assert_eq!(with_seed("dir/manifest.json", 1), "dir/manifest.json");
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        fs::write(&p, r#"{"algorithm":"ppg","tol":1e-3,"max_iters":7,"splitter":{"alpha":0.1}}"#).unwrap();
        let flags = SolverFlags { config: Some(p), tol: Some(1e-9), theta: Some("0.2".into()), ..Default::default() };
        let c = merge(&flags, None).unwrap();
        assert_eq!((c.algorithm, c.tol, c.max_iters, c.theta, c.splitter.alpha), (Algorithm::Ppg, 1e-9, 7, Some(0.2), Some(0.1)));
        let c = merge(&SolverFlags { theta: Some("adaptive".into()), ..Default::default() }, Some(Algorithm::Fbhf)).unwrap();
        assert_eq!((c.algorithm, c.theta), (Algorithm::Fbhf, None));
        assert!(merge(&SolverFlags { theta: Some("fast".into()), ..Default::default() }, None).is_err());
    }
}
