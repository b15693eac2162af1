//! Command-line harness: single solves, benchmark sweeps, profiles and
//! hypervolume queries, plus the CSV formats they exchange.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::driver::{solve, EvalRecord, RunHistory, SolverConfig};
use crate::error::{Error, Result};
use crate::metrics::{
    build_reference_front, convergence_profile, data_profile_from_times, hypervolume, solved_at, Front, ProblemRuns,
    ProfileTable, ReferenceFront,
};
use crate::points::EvalStatus;
use crate::problems::{bound_constrained, constrained_problems, external_problem, find_problem, registry, Problem};
use crate::search::{SearchStats, Variant};

/// Tolerances used when none are given.
pub const DEFAULT_EPSILONS: [f64; 3] = [0.01, 0.05, 0.1];

/// Problems run by `bench --smoke`.
pub const SMOKE_PROBLEMS: [&str; 8] = ["zdt1", "zdt2", "fonseca", "kursawe", "dtlz2", "bnh", "srn", "tnk"];
pub const SMOKE_BUDGET: usize = 3000;

#[derive(Debug, Parser)]
#[command(name = "dmultimads", version, about = "Constrained multiobjective direct search")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one problem and write its history and front.
    Solve(SolveArgs),
    /// Run every (problem, variant) pair of the suite and build reference fronts.
    Bench(BenchArgs),
    /// Data and convergence profiles for a benchmark directory.
    Profiles(ProfilesArgs),
    /// Hypervolume of a front CSV.
    Hv(HvArgs),
}

#[derive(Debug, Args, Default)]
pub struct ConfigArgs {
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// File of `key = value` lines overriding the defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Registry problem name (`toy` for the convex test problem).
    #[arg(long, required_unless_present = "external_cmd")]
    pub problem: Option<String>,
    #[arg(long, default_value = "basic")]
    pub variant: String,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub external: ExternalArgs,
}

#[derive(Debug, Args, Default)]
pub struct ExternalArgs {
    /// Blackbox executable: reads `x` on stdin, prints `m + j` numbers.
    #[arg(long, conflicts_with = "problem")]
    pub external_cmd: Option<String>,
    #[arg(long, default_value_t = 2)]
    pub objectives: usize,
    #[arg(long, default_value_t = 0)]
    pub constraints: usize,
    /// Comma-separated lower bounds.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub lower: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub upper: Vec<f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    #[default]
    All,
    Bound,
    Constrained,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Restrict to these problems (repeatable).
    #[arg(long)]
    pub problem: Vec<String>,
    #[arg(long, value_enum, default_value_t = Suite::All)]
    pub suite: Suite,
    /// Variants to run (repeatable); all six by default.
    #[arg(long)]
    pub variant: Vec<String>,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// Budget 3000 on eight problems.
    #[arg(long)]
    pub smoke: bool,
}

#[derive(Debug, Args)]
pub struct ProfilesArgs {
    /// Benchmark output directory.
    #[arg(long)]
    pub dir: PathBuf,
    #[arg(long)]
    pub epsilon: Vec<f64>,
    /// Destination of the data-profile tables (default: `<dir>/profiles`).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct HvArgs {
    #[arg(long)]
    pub front: PathBuf,
    /// Comma-separated reference point.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub reference: Vec<f64>,
}

/// Metadata written next to every run as `run.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunArtifact {
    pub problem: String,
    pub variant: String,
    pub n: usize,
    pub m: usize,
    pub n_constraints: usize,
    pub seed: u64,
    pub budget: usize,
    pub evaluations: usize,
    pub wall_time_s: f64,
    pub config: SolverConfig,
    pub stats: SearchStats,
    pub history: PathBuf,
    pub front: PathBuf,
}

impl RunArtifact {
    pub fn load(dir: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(dir.join("run.json"))?)?)
    }

    pub fn load_history(&self, dir: &Path) -> Result<RunHistory> {
        read_history(&dir.join(&self.history), &self.problem, self.n, self.m, self.n_constraints)
    }
}

/// Summary of a benchmark sweep, written as `bench.json`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BenchManifest {
    pub problems: Vec<String>,
    pub variants: Vec<String>,
    pub budget: usize,
    pub seed: u64,
    /// `(problem, variant, message)` for runs that failed.
    pub failures: Vec<(String, String, String)>,
}

/// Parses and runs one command line, returning the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_usage() {
                2
            } else {
                1
            }
        }
    }
}

pub fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Solve(args) => cmd_solve(&args).map(|_| ()),
        Command::Bench(args) => cmd_bench(&args).map(|_| ()),
        Command::Profiles(args) => {
            let tables = cmd_profiles(&args)?;
            for t in &tables {
                for s in &t.solvers {
                    println!("eps={} {s}: {:.3}", t.epsilon, t.final_fraction(s).unwrap_or(0.0));
                }
            }
            Ok(())
        }
        Command::Hv(args) => {
            println!("{}", format_hv(cmd_hv(&args)?));
            Ok(())
        }
    }
}

/// Applies `key = value` lines to `config`. Blank lines and `#` comments are
/// ignored.
pub fn apply_config_text(config: &mut SolverConfig, text: &str) -> Result<()> {
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
        let (key, value) = (key.trim(), value.trim());
        let bad = || Error::Config(format!("line {}: invalid value `{value}` for `{key}`", lineno + 1));
        fn num<T: FromStr>(v: &str, bad: impl Fn() -> Error) -> Result<T> {
            v.parse().map_err(|_| bad())
        }
        match key {
            "initial_frame" => config.initial_frame = num(value, bad)?,
            "tau" => config.tau = num(value, bad)?,
            "w_plus" => config.w_plus = num(value, bad)?,
            "budget" => config.budget = num(value, bad)?,
            "seed" => config.seed = num(value, bad)?,
            "variant" => config.variant.variant = value.parse()?,
            "opportunistic" => config.variant.opportunistic = num(value, bad)?,
            "rho" => config.rho = num(value, bad)?,
            "inner_budget_per_variable" => config.inner_budget_per_variable = num(value, bad)?,
            "speculative_factor" => config.speculative_factor = num(value, bad)?,
            "nm_expansion" => config.nm.expansion = num(value, bad)?,
            "nm_outside_contraction" => config.nm.outside_contraction = num(value, bad)?,
            "nm_inside_contraction" => config.nm.inside_contraction = num(value, bad)?,
            "nm_radius" => config.nm.radius = num(value, bad)?,
            "nm_budget_base" => config.nm.budget_base = num(value, bad)?,
            "nm_budget_per_variable" => config.nm.budget_per_variable = num(value, bad)?,
            _ => return Err(Error::Config(format!("line {}: unknown key `{key}`", lineno + 1))),
        }
    }
    if !config.nm.is_valid() {
        return Err(Error::Config("Nelder-Mead coefficients out of range".into()));
    }
    if !(config.tau > 0.0 && config.tau < 1.0) || config.initial_frame <= 0.0 || config.rho <= 1.0 {
        return Err(Error::Config("need 0 < tau < 1, initial_frame > 0 and rho > 1".into()));
    }
    Ok(())
}

fn build_config(args: &ConfigArgs, default_budget: usize) -> Result<SolverConfig> {
    let mut config = SolverConfig {
        budget: default_budget,
        ..SolverConfig::default()
    };
    if let Some(path) = &args.config {
        apply_config_text(&mut config, &fs::read_to_string(path)?)?;
    }
    if let Some(b) = args.budget {
        config.budget = b;
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if config.budget == 0 {
        return Err(Error::Config("budget must be positive".into()));
    }
    Ok(config)
}

fn resolve_problem(args: &SolveArgs) -> Result<Problem> {
    match (&args.problem, &args.external.external_cmd) {
        (Some(name), None) => find_problem(name),
        (None, Some(cmd)) => {
            let ext = &args.external;
            if ext.lower.is_empty() || ext.lower.len() != ext.upper.len() {
                return Err(Error::Config("--lower and --upper must list the same number of bounds".into()));
            }
            if ext.lower.iter().zip(&ext.upper).any(|(l, u)| l >= u) {
                return Err(Error::Config("each lower bound must be below its upper bound".into()));
            }
            if ext.objectives == 0 {
                return Err(Error::Config("--objectives must be positive".into()));
            }
            Ok(external_problem(cmd, ext.objectives, ext.constraints, ext.lower.clone(), ext.upper.clone()))
        }
        _ => Err(Error::Config("give exactly one of --problem and --external-cmd".into())),
    }
}

/// Runs one problem and writes `history.csv`, `front.csv` and `run.json` to
/// `out`.
pub fn solve_to_dir(problem: &Problem, config: SolverConfig, out: &Path) -> Result<RunArtifact> {
    fs::create_dir_all(out)?;
    let starts = problem.default_starts()?;
    let t0 = Instant::now();
    let result = solve(problem, &starts, config.clone())?;
    let wall = t0.elapsed().as_secs_f64();
    write_history(&out.join("history.csv"), &result.history)?;
    write_front(&out.join("front.csv"), &result.front, problem.m)?;
    let artifact = RunArtifact {
        problem: problem.name.clone(),
        variant: config.variant.variant.name().to_string(),
        n: problem.n,
        m: problem.m,
        n_constraints: problem.n_constraints,
        seed: config.seed,
        budget: config.budget,
        evaluations: result.history.evaluations.len(),
        wall_time_s: wall,
        config,
        stats: result.stats,
        history: "history.csv".into(),
        front: "front.csv".into(),
    };
    fs::write(out.join("run.json"), serde_json::to_string_pretty(&artifact)?)?;
    Ok(artifact)
}

pub fn cmd_solve(args: &SolveArgs) -> Result<RunArtifact> {
    let variant: Variant = args.variant.parse()?;
    let problem = resolve_problem(args)?;
    let mut config = build_config(&args.config, SolverConfig::default().budget)?;
    config.variant.variant = variant;
    let artifact = solve_to_dir(&problem, config, &args.out)?;
    println!(
        "{} {}: {} evaluations, front size {}",
        artifact.problem,
        artifact.variant,
        artifact.evaluations,
        read_front(&args.out.join("front.csv"))?.len()
    );
    Ok(artifact)
}

/// Problems of the chosen suite, optionally restricted by name.
pub fn select_problems(suite: Suite, names: &[String]) -> Result<Vec<Problem>> {
    let pool = match suite {
        Suite::All => registry(),
        Suite::Bound => bound_constrained(),
        Suite::Constrained => constrained_problems(),
    };
    if names.is_empty() {
        return Ok(pool);
    }
    names
        .iter()
        .map(|name| {
            pool.iter()
                .find(|p| &p.name == name)
                .cloned()
                .map_or_else(|| find_problem(name), Ok)
        })
        .collect()
}

pub fn cmd_bench(args: &BenchArgs) -> Result<BenchManifest> {
    let names: Vec<String> = if args.smoke && args.problem.is_empty() {
        SMOKE_PROBLEMS.iter().map(|s| s.to_string()).collect()
    } else {
        args.problem.clone()
    };
    let problems = select_problems(args.suite, &names)?;
    if problems.is_empty() {
        return Err(Error::Config("no problem matches the filter".into()));
    }
    let variants: Vec<Variant> = if args.variant.is_empty() {
        Variant::ALL.to_vec()
    } else {
        args.variant.iter().map(|v| v.parse()).collect::<Result<_>>()?
    };
    let default_budget = if args.smoke { SMOKE_BUDGET } else { 30_000 };
    let base = build_config(&args.config, default_budget)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.workers.max(1))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;

    let pairs: Vec<(&Problem, Variant)> = problems.iter().flat_map(|p| variants.iter().map(move |&v| (p, v))).collect();
    let outcomes: Vec<(String, String, Result<RunArtifact>)> = pool.install(|| {
        pairs
            .par_iter()
            .map(|&(p, v)| {
                let mut config = base.clone();
                config.variant.variant = v;
                let dir = args.out.join(&p.name).join(v.name());
                (p.name.clone(), v.name().to_string(), solve_to_dir(p, config, &dir))
            })
            .collect()
    });

    let mut manifest = BenchManifest {
        problems: problems.iter().map(|p| p.name.clone()).collect(),
        variants: variants.iter().map(|v| v.name().to_string()).collect(),
        budget: base.budget,
        seed: base.seed,
        failures: Vec::new(),
    };
    for (p, v, r) in &outcomes {
        if let Err(e) = r {
            eprintln!("warning: {p} {v} failed: {e}");
            manifest.failures.push((p.clone(), v.clone(), e.to_string()));
        }
    }
    for p in &problems {
        let fronts: Vec<Front> = outcomes
            .iter()
            .filter(|(name, _, r)| name == &p.name && r.is_ok())
            .map(|(_, v, _)| read_front(&args.out.join(&p.name).join(v).join("front.csv")))
            .collect::<Result<_>>()?;
        let reference = build_reference_front(&fronts);
        write_front(&args.out.join(&p.name).join("reference_front.csv"), &reference.front, p.m)?;
    }
    fs::write(args.out.join("bench.json"), serde_json::to_string_pretty(&manifest)?)?;
    println!(
        "{} runs over {} problems, {} failed",
        outcomes.len(),
        problems.len(),
        manifest.failures.len()
    );
    Ok(manifest)
}

/// Loads every run of a benchmark directory. Problems without a reference
/// front are skipped with a warning.
pub fn load_bench(dir: &Path) -> Result<Vec<ProblemRuns>> {
    let manifest: BenchManifest = serde_json::from_str(&fs::read_to_string(dir.join("bench.json"))?)?;
    let mut out = Vec::new();
    for name in &manifest.problems {
        let ref_path = dir.join(name).join("reference_front.csv");
        if !ref_path.exists() {
            eprintln!("warning: {name}: no reference front, skipped");
            continue;
        }
        let front = read_front(&ref_path)?;
        let mut runs = Vec::new();
        let mut n = 0;
        for v in &manifest.variants {
            let run_dir = dir.join(name).join(v);
            if !run_dir.join("run.json").exists() {
                continue;
            }
            let artifact = RunArtifact::load(&run_dir)?;
            n = artifact.n;
            runs.push((v.clone(), artifact.load_history(&run_dir)?));
        }
        out.push(ProblemRuns {
            name: name.clone(),
            n,
            reference: ReferenceFront {
                discarded: front.is_empty(),
                front,
            },
            runs,
        });
    }
    Ok(out)
}

type Series = Vec<(usize, f64)>;

/// Writes one convergence CSV per run and one data-profile table per
/// tolerance; returns the tables.
pub fn profiles_for(dir: &Path, problems: &[ProblemRuns], epsilons: &[f64], out: &Path) -> Result<Vec<ProfileTable>> {
    fs::create_dir_all(out)?;
    let mut solvers: Vec<String> = Vec::new();
    for p in problems {
        for (s, _) in &p.runs {
            if !solvers.contains(s) {
                solvers.push(s.clone());
            }
        }
    }
    // series[problem][solver]
    let series: Vec<Vec<Option<Series>>> = problems
        .par_iter()
        .map(|p| {
            solvers
                .iter()
                .map(|s| {
                    if p.reference.discarded {
                        return None;
                    }
                    let (_, h) = p.runs.iter().find(|(name, _)| name == s)?;
                    Some(convergence_profile(h, &p.reference.front))
                })
                .collect()
        })
        .collect();
    for (p, row) in problems.iter().zip(&series) {
        for (s, ser) in solvers.iter().zip(row) {
            if let Some(ser) = ser {
                write_convergence(&dir.join(&p.name).join(s).join("convergence.csv"), ser)?;
            }
        }
    }
    let mut tables = Vec::new();
    for &eps in epsilons {
        let times: Vec<Vec<Option<usize>>> = (0..solvers.len())
            .map(|s| {
                series
                    .iter()
                    .map(|row| row[s].as_ref().and_then(|ser| solved_at(ser, eps)))
                    .collect()
            })
            .collect();
        let table = data_profile_from_times(problems, &solvers, &times, eps);
        write_profile_table(&out.join(profile_file_name(eps)), &table)?;
        tables.push(table);
    }
    Ok(tables)
}

pub fn profile_file_name(eps: f64) -> String {
    format!("data_profile_eps{eps}.csv")
}

pub fn cmd_profiles(args: &ProfilesArgs) -> Result<Vec<ProfileTable>> {
    let epsilons: Vec<f64> = if args.epsilon.is_empty() {
        DEFAULT_EPSILONS.to_vec()
    } else {
        args.epsilon.clone()
    };
    if epsilons.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
        return Err(Error::Config("each --epsilon must lie in (0, 1)".into()));
    }
    let problems = load_bench(&args.dir)?;
    let out = args.out.clone().unwrap_or_else(|| args.dir.join("profiles"));
    profiles_for(&args.dir, &problems, &epsilons, &out)
}

pub fn cmd_hv(args: &HvArgs) -> Result<f64> {
    let front = read_front(&args.front)?;
    let m = args.reference.len();
    if let Some(bad) = front.iter().find(|y| y.len() != m) {
        return Err(Error::Csv {
            path: args.front.clone(),
            reason: format!("row has {} values, reference point has {m}", bad.len()),
        });
    }
    Ok(hypervolume(&front, &args.reference))
}

/// 12 significant digits, trailing zeros dropped.
pub fn format_hv(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let s = format!("{v:.11e}");
    let parsed: f64 = s.parse().expect("formatted float parses");
    let plain = format!("{parsed}");
    if plain.len() <= 20 {
        plain
    } else {
        let (mantissa, exp) = s.split_once('e').expect("exponent form");
        let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
        format!("{mantissa}e{exp}")
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Csv {
        path: path.to_path_buf(),
        reason: e.to_string(),
    }
}

fn create(path: &Path) -> Result<csv::Writer<fs::File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    csv::Writer::from_path(path).map_err(|e| csv_err(path, e))
}

fn finish(mut w: csv::Writer<fs::File>) -> Result<()> {
    w.flush()?;
    Ok(())
}

/// Header `eval_index, x1.., f1.., c1.., h`; reals in 17 significant digits.
pub fn write_history(path: &Path, history: &RunHistory) -> Result<()> {
    let mut w = create(path)?;
    let mut header = vec!["eval_index".to_string()];
    header.extend((1..=history.n).map(|i| format!("x{i}")));
    header.extend((1..=history.m).map(|i| format!("f{i}")));
    header.extend((1..=history.n_constraints).map(|i| format!("c{i}")));
    header.push("h".into());
    w.write_record(&header).map_err(|e| csv_err(path, e))?;
    for r in &history.evaluations {
        let mut row = vec![r.index.to_string()];
        row.extend(r.x.iter().map(|&v| fmt(v)));
        row.extend(pad(&r.objectives, history.m).map(fmt));
        row.extend(pad(&r.constraints, history.n_constraints).map(fmt));
        row.push(fmt(r.h));
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    finish(w)
}

fn pad(v: &[f64], len: usize) -> impl Iterator<Item = f64> + '_ {
    (0..len).map(move |i| v.get(i).copied().unwrap_or(f64::INFINITY))
}

fn parse_field(path: &Path, s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| csv_err(path, format!("`{s}` is not a number")))
}

/// Reads a history written by [`write_history`]. Rows with an infinite `h`
/// are marked as hidden failures.
pub fn read_history(path: &Path, problem: &str, n: usize, m: usize, j: usize) -> Result<RunHistory> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let width = 2 + n + m + j;
    let headers = r.headers().map_err(|e| csv_err(path, e))?;
    if headers.len() != width {
        return Err(csv_err(path, format!("expected {width} columns, found {}", headers.len())));
    }
    let mut evaluations = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let vals: Vec<f64> = rec.iter().skip(1).map(|s| parse_field(path, s)).collect::<Result<_>>()?;
        let index: usize = rec[0].parse().map_err(|_| csv_err(path, "bad eval_index"))?;
        let h = vals[n + m + j];
        evaluations.push(EvalRecord {
            index,
            x: vals[..n].to_vec(),
            objectives: vals[n..n + m].to_vec(),
            constraints: vals[n + m..n + m + j].to_vec(),
            h,
            status: if h.is_finite() {
                EvalStatus::Ok
            } else {
                EvalStatus::HiddenFailure
            },
            scaled: Vec::new(),
            anchor: Vec::new(),
            mesh_size: f64::NAN,
        });
    }
    Ok(RunHistory {
        problem: problem.to_string(),
        n,
        m,
        n_constraints: j,
        evaluations,
        iterations: Vec::new(),
    })
}

/// Header `f1..fm`, one objective vector per row.
pub fn write_front(path: &Path, front: &[Vec<f64>], m: usize) -> Result<()> {
    let mut w = create(path)?;
    w.write_record((1..=m).map(|i| format!("f{i}"))).map_err(|e| csv_err(path, e))?;
    for y in front {
        w.write_record(y.iter().map(|&v| fmt(v))).map_err(|e| csv_err(path, e))?;
    }
    finish(w)
}

pub fn read_front(path: &Path) -> Result<Front> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let m = r.headers().map_err(|e| csv_err(path, e))?.len();
    let mut front = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        if rec.len() != m {
            return Err(csv_err(path, format!("expected {m} columns, found {}", rec.len())));
        }
        front.push(rec.iter().map(|s| parse_field(path, s)).collect::<Result<Vec<f64>>>()?);
    }
    Ok(front)
}

/// Header `eval, hv_ratio`.
pub fn write_convergence(path: &Path, series: &[(usize, f64)]) -> Result<()> {
    let mut w = create(path)?;
    w.write_record(["eval", "hv_ratio"]).map_err(|e| csv_err(path, e))?;
    for &(e, r) in series {
        w.write_record([e.to_string(), fmt(r)]).map_err(|e| csv_err(path, e))?;
    }
    finish(w)
}

pub fn read_convergence(path: &Path) -> Result<Vec<(usize, f64)>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    r.records()
        .map(|rec| {
            let rec = rec.map_err(|e| csv_err(path, e))?;
            let e: usize = rec[0].parse().map_err(|_| csv_err(path, "bad eval"))?;
            Ok((e, parse_field(path, &rec[1])?))
        })
        .collect()
}

/// Header `solver, groups, fraction`, one row per solver and budget.
pub fn write_profile_table(path: &Path, table: &ProfileTable) -> Result<()> {
    let mut w = create(path)?;
    w.write_record(["solver", "groups", "fraction"]).map_err(|e| csv_err(path, e))?;
    for (s, row) in table.solvers.iter().zip(&table.fractions) {
        for (g, f) in table.groups.iter().zip(row) {
            w.write_record([s.clone(), g.to_string(), fmt(*f)]).map_err(|e| csv_err(path, e))?;
        }
    }
    finish(w)
}

/// Reads a profile table back; the tolerance and problem count are not stored
/// in the CSV and are left for the caller.
pub fn read_profile_table(path: &Path, epsilon: f64) -> Result<ProfileTable> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let mut solvers: Vec<String> = Vec::new();
    let mut groups: Vec<usize> = Vec::new();
    let mut fractions: Vec<Vec<f64>> = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let s = rec[0].to_string();
        let g: usize = rec[1].parse().map_err(|_| csv_err(path, "bad groups"))?;
        let f = parse_field(path, &rec[2])?;
        if solvers.last() != Some(&s) {
            solvers.push(s);
            fractions.push(Vec::new());
        }
        if solvers.len() == 1 {
            groups.push(g);
        }
        fractions.last_mut().expect("row pushed").push(f);
    }
    Ok(ProfileTable {
        epsilon,
        solvers,
        groups,
        fractions,
        problems: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_text_overrides() {
        let mut c = SolverConfig::default();
        apply_config_text(&mut c, "budget = 77\n# comment\nvariant = quad-dom\n\nrho = 3 # trailing\n").unwrap();
        assert_eq!(c.budget, 77);
        assert_eq!(c.variant.variant, Variant::QuadDom);
        assert_eq!(c.rho, 3.0);
        assert!(apply_config_text(&mut c, "nope = 1").unwrap_err().is_usage());
        assert!(apply_config_text(&mut c, "tau = 2").is_err());
        assert!(apply_config_text(&mut c, "budget").is_err());
    }

    #[test]
    fn hv_formatting() {
        assert_eq!(format_hv(1.0), "1");
        assert_eq!(format_hv(0.75), "0.75");
        assert_eq!(format_hv(0.0), "0");
        assert_eq!(format_hv(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_hv(2.0 / 3.0 * 1e-9), "6.66666666667e-10");
    }

    #[test]
    fn profile_table_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let t = ProfileTable {
            epsilon: 0.1,
            solvers: vec!["a".into(), "b".into()],
            groups: vec![0, 1, 2],
            fractions: vec![vec![0.0, 0.5, 1.0], vec![0.0, 0.0, 0.5]],
            problems: 0,
        };
        let p = dir.path().join("t.csv");
        write_profile_table(&p, &t).unwrap();
        assert_eq!(read_profile_table(&p, 0.1).unwrap(), t);
    }
}
