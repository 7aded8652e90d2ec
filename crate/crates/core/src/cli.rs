//! Command-line front end: `solve`, `generate`, `bench` and `oracle-check`.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Mutex;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;

use crate::chain::Backend;
use crate::error::SolveError;
use crate::format::{parse_game, serialize_game};
use crate::game::{Game, MinStrategy};
use crate::generators::{example_5node, gen_catmouse, gen_richman, random_small_game, CatMouseConfig, RichmanConfig, SmallGameConfig};
use crate::oracles::{brute_force_value, value_iteration_slope, DEFAULT_CAP};
use crate::two_player::{solve, SolveOptions, SolveReport, StopReason};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INPUT: u8 = 1;
pub const EXIT_SOLVER: u8 = 2;
pub const EXIT_CYCLE: u8 = 3;

/// Header of the CSV written by `bench`.
pub const BENCH_HEADER: &str = "size,seed,iter_outer,iter_inner,degenerate,strongly_degenerate,residual,seconds";

#[derive(Parser, Debug)]
#[command(name = "mppi", version, about = "Policy iteration for mean-payoff stochastic games")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solve a game given in ZSG v1 format.
    Solve(SolveArgs),
    /// Write a benchmark instance in ZSG v1 format.
    Generate(GenerateArgs),
    /// Solve seeded Richman instances and write one CSV row per instance.
    Bench(BenchArgs),
    /// Compare the solver with brute force and value iteration on small games.
    OracleCheck(OracleArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SolverKind {
    Lu,
    Sor,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

#[derive(Args, Debug, Clone)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 1e-12)]
    pub eps_g: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub eps_eta: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub eps_v: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_outer: usize,
    /// Linear solver for large final classes.
    #[arg(long, value_enum, default_value_t = SolverKind::Sor)]
    pub solver: SolverKind,
    #[arg(long, default_value_t = 1.0)]
    pub sor_omega: f64,
    /// Skip the spectral projection at degenerate iterations.
    #[arg(long)]
    pub naive: bool,
    /// Cold inner starts and no single-component shortcut.
    #[arg(long)]
    pub strict_trace: bool,
    #[arg(long, value_enum, default_value_t = Switch::On)]
    pub warm_start: Switch,
}

impl SolverArgs {
    pub fn options(&self) -> SolveOptions {
        let mut o = SolveOptions { max_outer: self.max_outer, naive: self.naive, strict_trace: self.strict_trace, ..Default::default() };
        o.tol.eps_g = self.eps_g;
        o.tol.eps_eta = self.eps_eta;
        o.tol.eps_v = self.eps_v;
        o.warm_start = self.warm_start == Switch::On;
        o.linear.backend = match self.solver {
            SolverKind::Lu => Backend::Lu,
            SolverKind::Sor => Backend::Sor,
        };
        o.linear.sor.omega = self.sor_omega;
        o
    }
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Print the JSON report instead of the text summary.
    #[arg(long)]
    pub json: bool,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Initial MIN strategy as comma-separated 0-based action indices.
    #[arg(long)]
    pub sigma0: Option<String>,
    /// Replace the inner bias at outer iteration K, as `K:v1,v2,...`. Repeatable.
    #[arg(long = "inject-bias", value_name = "K:V")]
    pub inject_bias: Vec<String>,
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[command(subcommand)]
    pub kind: GenerateKind,
}

#[derive(Subcommand, Debug)]
pub enum GenerateKind {
    /// Tug-of-war game on a random graph with 0/1 arc weights.
    Richman {
        #[arg(long)]
        nodes: usize,
        #[arg(long, default_value_t = 10)]
        degree: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pursuit-evasion game on an m x m grid; also writes `<out>.coords`.
    Catmouse {
        #[arg(long)]
        grid: usize,
        #[arg(long)]
        speed: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// The five-state example with two critical classes.
    Example5 {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Comma-separated list of sizes.
    #[arg(long, default_value = "1000")]
    pub sizes: String,
    #[arg(long, default_value_t = 10)]
    pub seeds: u64,
    #[arg(long, default_value_t = 0)]
    pub first_seed: u64,
    #[arg(long, default_value_t = 10)]
    pub degree: usize,
    /// Worker threads; `MPPI_THREADS` overrides it.
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    #[arg(long, default_value_t = 200)]
    pub count: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Test hook: add this to every solver slope before comparing.
    #[arg(long, default_value_t = 0.0, hide = true)]
    pub perturb_eta: f64,
}

/// The `--json` document of `solve`.
#[derive(Serialize, Debug)]
pub struct JsonReport {
    pub eta: Vec<f64>,
    pub v: Vec<f64>,
    pub sigma: Vec<usize>,
    pub delta: Vec<usize>,
    pub iterations_outer: usize,
    pub iterations_inner_total: usize,
    pub degenerate: usize,
    pub strongly_degenerate: usize,
    pub residual: f64,
    pub stop_reason: &'static str,
    pub wall_seconds: f64,
    pub trace: Vec<JsonTrace>,
}

#[derive(Serialize, Debug)]
pub struct JsonTrace {
    pub iteration: usize,
    pub changed_states: usize,
    pub eta_change: f64,
    pub degenerate: bool,
    pub critical_components: Option<usize>,
    pub inner_iterations: usize,
    pub projection_iterations: usize,
}

impl From<&SolveReport> for JsonReport {
    fn from(r: &SolveReport) -> Self {
        JsonReport {
            eta: r.halfline.eta.clone(),
            v: r.halfline.v.clone(),
            sigma: r.sigma.0.clone(),
            delta: r.delta.0.clone(),
            iterations_outer: r.iterations_outer,
            iterations_inner_total: r.iterations_inner_total,
            degenerate: r.degenerate,
            strongly_degenerate: r.strongly_degenerate,
            residual: r.residual,
            stop_reason: r.stop_reason.as_str(),
            wall_seconds: r.wall_seconds,
            trace: r
                .trace
                .iter()
                .map(|t| JsonTrace {
                    iteration: t.iteration,
                    changed_states: t.changed_states,
                    eta_change: t.eta_change,
                    degenerate: t.degenerate,
                    critical_components: t.critical_components,
                    inner_iterations: t.inner_iterations,
                    projection_iterations: t.projection_iterations,
                })
                .collect(),
        }
    }
}

/// Parses and runs the command line.
pub fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    ExitCode::from(run(cli.command, &mut io::stdout().lock()))
}

/// Runs one command, writing its report to `out`, and returns the exit status.
pub fn run(command: Command, out: &mut dyn Write) -> u8 {
    let result = match command {
        Command::Solve(a) => cmd_solve(&a, out),
        Command::Generate(a) => cmd_generate(&a, out),
        Command::Bench(a) => cmd_bench(&a, out),
        Command::OracleCheck(a) => cmd_oracle_check(&a, out),
    };
    result.unwrap_or_else(|(code, msg)| {
        eprintln!("error: {msg}");
        code
    })
}

type CmdResult = Result<u8, (u8, String)>;

fn input_err(msg: impl ToString) -> (u8, String) {
    (EXIT_INPUT, msg.to_string())
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, (u8, String)> {
    s.split(',').map(|t| t.trim().parse().map_err(|_| input_err(format!("invalid {what} entry `{t}`")))).collect()
}

fn parse_injections(items: &[String]) -> Result<BTreeMap<usize, Vec<f64>>, (u8, String)> {
    let mut out = BTreeMap::new();
    for item in items {
        let (k, v) = item.split_once(':').ok_or_else(|| input_err(format!("--inject-bias expects K:v1,...; got `{item}`")))?;
        let k: usize = k.trim().parse().map_err(|_| input_err(format!("invalid iteration `{k}`")))?;
        out.insert(k, parse_list(v, "bias")?);
    }
    Ok(out)
}

fn read_game(path: &Path) -> Result<Game, (u8, String)> {
    let text = fs::read_to_string(path).map_err(|e| input_err(format!("{}: {e}", path.display())))?;
    parse_game(&text).map_err(|e| input_err(format!("{}: {e}", path.display())))
}

fn io_err(e: io::Error) -> (u8, String) {
    input_err(e)
}

fn cmd_solve(a: &SolveArgs, out: &mut dyn Write) -> CmdResult {
    let game = read_game(&a.input)?;
    let mut opts = a.solver.options();
    opts.injections = parse_injections(&a.inject_bias)?;
    let sigma0 = match &a.sigma0 {
        Some(s) => MinStrategy(parse_list(s, "sigma0")?),
        None => MinStrategy::lowest(game.n_states()),
    };
    game.check_min_strategy(&sigma0).map_err(input_err)?;
    let rep = match solve(&game, &sigma0, &opts) {
        Ok(rep) => rep,
        Err(e @ SolveError::BadInjection { .. }) => return Err(input_err(e)),
        Err(e) => return Err((EXIT_SOLVER, e.to_string())),
    };
    if a.json {
        serde_json::to_writer_pretty(&mut *out, &JsonReport::from(&rep)).map_err(input_err)?;
        writeln!(out).map_err(io_err)?;
    } else {
        write_summary(&rep, out).map_err(io_err)?;
    }
    Ok(if rep.stop_reason == StopReason::Cycle { EXIT_CYCLE } else { EXIT_OK })
}

fn write_summary(rep: &SolveReport, out: &mut dyn Write) -> io::Result<()> {
    let n = rep.halfline.eta.len();
    let (lo, hi) = rep.halfline.eta.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &x| (l.min(x), h.max(x)));
    writeln!(out, "states               {n}")?;
    writeln!(out, "stop                 {}", rep.stop_reason.as_str())?;
    writeln!(out, "outer iterations     {}", rep.iterations_outer)?;
    writeln!(out, "inner iterations     {}", rep.iterations_inner_total)?;
    writeln!(out, "degenerate           {}", rep.degenerate)?;
    writeln!(out, "strongly degenerate  {}", rep.strongly_degenerate)?;
    writeln!(out, "residual             {:e}", rep.residual)?;
    writeln!(out, "eta range            [{lo}, {hi}]")?;
    writeln!(out, "seconds              {:.3}", rep.wall_seconds)?;
    if n <= 20 {
        writeln!(out, "eta                  {:?}", rep.halfline.eta)?;
        writeln!(out, "v                    {:?}", rep.halfline.v)?;
        writeln!(out, "sigma                {:?}", rep.sigma.0)?;
    }
    Ok(())
}

fn emit(text: &str, path: Option<&Path>, out: &mut dyn Write) -> Result<(), (u8, String)> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| input_err(format!("{}: {e}", p.display()))),
        None => out.write_all(text.as_bytes()).map_err(io_err),
    }
}

/// `<out>.coords` next to the game file.
pub fn coords_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".coords");
    PathBuf::from(s)
}

fn cmd_generate(a: &GenerateArgs, out: &mut dyn Write) -> CmdResult {
    match &a.kind {
        GenerateKind::Richman { nodes, degree, seed, out: path } => {
            if *nodes == 0 || *degree == 0 || degree > nodes {
                return Err(input_err("richman needs 1 <= degree <= nodes"));
            }
            let game = gen_richman(&RichmanConfig { n: *nodes, out_degree: *degree, seed: *seed });
            emit(&serialize_game(&game), path.as_deref(), out)?;
        }
        GenerateKind::Catmouse { grid, speed, out: path } => {
            if *grid < 3 || grid % 2 == 0 || !(*speed > 0.0 && speed.is_finite()) {
                return Err(input_err("catmouse needs an odd grid >= 3 and a positive speed"));
            }
            let cfg = CatMouseConfig::new(*grid, *speed);
            let cm = gen_catmouse(&cfg);
            let text = format!("# catmouse grid {grid} speed {speed} dt {}\n{}", cm.dt, serialize_game(&cm.game));
            emit(&text, path.as_deref(), out)?;
            if let Some(p) = path {
                emit(&cm.coords_text(), Some(&coords_path(p)), out)?;
            }
        }
        GenerateKind::Example5 { out: path } => emit(&serialize_game(&example_5node()), path.as_deref(), out)?,
    }
    Ok(EXIT_OK)
}

/// Worker threads for `bench`: `MPPI_THREADS` when set, otherwise the flag.
pub fn bench_threads(flag: usize) -> usize {
    std::env::var("MPPI_THREADS").ok().and_then(|s| s.trim().parse().ok()).unwrap_or(flag).max(1)
}

/// One CSV row; failed instances keep their size and seed and report a NaN residual.
pub fn bench_row(size: usize, seed: u64, result: &Result<SolveReport, SolveError>, seconds: f64) -> String {
    match result {
        Ok(r) => format!(
            "{size},{seed},{},{},{},{},{:e},{seconds:.6}",
            r.iterations_outer, r.iterations_inner_total, r.degenerate, r.strongly_degenerate, r.residual
        ),
        Err(SolveError::OuterCap { cap, residual, .. }) => format!("{size},{seed},{cap},,,,{residual:e},{seconds:.6}"),
        Err(_) => format!("{size},{seed},,,,,NaN,{seconds:.6}"),
    }
}

fn cmd_bench(a: &BenchArgs, out: &mut dyn Write) -> CmdResult {
    let sizes: Vec<usize> = parse_list(&a.sizes, "size")?;
    if sizes.iter().any(|&n| n < a.degree || n == 0) {
        return Err(input_err("every size must be at least the degree"));
    }
    let jobs: Vec<(usize, u64)> = sizes.iter().flat_map(|&n| (a.first_seed..a.first_seed + a.seeds).map(move |s| (n, s))).collect();
    let opts = a.solver.options();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(bench_threads(a.threads)).build().map_err(input_err)?;
    let rows: Vec<Mutex<Option<String>>> = jobs.iter().map(|_| Mutex::new(None)).collect();
    pool.install(|| {
        jobs.par_iter().zip(&rows).for_each(|(&(n, seed), slot)| {
            let game = gen_richman(&RichmanConfig { n, out_degree: a.degree, seed });
            let t = Instant::now();
            let result = solve(&game, &MinStrategy::lowest(n), &opts);
            if let Err(e) = &result {
                warn!("size {n}, seed {seed}: {e}");
            }
            info!("size {n}, seed {seed} done");
            *slot.lock().expect("row slot") = Some(bench_row(n, seed, &result, t.elapsed().as_secs_f64()));
        })
    });
    let mut text = String::from(BENCH_HEADER);
    text.push('\n');
    for slot in rows {
        text.push_str(&slot.into_inner().expect("row slot").expect("every job ran"));
        text.push('\n');
    }
    emit(&text, a.out.as_deref(), out)?;
    Ok(EXIT_OK)
}

/// Outcome of the oracle comparison on one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleOutcome {
    pub seed: u64,
    pub brute_force_gap: f64,
    pub value_iteration_gap: f64,
    /// `max(5, 2 |v|) / T` plus the residual: nonexpansiveness bounds `|f^T(0) - f^T(v)|` by `|v|`.
    pub value_iteration_tol: f64,
}

pub const ORACLE_BRUTE_TOL: f64 = 1e-9;
pub const ORACLE_VI_STEPS: usize = 100_000;

/// Solves the seeded small game and measures the gaps to both oracles.
pub fn oracle_compare(seed: u64, perturb_eta: f64) -> Result<OracleOutcome, String> {
    let game = random_small_game(&SmallGameConfig::default(), seed);
    let rep = solve(&game, &MinStrategy::lowest(game.n_states()), &SolveOptions::default()).map_err(|e| e.to_string())?;
    let eta: Vec<f64> = rep.halfline.eta.iter().map(|e| e + perturb_eta).collect();
    let brute = brute_force_value(&game, DEFAULT_CAP).map_err(|e| e.to_string())?;
    let vi = value_iteration_slope(&game, ORACLE_VI_STEPS);
    let gap = |x: &[f64]| x.iter().zip(&eta).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let vnorm = rep.halfline.v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let value_iteration_tol = (2.0 * vnorm).max(5.0) / ORACLE_VI_STEPS as f64 + rep.residual;
    Ok(OracleOutcome { seed, brute_force_gap: gap(&brute), value_iteration_gap: gap(&vi), value_iteration_tol })
}

fn cmd_oracle_check(a: &OracleArgs, out: &mut dyn Write) -> CmdResult {
    let mut failures = 0;
    let (mut worst_bf, mut worst_vi) = (0.0f64, 0.0f64);
    for seed in a.seed..a.seed + a.count {
        match oracle_compare(seed, a.perturb_eta) {
            Ok(o) => {
                worst_bf = worst_bf.max(o.brute_force_gap);
                worst_vi = worst_vi.max(o.value_iteration_gap);
                if o.brute_force_gap > ORACLE_BRUTE_TOL || o.value_iteration_gap > o.value_iteration_tol {
                    failures += 1;
                    writeln!(out, "seed {seed}: FAIL (brute force gap {:e}, value iteration gap {:e} above {:e})", o.brute_force_gap, o.value_iteration_gap, o.value_iteration_tol)
                        .map_err(io_err)?;
                }
            }
            Err(e) => {
                failures += 1;
                writeln!(out, "seed {seed}: FAIL ({e})").map_err(io_err)?;
            }
        }
    }
    let verdict = if failures == 0 { "PASS" } else { "FAIL" };
    writeln!(
        out,
        "{verdict}: {} instances, {failures} failures, worst gaps {worst_bf:e} (brute force) and {worst_vi:e} (value iteration)",
        a.count
    )
    .map_err(io_err)?;
    Ok(if failures == 0 { EXIT_OK } else { EXIT_SOLVER })
}
