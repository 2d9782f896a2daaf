//! `siu` command-line front end. [`run`] parses arguments, does the work and
//! returns the process exit code: 0 on success, 1 on usage or input errors,
//! 2 when a solver fails.

use std::ffi::OsString;
use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use siu::bench::{run_bench, summary_csv, write_outputs, BenchConfig, FamilySpec, Problem};
use siu::bounds::empirical_gap;
use siu::dispatch::solve_dispatch_with;
use siu::guarantees::{empirical_coverage, nstar_corollary, nstar_margellos, nstar_thm4, GuaranteeParams};
use siu::knapsack::solve_robust_knapsack_with;
use siu::milp::MilpOptions;
use siu::scenario::{gen_correlated_normal, gen_grid_instance, gen_knapsack_instance, DEFAULT_SCENARIOS};
use siu::usets::{build_set, SetKind, UncertaintySet};
use siu::{DenseMatrix, Error, GridInstance, KnapsackInstance, Rng, ScenarioSet};

/// Environment variable holding the default seed.
pub const SEED_ENV: &str = "SIU_SEED";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "siu", version, about = "Scenario-induced uncertainty sets and robust counterparts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a robust knapsack instance (JSON).
    GenKnapsack(GenKnapsack),
    /// Generate an economic dispatch instance (JSON).
    GenGrid(GenGrid),
    /// Sample correlated scenarios for an instance (CSV).
    GenScenarios(GenScenarios),
    /// Build an uncertainty set from scenarios (JSON).
    FitSet(FitSet),
    /// Solve the robust knapsack counterpart.
    SolveKnapsack(SolveKnapsack),
    /// Solve the robust dispatch counterpart.
    SolveDispatch(SolveDispatch),
    /// Compare full and reduced PCA dispatch costs against the gap bound.
    GapBound(GapBound),
    /// Print the scenario count required by a guarantee.
    SampleSize(SampleSize),
    /// Monte Carlo check of the coverage guarantee.
    Coverage(Coverage),
    /// Run a benchmark sweep and write summary, detail and timing CSVs.
    Bench(Bench),
}

#[derive(Debug, Args)]
struct SeedArg {
    /// Random seed.
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct OutArg {
    /// Output file; stdout when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct LimitArgs {
    /// Branch-and-bound node limit.
    #[arg(long)]
    node_limit: Option<usize>,
    /// Wall-clock limit in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
}

impl LimitArgs {
    fn options(&self) -> MilpOptions {
        let mut opts = MilpOptions::default();
        if let Some(n) = self.node_limit {
            opts.node_limit = n;
        }
        opts.time_limit = self.time_limit.map(Duration::from_secs_f64);
        opts
    }
}

#[derive(Debug, Args)]
struct GenKnapsack {
    /// Item count (even).
    #[arg(long, default_value_t = 50)]
    n: usize,
    /// Correlation within each item pair.
    #[arg(long, allow_hyphen_values = true)]
    rho: f64,
    /// Capacity W.
    #[arg(long)]
    capacity: f64,
    #[command(flatten)]
    seed: SeedArg,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Debug, Args)]
struct GenGrid {
    #[arg(long, default_value_t = 8)]
    generators: usize,
    #[arg(long, default_value_t = 2)]
    loads: usize,
    #[arg(long, default_value_t = 8)]
    periods: usize,
    /// Temporal correlation.
    #[arg(long, allow_hyphen_values = true)]
    rho1: f64,
    /// Spatial correlation.
    #[arg(long, allow_hyphen_values = true)]
    rho2: f64,
    #[command(flatten)]
    seed: SeedArg,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Debug, Args)]
struct GenScenarios {
    /// Knapsack or grid instance JSON.
    #[arg(long)]
    instance: PathBuf,
    /// Number of scenarios N.
    #[arg(long, default_value_t = DEFAULT_SCENARIOS)]
    n: usize,
    #[command(flatten)]
    seed: SeedArg,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Debug, Args)]
struct FitSet {
    /// Scenario CSV.
    #[arg(long)]
    scenarios: PathBuf,
    /// box, budget, convex-hull, pca, axis-pca or intersection.
    #[arg(long)]
    family: SetKind,
    /// Retained directions; the full dimension when omitted.
    #[arg(long)]
    m1: Option<usize>,
    /// Budget Γ.
    #[arg(long)]
    gamma: Option<f64>,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Debug, Args)]
struct SolveKnapsack {
    #[arg(long)]
    instance: PathBuf,
    /// Set JSON written by `fit-set`.
    #[arg(long)]
    set: PathBuf,
    #[command(flatten)]
    limits: LimitArgs,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Debug, Args)]
struct SolveDispatch {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    set: PathBuf,
    /// Also write the dispatch plan at the worst-case demand (CSV).
    #[arg(long)]
    plan: Option<PathBuf>,
    #[command(flatten)]
    limits: LimitArgs,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Debug, Args)]
struct GapBound {
    /// Grid instance JSON.
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    scenarios: PathBuf,
    #[arg(long)]
    m1: usize,
    #[command(flatten)]
    limits: LimitArgs,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Margellos,
    Thm4,
    Corollary,
}

#[derive(Debug, Args)]
struct SampleSize {
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    beta: f64,
    #[arg(long, default_value_t = 1)]
    m: usize,
    #[arg(long, value_enum, default_value_t = Method::Thm4)]
    method: Method,
}

#[derive(Debug, Args)]
struct Coverage {
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    beta: f64,
    /// Dimension of the standard normal being covered.
    #[arg(long, default_value_t = 1)]
    m: usize,
    /// Extra row with this scenario count.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 500)]
    trials: usize,
    #[arg(long, default_value_t = 100_000)]
    eval_samples: usize,
    #[command(flatten)]
    seed: SeedArg,
}

#[derive(Debug, Args)]
struct Bench {
    #[arg(long, value_parser = parse_problem)]
    problem: Problem,
    /// Families as `kind` or `kind:fraction`, comma separated.
    #[arg(long, value_delimiter = ',', value_parser = parse_family)]
    families: Option<Vec<FamilySpec>>,
    /// Index of the Gap reference in the family list.
    #[arg(long)]
    reference: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    capacities: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    rhos: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    rho1s: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    rho2s: Option<Vec<f64>>,
    #[arg(long)]
    items: Option<usize>,
    #[arg(long)]
    generators: Option<usize>,
    #[arg(long)]
    loads: Option<usize>,
    #[arg(long)]
    periods: Option<usize>,
    /// Scenario sets per sweep point.
    #[arg(long)]
    sets: Option<usize>,
    /// Scenarios per set.
    #[arg(long)]
    scenarios: Option<usize>,
    #[command(flatten)]
    seed: SeedArg,
    #[command(flatten)]
    limits: LimitArgs,
    #[command(flatten)]
    out: OutArg,
}

fn parse_problem(s: &str) -> Result<Problem, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_family(s: &str) -> Result<FamilySpec, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Either instance type, told apart by its keys.
#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum AnyInstance {
    Knapsack(KnapsackInstance),
    Grid(GridInstance),
}

/// Parses `args` (program name first) and executes the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_solver_failure() {
                EXIT_SOLVER
            } else {
                EXIT_USAGE
            }
        }
    }
}

fn emit(out: &OutArg, text: &str) -> siu::Result<()> {
    match &out.out {
        Some(path) => fs::write(path, text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> siu::Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> siu::Result<T> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn read_scenarios(path: &Path) -> siu::Result<ScenarioSet> {
    ScenarioSet::read_csv(BufReader::new(fs::File::open(path)?))
}

fn read_set(path: &Path) -> siu::Result<UncertaintySet> {
    UncertaintySet::from_json(&fs::read_to_string(path)?)
}

#[derive(Serialize)]
struct GapOutput {
    m: usize,
    m1: usize,
    z_full: f64,
    z_reduced: f64,
    gap: f64,
    bound: f64,
}

fn execute(cmd: Command) -> siu::Result<()> {
    match cmd {
        Command::GenKnapsack(a) => {
            let inst = gen_knapsack_instance(a.n, a.rho, a.capacity, &mut Rng::new(a.seed.seed))?;
            emit(&a.out, &to_json(&inst)?)
        }
        Command::GenGrid(a) => {
            let inst = gen_grid_instance(a.generators, a.loads, a.periods, a.rho1, a.rho2, &mut Rng::new(a.seed.seed))?;
            emit(&a.out, &to_json(&inst)?)
        }
        Command::GenScenarios(a) => {
            let (mean, cov) = match read_json::<AnyInstance>(&a.instance)? {
                AnyInstance::Knapsack(k) => (k.weight_means, k.weight_cov),
                AnyInstance::Grid(g) => (g.demand_means, g.demand_cov),
            };
            let s = gen_correlated_normal(&mean, &cov, a.n, &mut Rng::new(a.seed.seed))?;
            emit(&a.out, &s.to_csv_string())
        }
        Command::FitSet(a) => {
            let s = read_scenarios(&a.scenarios)?;
            let set = build_set(a.family, &s, a.m1.unwrap_or(s.dim()), a.gamma)?;
            emit(&a.out, &(set.to_json()? + "\n"))
        }
        Command::SolveKnapsack(a) => {
            let inst: KnapsackInstance = read_json(&a.instance)?;
            let sol = solve_robust_knapsack_with(&inst, &read_set(&a.set)?, &a.limits.options())?;
            emit(&a.out, &to_json(&sol)?)
        }
        Command::SolveDispatch(a) => {
            let inst: GridInstance = read_json(&a.instance)?;
            let (sol, plan) = solve_dispatch_with(&inst, &read_set(&a.set)?, &a.limits.options())?;
            if let Some(path) = &a.plan {
                fs::write(path, plan.to_csv())?;
            }
            emit(&a.out, &to_json(&sol)?)
        }
        Command::GapBound(a) => {
            let inst: GridInstance = read_json(&a.instance)?;
            let s = read_scenarios(&a.scenarios)?;
            let r = empirical_gap(&inst, &s, a.m1, &a.limits.options())?;
            let report = GapOutput {
                m: s.dim(),
                m1: a.m1,
                z_full: r.z_full,
                z_reduced: r.z_reduced,
                gap: r.gap(),
                bound: r.bound,
            };
            emit(&a.out, &to_json(&report)?)
        }
        Command::SampleSize(a) => {
            let p = GuaranteeParams::new(a.eps, a.beta, a.m)?;
            let n = match a.method {
                Method::Margellos => nstar_margellos(&p)?,
                Method::Thm4 => nstar_thm4(&p)?,
                Method::Corollary => nstar_corollary(&p)?,
            };
            println!("{n}");
            Ok(())
        }
        Command::Coverage(a) => coverage(&a),
        Command::Bench(a) => bench(a),
    }
}

fn coverage(a: &Coverage) -> siu::Result<()> {
    let p = GuaranteeParams::new(a.eps, a.beta, a.m)?;
    let mut rows: Vec<(&str, u64)> = vec![("margellos", nstar_margellos(&p)?)];
    if a.m == 1 {
        rows.push(("thm4", nstar_thm4(&p)?));
    } else {
        rows.push(("corollary", nstar_corollary(&p)?));
    }
    if let Some(n) = a.n {
        rows.push(("custom", n as u64));
    }
    let mean = vec![0.0; a.m];
    let cov = DenseMatrix::identity(a.m);
    let rng = Rng::new(a.seed.seed);
    println!("{:<10} {:>8} {:>10} {:>8}", "method", "N", "fraction", "floor");
    for (name, n) in rows {
        let frac = empirical_coverage(&mean, &cov, &p, n as usize, a.trials, a.eval_samples, &rng)?;
        println!("{name:<10} {n:>8} {frac:>10.4} {:>8.4}", 1.0 - a.beta);
    }
    Ok(())
}

fn bench(a: Bench) -> siu::Result<()> {
    let mut cfg = match a.problem {
        Problem::Knapsack => BenchConfig::knapsack_default(),
        Problem::Dispatch => BenchConfig::dispatch_default(),
    };
    if let Some(f) = a.families {
        cfg.families = f;
        cfg.reference = None;
    }
    if a.reference.is_some() {
        cfg.reference = a.reference;
    }
    macro_rules! set {
        ($($field:ident <- $arg:expr),* $(,)?) => {
            $(if let Some(v) = $arg { cfg.$field = v; })*
        };
    }
    set!(
        capacities <- a.capacities,
        rhos <- a.rhos,
        rho1s <- a.rho1s,
        rho2s <- a.rho2s,
        items <- a.items,
        generators <- a.generators,
        loads <- a.loads,
        periods <- a.periods,
        n_scenario_sets <- a.sets,
        n_scenarios <- a.scenarios,
    );
    cfg.seed = a.seed.seed;
    if let Some(n) = a.limits.node_limit {
        cfg.node_limit = n;
    }
    cfg.time_limit_secs = a.limits.time_limit;
    cfg.output = a.out.out.clone();
    let rows = run_bench(&cfg)?;
    match &cfg.output {
        Some(path) => write_outputs(&cfg, &rows, path),
        None => emit(&a.out, &summary_csv(&cfg, &rows)),
    }
}
