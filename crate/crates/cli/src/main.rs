use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use fit_planner::batch::{batch_size, decay_variant, tuning_parameter, DecayInputs, DecayStrategy};
use fit_planner::bench::{
    run_planner, run_trials, summarize, write_results_csv, write_summary_csv, write_trace_csv, PlannerId,
    PlannerSettings, RandomRectanglesParams, ScenarioKind, ScenarioSpec, TrialMatrix, WallGapParams,
};
use fit_planner::problem::Budget;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Benchmark harness for the adaptive-batch FIT* planner and its baselines.
///
/// Defaults: eta = 1.1, 100 samples per batch (adaptive range [1, 199]),
/// dense resolution = half the smallest obstacle extent (capped at 0.05),
/// sparse resolution = 10x dense, wall-gap budgets 0.2/0.5/1.0 s and
/// random-rectangle budgets 2.5/6/15 s for 2/4/8 dimensions.
#[derive(Parser, Debug)]
#[command(name = "fitplan", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Progress messages on stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one planner once and write result.json and trace.csv.
    Plan(RunArgs),
    /// Run a planner x scenario x seed matrix and write per-trial and summary CSVs.
    Bench(RunArgs),
    /// Write a scenario as a JSON file that `--scenario <path>` accepts.
    GenEnv(GenEnvArgs),
    /// Tabulate the decay factor and batch size over the raw ratio 0, 0.01, ..., 1.
    DecayTable(DecayTableArgs),
}

#[derive(Args, Debug, Default)]
struct RunArgs {
    /// JSON run configuration (a previous manifest.json also works); flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `wall-gap`, `random-rectangles`, or a scenario JSON file (repeatable).
    #[arg(long)]
    scenario: Vec<String>,
    /// State dimension of built-in scenarios (repeatable for bench) [default: 2].
    #[arg(long)]
    dim: Vec<usize>,
    /// Seed of generated random-rectangle environments [default: 0].
    #[arg(long)]
    env_seed: Option<u64>,
    /// fit-sl, fit-l, fit-p, fit-b, fit-i, fixed, rrt-connect, informed-rrt-star (repeatable).
    #[arg(long)]
    planner: Vec<String>,
    /// Shorthand for `--planner <strategy>`.
    #[arg(long)]
    strategy: Vec<String>,
    /// Trials per (scenario, planner) cell [default: 10].
    #[arg(long)]
    seeds: Option<u64>,
    /// Time budget per run in seconds, overriding the scenario default.
    #[arg(long)]
    budget: Option<f64>,
    /// Budget in batches (iterations for the RRT baselines) instead of seconds.
    #[arg(long)]
    iterations: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads [default: logical cores].
    #[arg(long)]
    jobs: Option<usize>,
    /// Master seed; per-trial seeds are derived from it [default: 0].
    #[arg(long)]
    master_seed: Option<u64>,
    /// RGG constant, must exceed 1 [default: 1.1].
    #[arg(long)]
    eta: Option<f64>,
    /// Samples per batch [default: 100].
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    sparse_res: Option<f64>,
    #[arg(long)]
    dense_res: Option<f64>,
}

#[derive(Args, Debug)]
struct GenEnvArgs {
    /// `wall-gap` or `random-rectangles`.
    #[arg(long, default_value = "wall-gap")]
    scenario: String,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 0)]
    env_seed: u64,
    /// Budget stored in the file, in seconds.
    #[arg(long)]
    budget: Option<f64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct DecayTableArgs {
    /// Strategies to tabulate (repeatable) [default: all decaying strategies].
    ///
    /// fit-i has no ratio input; its row at ratio x uses iteration
    /// round((1 - x) * 100) of a 100-iteration budget.
    #[arg(long)]
    strategy: Vec<String>,
    /// Dimension entering the sigmoid-log tuning parameter.
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// Configured batch size; the table spans [1, 2 * batch - 1].
    #[arg(long, default_value_t = 100)]
    batch: usize,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

/// Resolved configuration of a plan or bench run, as stored in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RunConfig {
    scenarios: Vec<ScenarioSpec>,
    planners: Vec<PlannerId>,
    seeds: u64,
    master_seed: u64,
    iterations: Option<u64>,
    jobs: Option<usize>,
    settings: PlannerSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            scenarios: Vec::new(),
            planners: Vec::new(),
            seeds: 10,
            master_seed: 0,
            iterations: None,
            jobs: None,
            settings: PlannerSettings::default(),
        }
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    config: &'a RunConfig,
    config_sha256: String,
    master_seed: u64,
    fitplan_version: &'static str,
    library_version: &'static str,
    started_unix_s: f64,
    wall_clock_s: f64,
    trials: usize,
    successes: usize,
}

/// Failures that map to exit code 1.
#[derive(Debug)]
struct ConfigError(String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn config_err(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    let mut value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    // a manifest wraps the run configuration
    if let Some(inner) = value.get_mut("config") {
        value = inner.take();
    }
    serde_json::from_value(value).map_err(|e| config_err(format!("{}: {e}", path.display())))
}

fn scenario_from_name(name: &str, dim: usize, env_seed: u64) -> ScenarioSpec {
    match name {
        "wall-gap" => ScenarioSpec::wall_gap(dim),
        "random-rectangles" => ScenarioSpec::random_rectangles(dim, env_seed),
        path => ScenarioSpec {
            kind: ScenarioKind::File { path: PathBuf::from(path) },
            dimension: dim,
            seed: env_seed,
            budget_s: None,
            name: None,
        },
    }
}

fn resolve(args: &RunArgs) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(p) => load_config(p)?,
        None => RunConfig::default(),
    };
    if !args.scenario.is_empty() || !args.dim.is_empty() {
        let names = if args.scenario.is_empty() { vec!["wall-gap".to_string()] } else { args.scenario.clone() };
        let dims = if args.dim.is_empty() { vec![2] } else { args.dim.clone() };
        let env_seed = args.env_seed.unwrap_or(0);
        cfg.scenarios = names
            .iter()
            .flat_map(|n| dims.iter().map(move |&d| scenario_from_name(n, d, env_seed)))
            .collect();
    }
    if cfg.scenarios.is_empty() {
        cfg.scenarios.push(ScenarioSpec::wall_gap(2));
    }
    if let Some(b) = args.budget {
        for s in &mut cfg.scenarios {
            s.budget_s = Some(b);
        }
    }
    let mut planners: Vec<PlannerId> = Vec::new();
    for name in args.planner.iter().chain(&args.strategy) {
        planners.push(name.parse().map_err(|e| config_err(format!("{e}")))?);
    }
    if !planners.is_empty() {
        cfg.planners = planners;
    }
    if let Some(s) = args.seeds {
        cfg.seeds = s;
    }
    if let Some(m) = args.master_seed {
        cfg.master_seed = m;
    }
    if args.iterations.is_some() {
        cfg.iterations = args.iterations;
    }
    if args.jobs.is_some() {
        cfg.jobs = args.jobs;
    }
    if let Some(eta) = args.eta {
        cfg.settings.fit.eta = eta;
        cfg.settings.rrt.eta = eta;
    }
    if let Some(b) = args.batch {
        cfg.settings.fit.batch_size = b;
    }
    if args.sparse_res.is_some() {
        cfg.settings.fit.sparse_resolution = args.sparse_res;
    }
    if let Some(r) = args.dense_res {
        cfg.settings.fit.dense_resolution = Some(r);
        cfg.settings.rrt.resolution = Some(r);
    }
    cfg.settings.validate().map_err(|e| config_err(e.to_string()))?;
    if cfg.jobs == Some(0) {
        bail!(config_err("--jobs must be at least 1"));
    }
    Ok(cfg)
}

fn build_matrix(cfg: &RunConfig) -> Result<TrialMatrix> {
    let mut scenarios = Vec::new();
    for spec in &cfg.scenarios {
        let mut s = spec.build().map_err(|e| config_err(e.to_string()))?;
        if let Some(n) = cfg.iterations {
            s.budget = Budget::iterations(n);
        }
        scenarios.push(s);
    }
    Ok(TrialMatrix {
        scenarios,
        planners: cfg.planners.clone(),
        trials: cfg.seeds,
        master_seed: cfg.master_seed,
        settings: cfg.settings.clone(),
    })
}

fn create_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn create_file(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn cmd_plan(args: &RunArgs, verbose: bool) -> Result<ExitCode> {
    let mut cfg = resolve(args)?;
    if cfg.planners.is_empty() {
        cfg.planners.push(PlannerId::Fit(DecayStrategy::SigmoidLog));
    }
    if cfg.planners.len() != 1 || cfg.scenarios.len() != 1 {
        bail!(config_err("plan runs exactly one planner on one scenario"));
    }
    let matrix = build_matrix(&cfg)?;
    let scenario = &matrix.scenarios[0];
    let planner = cfg.planners[0];
    if verbose {
        eprintln!("planning {} on {} (seed {})", planner, scenario.name, cfg.master_seed);
    }
    let result = run_planner(planner, &cfg.settings, &scenario.problem, scenario.budget, cfg.master_seed)
        .map_err(|e| config_err(e.to_string()))?;
    create_out(&args.out)?;
    fs::write(args.out.join("result.json"), result.to_json())?;
    write_trace_csv(create_file(&args.out.join("trace.csv"))?, &result.trace)?;
    if verbose {
        eprintln!("cost {} after {} batches", result.final_cost, result.counters.batches);
    }
    Ok(if result.success { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn cmd_bench(args: &RunArgs, verbose: bool) -> Result<ExitCode> {
    let cfg = resolve(args)?;
    if cfg.planners.is_empty() {
        bail!(config_err("no planners given"));
    }
    if cfg.seeds == 0 {
        bail!(config_err("--seeds must be at least 1"));
    }
    let matrix = build_matrix(&cfg)?;
    let started = SystemTime::now();
    let clock = Instant::now();
    if verbose {
        eprintln!(
            "running {} scenarios x {} planners x {} seeds",
            matrix.scenarios.len(),
            matrix.planners.len(),
            matrix.trials
        );
    }
    let records = run_trials(&matrix, cfg.jobs).map_err(|e| config_err(e.to_string()))?;
    let wall_clock_s = clock.elapsed().as_secs_f64();

    create_out(&args.out)?;
    write_results_csv(create_file(&args.out.join("results.csv"))?, &records)?;
    write_summary_csv(create_file(&args.out.join("summary.csv"))?, &summarize(&records)?)?;
    let traces = args.out.join("traces");
    create_out(&traces)?;
    for r in &records {
        let name = format!("{}_{}_{}.csv", r.scenario, r.planner, r.trial);
        write_trace_csv(create_file(&traces.join(name))?, &r.result.trace)?;
    }
    for r in records.iter().filter(|r| r.error.is_some()) {
        eprintln!("{} on {} trial {}: {}", r.planner, r.scenario, r.trial, r.error.as_deref().unwrap_or(""));
    }

    let config_json = serde_json::to_string(&cfg)?;
    let successes = records.iter().filter(|r| r.success()).count();
    let manifest = Manifest {
        config: &cfg,
        config_sha256: Sha256::digest(config_json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect(),
        master_seed: cfg.master_seed,
        fitplan_version: env!("CARGO_PKG_VERSION"),
        library_version: fit_planner::VERSION,
        started_unix_s: started.duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64()),
        wall_clock_s,
        trials: records.len(),
        successes,
    };
    fs::write(args.out.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    if verbose {
        eprintln!("{successes}/{} trials solved in {wall_clock_s:.1} s", records.len());
    }
    Ok(if successes == 0 { ExitCode::from(2) } else { ExitCode::SUCCESS })
}

fn cmd_gen_env(args: &GenEnvArgs) -> Result<ExitCode> {
    let kind = match args.scenario.as_str() {
        "wall-gap" => ScenarioKind::WallGap(WallGapParams::default()),
        "random-rectangles" => ScenarioKind::RandomRectangles(RandomRectanglesParams::default()),
        other => bail!(config_err(format!("unknown built-in scenario '{other}'"))),
    };
    let spec = ScenarioSpec {
        kind,
        dimension: args.dim,
        seed: args.env_seed,
        budget_s: args.budget,
        name: None,
    };
    let scenario = spec.build().map_err(|e| config_err(e.to_string()))?;
    create_out(&args.out)?;
    let path = args.out.join(format!("{}.json", scenario.name));
    fs::write(&path, scenario.to_file().to_json())?;
    println!("{}", path.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_decay_table(args: &DecayTableArgs) -> Result<ExitCode> {
    let strategies: Vec<DecayStrategy> = if args.strategy.is_empty() {
        DecayStrategy::DECAYING.to_vec()
    } else {
        args.strategy
            .iter()
            .map(|s| s.parse().map_err(|e| config_err(format!("{e}"))))
            .collect::<Result<_>>()?
    };
    if strategies.contains(&DecayStrategy::Fixed) {
        bail!(config_err("the fixed strategy has no decay curve"));
    }
    if args.batch < 2 {
        bail!(config_err("--batch must be at least 2 for a non-trivial range"));
    }
    let (m_min, m_max) = (1, 2 * args.batch - 1);
    let lambda = tuning_parameter(m_max, m_min, args.dim).map_err(|e| config_err(e.to_string()))?;
    const ITERATIONS: u64 = 100;

    create_out(&args.out)?;
    let path = args.out.join("decay_table.csv");
    let mut w = csv::Writer::from_writer(create_file(&path)?);
    w.write_record(["strategy", "xi", "psi", "batch_size"])?;
    for s in strategies {
        for k in 0..=100u64 {
            let xi = k as f64 / 100.0;
            let inputs = DecayInputs {
                xi,
                lambda,
                iteration: ITERATIONS - k,
                iteration_budget: ITERATIONS,
            };
            let psi = decay_variant(s, inputs)?;
            let m = batch_size(psi, m_min, m_max);
            w.write_record([s.to_string(), format!("{xi:.2}"), psi.to_string(), m.to_string()])?;
        }
    }
    w.flush()?;
    println!("{}", path.display());
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match &cli.command {
        Command::Plan(a) => cmd_plan(a, cli.verbose),
        Command::Bench(a) => cmd_bench(a, cli.verbose),
        Command::GenEnv(a) => cmd_gen_env(a),
        Command::DecayTable(a) => cmd_decay_table(a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
