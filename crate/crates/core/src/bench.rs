//! Benchmark scenarios, the trial runner and summary statistics.

use std::fmt;
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{informed_rrt_star_solve, rrt_connect_solve, RrtConfig};
use crate::batch::DecayStrategy;
use crate::error::{PlanError, Result};
use crate::geometry::{AxisAlignedBox, Bounds, State, World};
use crate::problem::{Budget, Counters, PlannerResult, Problem};
use crate::search::{self, PlannerConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum PlannerId {
    Fit(DecayStrategy),
    RrtConnect,
    InformedRrtStar,
}

impl PlannerId {
    pub const ALL: [PlannerId; 8] = [
        PlannerId::Fit(DecayStrategy::SigmoidLog),
        PlannerId::Fit(DecayStrategy::Linear),
        PlannerId::Fit(DecayStrategy::Parabola),
        PlannerId::Fit(DecayStrategy::Brachistochrone),
        PlannerId::Fit(DecayStrategy::IterationCount),
        PlannerId::Fit(DecayStrategy::Fixed),
        PlannerId::RrtConnect,
        PlannerId::InformedRrtStar,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            PlannerId::Fit(s) => s.as_str(),
            PlannerId::RrtConnect => "rrt-connect",
            PlannerId::InformedRrtStar => "informed-rrt-star",
        }
    }
}

impl fmt::Display for PlannerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PlannerId {
    type Err = PlanError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rrt-connect" => Ok(PlannerId::RrtConnect),
            "informed-rrt-star" => Ok(PlannerId::InformedRrtStar),
            other => other
                .parse::<DecayStrategy>()
                .map(PlannerId::Fit)
                .map_err(|_| PlanError::Config(format!("unknown planner '{other}'"))),
        }
    }
}

impl TryFrom<String> for PlannerId {
    type Error = PlanError;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<PlannerId> for String {
    fn from(p: PlannerId) -> String {
        p.as_str().to_string()
    }
}

/// Options shared by every planner in a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerSettings {
    /// Batch planner options; the strategy field is overridden per planner id.
    pub fit: PlannerConfig,
    pub rrt: RrtConfig,
}

impl PlannerSettings {
    pub fn validate(&self) -> Result<()> {
        self.fit.validate()?;
        self.rrt.validate()
    }
}

pub fn run_planner(id: PlannerId, settings: &PlannerSettings, problem: &Problem, budget: Budget, seed: u64) -> Result<PlannerResult> {
    match id {
        PlannerId::Fit(strategy) => {
            let config = PlannerConfig {
                strategy,
                ..settings.fit.clone()
            };
            search::solve(problem, &config, budget, seed)
        }
        PlannerId::RrtConnect => rrt_connect_solve(problem, &settings.rrt, budget, seed),
        PlannerId::InformedRrtStar => informed_rrt_star_solve(problem, &settings.rrt, budget, seed),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WallGapParams {
    pub wall_center: f64,
    pub wall_thickness: f64,
    pub gap_width: f64,
    /// Gap centre above the start-goal line, along the second axis.
    pub gap_offset: f64,
    pub start_x: f64,
    pub goal_x: f64,
}

impl Default for WallGapParams {
    fn default() -> Self {
        WallGapParams {
            wall_center: 0.5,
            wall_thickness: 0.2,
            gap_width: 0.04,
            gap_offset: 0.1,
            start_x: 0.2,
            goal_x: 0.8,
        }
    }
}

/// A wall across the first axis with a narrow gap along the second.
pub fn make_wall_gap(n: usize, params: &WallGapParams) -> Result<Problem> {
    if n < 2 {
        return Err(PlanError::Config("wall-gap needs dimension >= 2".into()));
    }
    let p = params;
    let gap_lo = 0.5 + p.gap_offset - p.gap_width / 2.0;
    let gap_hi = 0.5 + p.gap_offset + p.gap_width / 2.0;
    if !(p.gap_width > 0.0) || p.gap_width >= 1.0 || gap_lo <= 0.0 || gap_hi >= 1.0 {
        return Err(PlanError::DegenerateScenario(format!(
            "gap [{gap_lo}, {gap_hi}] must lie strictly inside the wall"
        )));
    }
    let wall_lo = p.wall_center - p.wall_thickness / 2.0;
    let wall_hi = p.wall_center + p.wall_thickness / 2.0;
    if !(p.wall_thickness > 0.0) || wall_lo <= 0.0 || wall_hi >= 1.0 {
        return Err(PlanError::DegenerateScenario("wall must lie inside the unit cube".into()));
    }
    let slab = |lo2: f64, hi2: f64| {
        let mut lo = vec![0.0; n];
        let mut hi = vec![1.0; n];
        lo[0] = wall_lo;
        hi[0] = wall_hi;
        lo[1] = lo2;
        hi[1] = hi2;
        AxisAlignedBox::new(State(lo), State(hi))
    };
    let world = World::new(Bounds::unit_cube(n), vec![slab(0.0, gap_lo)?, slab(gap_hi, 1.0)?])?;
    let mut start = vec![0.5; n];
    start[0] = p.start_x;
    let mut goal = vec![0.5; n];
    goal[0] = p.goal_x;
    Problem::new(world, State(start), vec![State(goal)])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RandomRectanglesParams {
    /// Obstacle count; `10 * n` when unset.
    pub count: Option<usize>,
    pub max_width: f64,
    pub clearance: f64,
    pub start: Option<State>,
    pub goal: Option<State>,
}

impl Default for RandomRectanglesParams {
    fn default() -> Self {
        RandomRectanglesParams {
            count: None,
            max_width: 0.2,
            clearance: 0.05,
            start: None,
            goal: None,
        }
    }
}

pub const RECTANGLE_ATTEMPTS: usize = 100_000;

/// Random axis-aligned boxes that keep clear of the start and goal.
pub fn make_random_rectangles(n: usize, params: &RandomRectanglesParams, seed: u64) -> Result<Problem> {
    if n < 2 {
        return Err(PlanError::Config("random rectangles need dimension >= 2".into()));
    }
    if !(params.max_width > 0.0 && params.max_width < 0.5) {
        return Err(PlanError::Config("max width must lie in (0, 0.5)".into()));
    }
    let count = params.count.unwrap_or(10 * n);
    let start = params.start.clone().unwrap_or_else(|| State::filled(n, 0.1));
    let goal = params.goal.clone().unwrap_or_else(|| State::filled(n, 0.9));
    let bounds = Bounds::unit_cube(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut obstacles = Vec::with_capacity(count);
    let mut attempts = 0;
    while obstacles.len() < count {
        if attempts == RECTANGLE_ATTEMPTS {
            return Err(PlanError::OverConstrained(format!(
                "placed {} of {count} obstacles in {RECTANGLE_ATTEMPTS} attempts",
                obstacles.len()
            )));
        }
        attempts += 1;
        let mut lo = Vec::with_capacity(n);
        let mut hi = Vec::with_capacity(n);
        for _ in 0..n {
            // width in (0, max_width]
            let w = params.max_width * (1.0 - rng.random::<f64>());
            let c: f64 = rng.random();
            lo.push((c - w / 2.0).max(0.0));
            hi.push((c + w / 2.0).min(1.0));
        }
        let b = AxisAlignedBox::new(State(lo), State(hi))?;
        if b.distance_to(&start) < params.clearance || b.distance_to(&goal) < params.clearance {
            continue;
        }
        obstacles.push(b);
    }
    Problem::new(World::new(bounds, obstacles)?, start, vec![goal])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ScenarioKind {
    WallGap(WallGapParams),
    RandomRectangles(RandomRectanglesParams),
    /// A scenario JSON file: World JSON plus `start`, `goals` and `budget_s`.
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    #[serde(flatten)]
    pub kind: ScenarioKind,
    #[serde(default = "default_dimension")]
    pub dimension: usize,
    #[serde(default)]
    pub seed: u64,
    /// Seconds; the default depends on the kind and dimension.
    #[serde(default)]
    pub budget_s: Option<f64>,
    #[serde(default)]
    pub name: Option<String>,
}

fn default_dimension() -> usize {
    2
}

/// Default time budget: five times the published limits for each family.
pub fn default_budget(kind: &ScenarioKind, n: usize) -> f64 {
    let table: [(usize, f64); 3] = match kind {
        ScenarioKind::WallGap(_) => [(2, 0.04), (4, 0.10), (8, 0.20)],
        _ => [(2, 0.50), (4, 1.20), (8, 3.00)],
    };
    let base = table
        .iter()
        .find(|(d, _)| n <= *d)
        .map_or(table[2].1, |(_, t)| *t);
    5.0 * base
}

impl ScenarioSpec {
    pub fn wall_gap(n: usize) -> Self {
        ScenarioSpec {
            kind: ScenarioKind::WallGap(WallGapParams::default()),
            dimension: n,
            seed: 0,
            budget_s: None,
            name: None,
        }
    }

    pub fn random_rectangles(n: usize, seed: u64) -> Self {
        ScenarioSpec {
            kind: ScenarioKind::RandomRectangles(RandomRectanglesParams::default()),
            dimension: n,
            seed,
            budget_s: None,
            name: None,
        }
    }

    pub fn with_budget(mut self, seconds: f64) -> Self {
        self.budget_s = Some(seconds);
        self
    }

    pub fn build(&self) -> Result<Scenario> {
        let n = self.dimension;
        let (problem, file_budget, default_name) = match &self.kind {
            ScenarioKind::WallGap(p) => (make_wall_gap(n, p)?, None, format!("wall-gap-{n}d")),
            ScenarioKind::RandomRectangles(p) => (
                make_random_rectangles(n, p, self.seed)?,
                None,
                format!("random-rectangles-{n}d-s{}", self.seed),
            ),
            ScenarioKind::File { path } => {
                let file = ScenarioFile::read(path)?;
                let name = path
                    .file_stem()
                    .map_or_else(|| "custom".to_string(), |s| s.to_string_lossy().into_owned());
                (file.problem()?, file.budget_s, name)
            }
        };
        let budget_s = self
            .budget_s
            .or(file_budget)
            .unwrap_or_else(|| default_budget(&self.kind, problem.dim()));
        if !(budget_s >= 0.0) {
            return Err(PlanError::Config("budget must be non-negative".into()));
        }
        Ok(Scenario {
            name: self.name.clone().unwrap_or(default_name),
            problem,
            budget: Budget::seconds(budget_s),
        })
    }
}

/// A resolved benchmark problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub problem: Problem,
    pub budget: Budget,
}

impl Scenario {
    pub fn to_file(&self) -> ScenarioFile {
        ScenarioFile {
            world: self.problem.world.clone(),
            start: self.problem.start.clone(),
            goals: self.problem.goals.clone(),
            budget_s: self.budget.time_s,
        }
    }
}

/// On-disk scenario: the World JSON fields plus start, goals and budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFile {
    #[serde(flatten)]
    pub world: World,
    pub start: State,
    pub goals: Vec<State>,
    #[serde(default)]
    pub budget_s: Option<f64>,
}

impl ScenarioFile {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PlanError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn problem(&self) -> Result<Problem> {
        Problem::new(self.world.clone(), self.start.clone(), self.goals.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub planner: PlannerId,
    pub scenario: String,
    pub dimension: usize,
    /// Trial index within the cell's seed sweep.
    pub trial: u64,
    /// The planner's random seed.
    pub seed: u64,
    #[serde(flatten)]
    pub result: PlannerResult,
    /// Set when the trial panicked or errored.
    #[serde(default)]
    pub error: Option<String>,
}

impl TrialRecord {
    pub fn success(&self) -> bool {
        self.result.success
    }
}

pub struct TrialMatrix {
    pub scenarios: Vec<Scenario>,
    pub planners: Vec<PlannerId>,
    pub trials: u64,
    pub master_seed: u64,
    pub settings: PlannerSettings,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cell {
    pub scenario: usize,
    pub planner: usize,
    pub trial: u64,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn fnv1a(s: &str) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for b in s.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Seed for one cell, independent of every other cell.
pub fn derive_seed(master: u64, planner: PlannerId, scenario: &str, trial: u64) -> u64 {
    let mut h = splitmix64(master);
    h = splitmix64(h ^ fnv1a(planner.as_str()));
    h = splitmix64(h ^ fnv1a(scenario));
    splitmix64(h ^ trial)
}

impl TrialMatrix {
    pub fn validate(&self) -> Result<()> {
        if self.scenarios.is_empty() || self.planners.is_empty() || self.trials == 0 {
            return Err(PlanError::Config(
                "the trial matrix needs at least one scenario, planner and trial".into(),
            ));
        }
        self.settings.validate()
    }

    /// Cells in scenario-major, then planner, then trial order.
    pub fn cells(&self) -> Vec<Cell> {
        let mut cells = Vec::new();
        for scenario in 0..self.scenarios.len() {
            for planner in 0..self.planners.len() {
                for trial in 0..self.trials {
                    cells.push(Cell { scenario, planner, trial });
                }
            }
        }
        cells
    }

    pub fn seed_of(&self, cell: Cell) -> u64 {
        derive_seed(
            self.master_seed,
            self.planners[cell.planner],
            &self.scenarios[cell.scenario].name,
            cell.trial,
        )
    }

    pub fn run_cell(&self, cell: Cell) -> TrialRecord {
        let scenario = &self.scenarios[cell.scenario];
        let planner = self.planners[cell.planner];
        let seed = self.seed_of(cell);
        let outcome = catch_unwind(AssertUnwindSafe(|| {
            run_planner(planner, &self.settings, &scenario.problem, scenario.budget, seed)
        }));
        let (result, error) = match outcome {
            Ok(Ok(r)) => (r, None),
            Ok(Err(e)) => (PlannerResult::failure(Counters::default(), 0), Some(e.to_string())),
            Err(panic) => {
                let msg = panic
                    .downcast_ref::<&str>()
                    .map(|s| s.to_string())
                    .or_else(|| panic.downcast_ref::<String>().cloned())
                    .unwrap_or_else(|| "panic".to_string());
                (PlannerResult::failure(Counters::default(), 0), Some(format!("panic: {msg}")))
            }
        };
        TrialRecord {
            planner,
            scenario: scenario.name.clone(),
            dimension: scenario.problem.dim(),
            trial: cell.trial,
            seed,
            result,
            error,
        }
    }
}

/// Runs every cell, `jobs` at a time (all cores when `None`). Records come
/// back in cell order regardless of scheduling.
pub fn run_trials(matrix: &TrialMatrix, jobs: Option<usize>) -> Result<Vec<TrialRecord>> {
    matrix.validate()?;
    let cells = matrix.cells();
    if jobs == Some(1) {
        return Ok(cells.into_iter().map(|c| matrix.run_cell(c)).collect());
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j);
    }
    let pool = builder
        .build()
        .map_err(|e| PlanError::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(|| cells.into_par_iter().map(|c| matrix.run_cell(c)).collect()))
}

/// Order statistics over values where `inf` marks a failed run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    #[serde(with = "crate::problem::inf_as_null")]
    pub min: f64,
    #[serde(with = "crate::problem::inf_as_null")]
    pub median: f64,
    #[serde(with = "crate::problem::inf_as_null")]
    pub max: f64,
    #[serde(with = "crate::problem::inf_as_null")]
    pub ci_low: f64,
    #[serde(with = "crate::problem::inf_as_null")]
    pub ci_high: f64,
}

pub const CI_Z_99: f64 = 2.576;

/// One-based ranks bounding a 99% confidence interval on the median of `k` values.
pub fn median_ci_ranks(k: usize) -> (usize, usize) {
    let kf = k as f64;
    let spread = CI_Z_99 * kf.sqrt();
    let lo = ((kf - spread) / 2.0).floor() as i64;
    let hi = ((kf + spread) / 2.0).ceil() as i64 + 1;
    let clamp = |r: i64| r.clamp(1, k as i64) as usize;
    (clamp(lo), clamp(hi))
}

/// Lower median: the `ceil(k / 2)`-th smallest value.
pub fn lower_median(values: &[f64]) -> Result<f64> {
    Ok(Stats::of(values)?.median)
}

impl Stats {
    pub fn of(values: &[f64]) -> Result<Stats> {
        if values.is_empty() {
            return Err(PlanError::Contract("statistics of an empty set".into()));
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let k = v.len();
        let (lo, hi) = median_ci_ranks(k);
        Ok(Stats {
            min: v[0],
            median: v[(k - 1) / 2],
            max: v[k - 1],
            ci_low: v[lo - 1],
            ci_high: v[hi - 1],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub scenario: String,
    pub planner: PlannerId,
    pub runs: usize,
    pub success_rate: f64,
    pub initial_time: Stats,
    pub initial_cost: Stats,
    pub final_cost: Stats,
}

/// One row per (scenario, planner), in order of first appearance.
pub fn summarize(records: &[TrialRecord]) -> Result<Vec<SummaryRow>> {
    if records.is_empty() {
        return Err(PlanError::Contract("no records to summarize".into()));
    }
    let mut keys: Vec<(String, PlannerId)> = Vec::new();
    for r in records {
        let key = (r.scenario.clone(), r.planner);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(scenario, planner)| {
            let group: Vec<&TrialRecord> = records
                .iter()
                .filter(|r| r.scenario == scenario && r.planner == planner)
                .collect();
            let pick = |f: fn(&PlannerResult) -> f64| -> Vec<f64> { group.iter().map(|r| f(&r.result)).collect() };
            let successes = group.iter().filter(|r| r.success()).count();
            Ok(SummaryRow {
                runs: group.len(),
                success_rate: successes as f64 / group.len() as f64,
                initial_time: Stats::of(&pick(|r| r.initial_time_s))?,
                initial_cost: Stats::of(&pick(|r| r.initial_cost))?,
                final_cost: Stats::of(&pick(|r| r.final_cost))?,
                scenario,
                planner,
            })
        })
        .collect()
}

pub const RESULTS_HEADER: [&str; 12] = [
    "planner",
    "scenario",
    "dimension",
    "seed",
    "success",
    "initial_time_s",
    "initial_cost",
    "final_cost",
    "n_samples",
    "n_sparse_checks",
    "n_dense_checks",
    "n_batches",
];

pub fn write_results_csv<W: Write>(out: W, records: &[TrialRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RESULTS_HEADER)?;
    for r in records {
        let c = r.result.counters;
        w.write_record([
            r.planner.to_string(),
            r.scenario.clone(),
            r.dimension.to_string(),
            r.seed.to_string(),
            r.result.success.to_string(),
            r.result.initial_time_s.to_string(),
            r.result.initial_cost.to_string(),
            r.result.final_cost.to_string(),
            c.samples.to_string(),
            c.sparse_checks.to_string(),
            c.dense_checks.to_string(),
            c.batches.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub const SUMMARY_HEADER: [&str; 19] = [
    "scenario",
    "planner",
    "runs",
    "success_rate",
    "t_init_min",
    "t_init_median",
    "t_init_max",
    "t_init_ci_low",
    "t_init_ci_high",
    "c_init_min",
    "c_init_median",
    "c_init_max",
    "c_init_ci_low",
    "c_init_ci_high",
    "c_final_min",
    "c_final_median",
    "c_final_max",
    "c_final_ci_low",
    "c_final_ci_high",
];

pub fn write_summary_csv<W: Write>(out: W, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    for row in rows {
        let mut fields = vec![
            row.scenario.clone(),
            row.planner.to_string(),
            row.runs.to_string(),
            row.success_rate.to_string(),
        ];
        for s in [row.initial_time, row.initial_cost, row.final_cost] {
            fields.extend([s.min, s.median, s.max, s.ci_low, s.ci_high].map(|v| v.to_string()));
        }
        w.write_record(&fields)?;
    }
    w.flush()?;
    Ok(())
}

/// One `t_s,cost` row per improvement.
pub fn write_trace_csv<W: Write>(out: W, trace: &[(f64, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t_s", "cost"])?;
    for (t, c) in trace {
        w.write_record([t.to_string(), c.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Relative reduction of the median initial time of `candidate` against
/// `reference` on one scenario, in percent.
pub fn initial_time_improvement(rows: &[SummaryRow], scenario: &str, candidate: PlannerId, reference: PlannerId) -> Option<f64> {
    let find = |p: PlannerId| rows.iter().find(|r| r.scenario == scenario && r.planner == p);
    let (c, r) = (find(candidate)?, find(reference)?);
    let (tc, tr) = (c.initial_time.median, r.initial_time.median);
    (tc.is_finite() && tr.is_finite() && tr > 0.0).then(|| 100.0 * (tr - tc) / tr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::motion_valid;

    #[test]
    fn planner_ids_round_trip() {
        for id in PlannerId::ALL {
            assert_eq!(id.as_str().parse::<PlannerId>().unwrap(), id);
        }
        assert!("bit-star".parse::<PlannerId>().is_err());
    }

    #[test]
    fn wall_gap_blocks_the_straight_line() {
        for n in [2, 4, 8] {
            let p = make_wall_gap(n, &WallGapParams::default()).unwrap();
            let res = p.world.default_dense_resolution();
            assert!(!motion_valid(&p.start, &p.goals[0], &p.world, res).valid);
            // through the gap
            let mut a = vec![0.5; n];
            a[0] = 0.35;
            a[1] = 0.6;
            let mut b = a.clone();
            b[0] = 0.65;
            let path = [p.start.clone(), State(a), State(b), p.goals[0].clone()];
            assert!(path.windows(2).all(|w| motion_valid(&w[0], &w[1], &p.world, res).valid));
        }
    }

    #[test]
    fn wall_gap_is_deterministic_and_validated() {
        let a = make_wall_gap(3, &WallGapParams::default()).unwrap();
        let b = make_wall_gap(3, &WallGapParams::default()).unwrap();
        assert_eq!(a.world.to_json(), b.world.to_json());
        let wide = WallGapParams {
            gap_width: 1.0,
            ..Default::default()
        };
        assert!(matches!(make_wall_gap(2, &wide), Err(PlanError::DegenerateScenario(_))));
    }

    #[test]
    fn random_rectangles_respect_clearance() {
        for seed in 0..10 {
            let p = make_random_rectangles(2, &RandomRectanglesParams::default(), seed).unwrap();
            assert_eq!(p.world.obstacles.len(), 20);
            for o in &p.world.obstacles {
                assert!(o.distance_to(&p.start) >= 0.05);
                assert!(o.distance_to(&p.goals[0]) >= 0.05);
                for i in 0..2 {
                    assert!(o.extent(i) > 0.0 && o.extent(i) <= 0.2);
                }
            }
            let again = make_random_rectangles(2, &RandomRectanglesParams::default(), seed).unwrap();
            assert_eq!(p.world.to_json(), again.world.to_json());
        }
        let none = RandomRectanglesParams {
            count: Some(0),
            ..Default::default()
        };
        let p = make_random_rectangles(4, &none, 1).unwrap();
        assert!(p.world.obstacles.is_empty());
    }

    #[test]
    fn over_constrained_rectangles_error() {
        let tight = RandomRectanglesParams {
            clearance: 2.0,
            count: Some(1),
            ..Default::default()
        };
        assert!(matches!(
            make_random_rectangles(2, &tight, 0),
            Err(PlanError::OverConstrained(_))
        ));
    }

    #[test]
    fn scenario_file_round_trip() {
        let sc = ScenarioSpec::random_rectangles(2, 4).build().unwrap();
        let file = sc.to_file();
        let json = file.to_json();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        for key in ["dimension", "bounds", "obstacles", "start", "goals", "budget_s"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        let back = ScenarioFile::from_json(&json).unwrap();
        assert_eq!(back, file);
        assert_eq!(back.problem().unwrap(), sc.problem);
    }

    #[test]
    fn scenario_spec_json() {
        let spec: ScenarioSpec = serde_json::from_str(r#"{"kind": "wall-gap", "dimension": 4}"#).unwrap();
        let sc = spec.build().unwrap();
        assert_eq!(sc.name, "wall-gap-4d");
        assert_eq!(sc.budget.time_s, Some(0.5));
        let spec: ScenarioSpec =
            serde_json::from_str(r#"{"kind": "random-rectangles", "dimension": 2, "seed": 3, "max_width": 0.1}"#).unwrap();
        assert!(matches!(spec.kind, ScenarioKind::RandomRectangles(ref p) if p.max_width == 0.1));
    }

    #[test]
    fn lower_median_and_infinities() {
        assert_eq!(lower_median(&[1.0, 2.0, 3.0, f64::INFINITY]).unwrap(), 2.0);
        assert_eq!(lower_median(&[3.0, 1.0, 2.0]).unwrap(), 2.0);
        assert!(lower_median(&[]).is_err());
        let mut v: Vec<f64> = (0..97).map(|i| 1.0 + i as f64 * 0.01).collect();
        v.extend([f64::INFINITY; 3]);
        let s = Stats::of(&v).unwrap();
        assert!(s.max.is_infinite() && s.median.is_finite());
        assert!(s.min <= s.median && s.median <= s.max);
        assert!(s.ci_low <= s.median && s.median <= s.ci_high);
    }

    #[test]
    fn ci_ranks() {
        // k = 100: floor((100 - 25.76) / 2) = 37, ceil((100 + 25.76) / 2) + 1 = 64
        assert_eq!(median_ci_ranks(100), (37, 64));
        assert_eq!(median_ci_ranks(1), (1, 1));
        let s = Stats::of(&[0.5; 10]).unwrap();
        assert_eq!((s.ci_low, s.ci_high), (0.5, 0.5));
    }

    fn small_matrix(planners: Vec<PlannerId>, trials: u64, budget: Budget) -> TrialMatrix {
        let mut sc = ScenarioSpec::wall_gap(2).build().unwrap();
        sc.budget = budget;
        TrialMatrix {
            scenarios: vec![sc],
            planners,
            trials,
            master_seed: 7,
            settings: PlannerSettings::default(),
        }
    }

    #[test]
    fn matrix_cardinality_order_and_cell_isolation() {
        let m = small_matrix(
            vec![PlannerId::Fit(DecayStrategy::SigmoidLog), PlannerId::RrtConnect],
            3,
            Budget::iterations(15),
        );
        let records = run_trials(&m, Some(2)).unwrap();
        assert_eq!(records.len(), 6);
        let cells = m.cells();
        for (r, c) in records.iter().zip(&cells) {
            assert_eq!(r.planner, m.planners[c.planner]);
            assert_eq!(r.trial, c.trial);
        }
        let again = m.run_cell(cells[4]);
        assert_eq!(again.result.counters, records[4].result.counters);
        assert_eq!(again.result.sample_digest, records[4].result.sample_digest);
        let costs = |r: &TrialRecord| r.result.trace.iter().map(|e| e.1).collect::<Vec<_>>();
        assert_eq!(costs(&again), costs(&records[4]));
    }

    #[test]
    fn always_failing_planner_summarises_to_zero() {
        let m = small_matrix(vec![PlannerId::InformedRrtStar], 4, Budget::seconds(0.0));
        let records = run_trials(&m, Some(1)).unwrap();
        let rows = summarize(&records).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].success_rate, 0.0);
        assert!(rows[0].initial_cost.min.is_infinite());
        assert!(rows[0].final_cost.median.is_infinite());
    }

    #[test]
    fn results_csv_has_spec_columns() {
        let m = small_matrix(vec![PlannerId::Fit(DecayStrategy::Fixed)], 2, Budget::iterations(5));
        let records = run_trials(&m, Some(1)).unwrap();
        let mut buf = Vec::new();
        write_results_csv(&mut buf, &records).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), RESULTS_HEADER.join(","));
        assert_eq!(text.lines().count(), 3);
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, &records[0].result.trace).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("t_s,cost"));
    }

    #[test]
    fn empty_matrix_is_rejected() {
        let m = small_matrix(vec![], 3, Budget::iterations(1));
        assert!(matches!(run_trials(&m, Some(1)), Err(PlanError::Config(_))));
    }
}
