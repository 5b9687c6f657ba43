use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use fit_planner::batch::{self, DecayInputs, DecayStrategy};
use fit_planner::bench::{self, PlannerId, PlannerSettings, ScenarioSpec, TrialMatrix};
use fit_planner::error::PlanError;
use fit_planner::geometry::{self, AxisAlignedBox, Bounds, State};
use fit_planner::problem::{self, Budget};
use fit_planner::rgg;
use fit_planner::search::{self, PlannerConfig};

fn err(e: PlanError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn budget(seconds: Option<f64>, iterations: Option<u64>) -> PyResult<Budget> {
    match (seconds, iterations) {
        (Some(s), None) if s >= 0.0 => Ok(Budget::seconds(s)),
        (None, Some(n)) => Ok(Budget::iterations(n)),
        (None, None) => Err(PyValueError::new_err("give either seconds or iterations")),
        (Some(_), Some(_)) => Err(PyValueError::new_err("give only one of seconds and iterations")),
        _ => Err(PyValueError::new_err("seconds must be non-negative")),
    }
}

fn parse<T: std::str::FromStr<Err = PlanError>>(s: &str) -> PyResult<T> {
    s.parse().map_err(err)
}

/// Axis-aligned box world.
#[pyclass(name = "World", from_py_object)]
#[derive(Clone)]
struct PyWorld {
    inner: geometry::World,
}

#[pymethods]
impl PyWorld {
    #[new]
    #[pyo3(signature = (lower, upper, obstacles=Vec::new()))]
    fn new(lower: Vec<f64>, upper: Vec<f64>, obstacles: Vec<(Vec<f64>, Vec<f64>)>) -> PyResult<Self> {
        let bounds = Bounds::new(State(lower), State(upper)).map_err(err)?;
        let boxes = obstacles
            .into_iter()
            .map(|(lo, hi)| AxisAlignedBox::new(State(lo), State(hi)))
            .collect::<Result<Vec<_>, _>>()
            .map_err(err)?;
        Ok(PyWorld {
            inner: geometry::World::new(bounds, boxes).map_err(err)?,
        })
    }

    #[staticmethod]
    fn empty(dim: usize) -> Self {
        PyWorld {
            inner: geometry::World::empty(dim),
        }
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyWorld {
            inner: geometry::World::from_json(text).map_err(err)?,
        })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn state_valid(&self, x: Vec<f64>) -> bool {
        geometry::state_valid(&State(x), &self.inner)
    }

    /// `(valid, checks)` for the straight segment at the given resolution.
    fn motion_valid(&self, a: Vec<f64>, b: Vec<f64>, resolution: f64) -> (bool, usize) {
        let m = geometry::motion_valid(&State(a), &State(b), &self.inner, resolution);
        (m.valid, m.checks)
    }

    fn default_dense_resolution(&self) -> f64 {
        self.inner.default_dense_resolution()
    }
}

#[pyclass(name = "Problem", from_py_object)]
#[derive(Clone)]
struct PyProblem {
    inner: problem::Problem,
}

#[pymethods]
impl PyProblem {
    #[new]
    fn new(world: &PyWorld, start: Vec<f64>, goals: Vec<Vec<f64>>) -> PyResult<Self> {
        let goals = goals.into_iter().map(State).collect();
        Ok(PyProblem {
            inner: problem::Problem::new(world.inner.clone(), State(start), goals).map_err(err)?,
        })
    }

    #[getter]
    fn world(&self) -> PyWorld {
        PyWorld {
            inner: self.inner.world.clone(),
        }
    }

    #[getter]
    fn start(&self) -> Vec<f64> {
        self.inner.start.0.clone()
    }

    #[getter]
    fn goals(&self) -> Vec<Vec<f64>> {
        self.inner.goals.iter().map(|g| g.0.clone()).collect()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    /// Distance from the start to the nearest goal.
    fn lower_bound(&self) -> f64 {
        self.inner.lower_bound()
    }
}

#[pyclass(name = "PlannerResult", from_py_object)]
#[derive(Clone)]
struct PyPlannerResult {
    inner: problem::PlannerResult,
}

#[pymethods]
impl PyPlannerResult {
    #[getter]
    fn success(&self) -> bool {
        self.inner.success
    }
    #[getter]
    fn initial_time(&self) -> f64 {
        self.inner.initial_time_s
    }
    #[getter]
    fn initial_cost(&self) -> f64 {
        self.inner.initial_cost
    }
    #[getter]
    fn final_cost(&self) -> f64 {
        self.inner.final_cost
    }
    /// `(seconds, cost)` per improvement.
    #[getter]
    fn trace(&self) -> Vec<(f64, f64)> {
        self.inner.trace.clone()
    }
    #[getter]
    fn path(&self) -> Vec<Vec<f64>> {
        self.inner.path.iter().map(|s| s.0.clone()).collect()
    }
    /// `(samples, sparse_checks, dense_checks, batches)`.
    #[getter]
    fn counters(&self) -> (u64, u64, u64, u64) {
        let c = self.inner.counters;
        (c.samples, c.sparse_checks, c.dense_checks, c.batches)
    }
    fn to_json(&self) -> String {
        self.inner.to_json()
    }
    fn __repr__(&self) -> String {
        format!(
            "PlannerResult(success={}, initial_cost={}, final_cost={})",
            self.inner.success, self.inner.initial_cost, self.inner.final_cost
        )
    }
}

fn fit_config(strategy: &str, eta: f64, batch: usize, dense_res: Option<f64>, sparse_res: Option<f64>) -> PyResult<PlannerConfig> {
    let config = PlannerConfig {
        strategy: parse(strategy)?,
        eta,
        batch_size: batch,
        dense_resolution: dense_res,
        sparse_resolution: sparse_res,
        ..PlannerConfig::default()
    };
    config.validate().map_err(err)?;
    Ok(config)
}

/// The batch planner, driven one batch or one budget at a time.
#[pyclass(name = "FitPlanner")]
struct PyFitPlanner {
    inner: search::FitPlanner,
}

#[pymethods]
impl PyFitPlanner {
    #[new]
    #[pyo3(signature = (problem, strategy="fit-sl", seed=0, eta=1.1, batch=100, dense_res=None, sparse_res=None))]
    fn new(
        problem: &PyProblem,
        strategy: &str,
        seed: u64,
        eta: f64,
        batch: usize,
        dense_res: Option<f64>,
        sparse_res: Option<f64>,
    ) -> PyResult<Self> {
        let config = fit_config(strategy, eta, batch, dense_res, sparse_res)?;
        Ok(PyFitPlanner {
            inner: search::FitPlanner::new(problem.inner.clone(), config, seed).map_err(err)?,
        })
    }

    /// Continues planning for `seconds`, or for `iterations` more batches.
    #[pyo3(signature = (seconds=None, iterations=None))]
    fn solve(&mut self, py: Python<'_>, seconds: Option<f64>, iterations: Option<u64>) -> PyResult<PyPlannerResult> {
        let done = self.inner.counters().batches;
        let b = budget(seconds, iterations.map(|n| done + n))?;
        let inner = &mut self.inner;
        let r = py.detach(|| inner.solve(b)).map_err(err)?;
        Ok(PyPlannerResult { inner: r })
    }

    fn result(&self) -> PyPlannerResult {
        PyPlannerResult {
            inner: self.inner.result(),
        }
    }

    #[getter]
    fn cost(&self) -> f64 {
        self.inner.c_current()
    }
    /// Samples drawn in the most recent batch.
    #[getter]
    fn batch_size(&self) -> usize {
        self.inner.controller().current_batch
    }
    #[getter]
    fn radius(&self) -> f64 {
        self.inner.radius()
    }
    #[getter]
    fn alive_samples(&self) -> usize {
        self.inner.samples().alive_count()
    }
    #[getter]
    fn batches(&self) -> u64 {
        self.inner.counters().batches
    }
}

#[pyfunction]
#[pyo3(signature = (problem, planner="fit-sl", seconds=None, iterations=None, seed=0, eta=1.1, batch=100, dense_res=None, sparse_res=None))]
#[allow(clippy::too_many_arguments)]
fn solve(
    py: Python<'_>,
    problem: &PyProblem,
    planner: &str,
    seconds: Option<f64>,
    iterations: Option<u64>,
    seed: u64,
    eta: f64,
    batch: usize,
    dense_res: Option<f64>,
    sparse_res: Option<f64>,
) -> PyResult<PyPlannerResult> {
    let id: PlannerId = parse(planner)?;
    let strategy = match id {
        PlannerId::Fit(s) => s.as_str(),
        _ => "fit-sl",
    };
    let mut settings = PlannerSettings {
        fit: fit_config(strategy, eta, batch, dense_res, sparse_res)?,
        ..PlannerSettings::default()
    };
    settings.rrt.eta = eta;
    settings.rrt.resolution = dense_res;
    settings.validate().map_err(err)?;
    let b = budget(seconds, iterations)?;
    let p = &problem.inner;
    let r = py.detach(|| bench::run_planner(id, &settings, p, b, seed)).map_err(err)?;
    Ok(PyPlannerResult { inner: r })
}

#[pyfunction]
#[pyo3(signature = (dim=2))]
fn wall_gap(dim: usize) -> PyResult<PyProblem> {
    Ok(PyProblem {
        inner: bench::make_wall_gap(dim, &Default::default()).map_err(err)?,
    })
}

#[pyfunction]
#[pyo3(signature = (dim=2, seed=0))]
fn random_rectangles(dim: usize, seed: u64) -> PyResult<PyProblem> {
    Ok(PyProblem {
        inner: bench::make_random_rectangles(dim, &Default::default(), seed).map_err(err)?,
    })
}

/// Runs a seeded trial matrix on built-in scenarios and returns
/// `(results_csv, summary_csv)` as strings.
#[pyfunction]
#[pyo3(signature = (planners, scenario="wall-gap", dim=2, seeds=10, seconds=None, iterations=None, master_seed=0, env_seed=0, jobs=None))]
#[allow(clippy::too_many_arguments)]
fn run_bench(
    py: Python<'_>,
    planners: Vec<String>,
    scenario: &str,
    dim: usize,
    seeds: u64,
    seconds: Option<f64>,
    iterations: Option<u64>,
    master_seed: u64,
    env_seed: u64,
    jobs: Option<usize>,
) -> PyResult<(String, String)> {
    let planners = planners.iter().map(|p| parse(p)).collect::<PyResult<Vec<PlannerId>>>()?;
    let spec = match scenario {
        "wall-gap" => ScenarioSpec::wall_gap(dim),
        "random-rectangles" => ScenarioSpec::random_rectangles(dim, env_seed),
        other => return Err(PyValueError::new_err(format!("unknown scenario '{other}'"))),
    };
    let mut built = spec.build().map_err(err)?;
    if seconds.is_some() || iterations.is_some() {
        built.budget = budget(seconds, iterations)?;
    }
    let matrix = TrialMatrix {
        scenarios: vec![built],
        planners,
        trials: seeds,
        master_seed,
        settings: PlannerSettings::default(),
    };
    let records = py.detach(|| bench::run_trials(&matrix, jobs)).map_err(err)?;
    let mut results = Vec::new();
    bench::write_results_csv(&mut results, &records).map_err(err)?;
    let mut summary = Vec::new();
    bench::write_summary_csv(&mut summary, &bench::summarize(&records).map_err(err)?).map_err(err)?;
    Ok((
        String::from_utf8(results).expect("csv is utf-8"),
        String::from_utf8(summary).expect("csv is utf-8"),
    ))
}

/// Decay factor of a strategy at raw ratio `xi`.
#[pyfunction]
#[pyo3(signature = (strategy, xi, batch=100, dim=2, iteration=0, iteration_budget=100))]
fn decay(strategy: &str, xi: f64, batch: usize, dim: usize, iteration: u64, iteration_budget: u64) -> PyResult<f64> {
    let strategy: DecayStrategy = parse(strategy)?;
    if batch < 1 {
        return Err(PyValueError::new_err("batch must be at least 1"));
    }
    let lambda = batch::tuning_parameter(2 * batch - 1, 1, dim).map_err(err)?;
    batch::decay_variant(
        strategy,
        DecayInputs {
            xi,
            lambda,
            iteration,
            iteration_budget,
        },
    )
    .map_err(err)
}

#[pyfunction]
fn batch_size(psi: f64, m_min: usize, m_max: usize) -> usize {
    batch::batch_size(psi, m_min, m_max)
}

#[pyfunction]
fn sigmoid_smooth(xi: f64) -> f64 {
    batch::sigmoid_smooth(xi)
}

#[pyfunction]
fn tuning_parameter(m_max: usize, m_min: usize, n: usize) -> PyResult<f64> {
    batch::tuning_parameter(m_max, m_min, n).map_err(err)
}

#[pyfunction]
fn unit_ball_measure(n: i64) -> PyResult<f64> {
    geometry::unit_ball_measure(n).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (q, informed_measure, n, eta=1.1))]
fn rgg_radius(q: usize, informed_measure: f64, n: usize, eta: f64) -> PyResult<f64> {
    rgg::rgg_radius(q, informed_measure, n, eta).map_err(err)
}

/// Lebesgue measure of the informed set of a solution with the given cost.
#[pyfunction]
fn informed_measure(start: Vec<f64>, goal: Vec<f64>, cost: f64) -> PyResult<f64> {
    let phs = geometry::phs_from_solution(&State(start), &State(goal), cost).map_err(err)?;
    Ok(geometry::phs_measure(&phs))
}

#[pymodule]
fn fit_planner_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", fit_planner::VERSION)?;
    m.add_class::<PyWorld>()?;
    m.add_class::<PyProblem>()?;
    m.add_class::<PyPlannerResult>()?;
    m.add_class::<PyFitPlanner>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(wall_gap, m)?)?;
    m.add_function(wrap_pyfunction!(random_rectangles, m)?)?;
    m.add_function(wrap_pyfunction!(run_bench, m)?)?;
    m.add_function(wrap_pyfunction!(decay, m)?)?;
    m.add_function(wrap_pyfunction!(batch_size, m)?)?;
    m.add_function(wrap_pyfunction!(sigmoid_smooth, m)?)?;
    m.add_function(wrap_pyfunction!(tuning_parameter, m)?)?;
    m.add_function(wrap_pyfunction!(unit_ball_measure, m)?)?;
    m.add_function(wrap_pyfunction!(rgg_radius, m)?)?;
    m.add_function(wrap_pyfunction!(informed_measure, m)?)?;
    Ok(())
}
