//! Reference planners: RRT-Connect for feasibility and Informed RRT* for
//! anytime optimisation. Both use the same validity checks as the batch
//! planner at its dense resolution.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{PlanError, Result};
use crate::geometry::{motion_valid, sample_uniform, state_valid, InformedSet, State, DEFAULT_REJECTION_BUDGET};
use crate::problem::{path_length, Budget, Counters, PlannerResult, Problem, SampleDigest};
use crate::rgg::rgg_radius;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RrtConfig {
    /// Probability of steering towards a goal (Informed RRT* only).
    pub goal_bias: f64,
    /// Longest edge added in one step; `0.3 * sqrt(n)` when unset.
    pub max_edge_length: Option<f64>,
    /// Collision-check resolution; the world's dense default when unset.
    pub resolution: Option<f64>,
    pub eta: f64,
    pub rejection_budget: usize,
}

impl Default for RrtConfig {
    fn default() -> Self {
        RrtConfig {
            goal_bias: 0.05,
            max_edge_length: None,
            resolution: None,
            eta: 1.1,
            rejection_budget: DEFAULT_REJECTION_BUDGET,
        }
    }
}

impl RrtConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.goal_bias) {
            return Err(PlanError::Config("goal bias must lie in [0, 1)".into()));
        }
        if let Some(l) = self.max_edge_length {
            if !(l > 0.0) || !l.is_finite() {
                return Err(PlanError::Config("max edge length must be positive".into()));
            }
        }
        if let Some(r) = self.resolution {
            if !(r > 0.0) || !r.is_finite() {
                return Err(PlanError::Config("resolution must be positive".into()));
            }
        }
        if !(self.eta > 1.0) {
            return Err(PlanError::Config("eta must exceed 1".into()));
        }
        Ok(())
    }

    pub fn edge_length(&self, dim: usize) -> f64 {
        self.max_edge_length.unwrap_or(0.3 * (dim as f64).sqrt())
    }

    pub fn check_resolution(&self, problem: &Problem) -> f64 {
        self.resolution
            .unwrap_or_else(|| problem.world.default_dense_resolution())
    }
}

/// Moves from `from` towards `to` by at most `max_len`.
pub fn steer(from: &State, to: &State, max_len: f64) -> State {
    let d = from.dist(to);
    if d <= max_len {
        to.clone()
    } else {
        from.lerp(to, max_len / d)
    }
}

/// Tree with parent pointers, costs-to-root and child lists.
#[derive(Debug, Clone, Default)]
pub struct Tree {
    pub states: Vec<State>,
    pub parent: Vec<Option<usize>>,
    pub cost: Vec<f64>,
    pub children: Vec<Vec<usize>>,
}

impl Tree {
    fn with_roots(roots: &[State]) -> Self {
        let mut t = Tree::default();
        for r in roots {
            t.push(r.clone(), None, 0.0);
        }
        t
    }

    fn push(&mut self, x: State, parent: Option<usize>, cost: f64) -> usize {
        self.states.push(x);
        self.parent.push(parent);
        self.cost.push(cost);
        self.children.push(Vec::new());
        let idx = self.states.len() - 1;
        if let Some(p) = parent {
            self.children[p].push(idx);
        }
        idx
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn nearest(&self, x: &State) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, s) in self.states.iter().enumerate() {
            let d = s.dist(x);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    pub fn near(&self, x: &State, r: f64) -> Vec<usize> {
        (0..self.states.len())
            .filter(|&i| self.states[i].dist(x) <= r)
            .collect()
    }

    /// Root-to-`idx` path.
    pub fn path_to(&self, idx: usize) -> Vec<State> {
        let mut path = vec![self.states[idx].clone()];
        let mut cur = idx;
        while let Some(p) = self.parent[cur] {
            path.push(self.states[p].clone());
            cur = p;
        }
        path.reverse();
        path
    }

    /// Reattaches `child` under `new_parent` and shifts the subtree's costs.
    fn rewire(&mut self, child: usize, new_parent: usize, new_cost: f64) {
        if let Some(old) = self.parent[child] {
            self.children[old].retain(|&c| c != child);
        }
        self.parent[child] = Some(new_parent);
        self.children[new_parent].push(child);
        let delta = new_cost - self.cost[child];
        let mut stack = vec![child];
        while let Some(v) = stack.pop() {
            self.cost[v] += delta;
            stack.extend(self.children[v].iter().copied());
        }
    }
}

struct Checker<'a> {
    problem: &'a Problem,
    resolution: f64,
    counters: Counters,
}

impl Checker<'_> {
    fn motion(&mut self, a: &State, b: &State) -> bool {
        let m = motion_valid(a, b, &self.problem.world, self.resolution);
        self.counters.dense_checks += m.checks as u64;
        m.valid
    }
}

/// Bidirectional RRT; stops at the first connection.
pub fn rrt_connect_solve(problem: &Problem, config: &RrtConfig, budget: Budget, seed: u64) -> Result<PlannerResult> {
    problem.validate()?;
    config.validate()?;
    let clock = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut digest = SampleDigest::default();
    let mut checker = Checker {
        problem,
        resolution: config.check_resolution(problem),
        counters: Counters::default(),
    };
    if budget.is_zero() {
        return Ok(PlannerResult::failure(checker.counters, digest.value()));
    }
    let step = config.edge_length(problem.dim());
    let mut trees = [Tree::with_roots(std::slice::from_ref(&problem.start)), Tree::with_roots(&problem.goals)];
    // trees[a] is the one extended towards the random sample
    let mut a = 0;
    let mut iteration = 0u64;
    while !budget.iterations_exhausted(iteration) && !budget.time_exhausted(clock.elapsed()) {
        iteration += 1;
        let x = sample_uniform(&problem.world.bounds, &mut rng);
        digest.add(&x);
        checker.counters.samples += 1;
        if let Some(new) = extend(&mut trees[a], &x, step, &mut checker) {
            let target = trees[a].states[new].clone();
            let b = 1 - a;
            if let Some(reached) = connect(&mut trees[b], &target, step, &mut checker) {
                let (s_idx, g_idx) = if a == 0 { (new, reached) } else { (reached, new) };
                let mut path = trees[0].path_to(s_idx);
                let mut back = trees[1].path_to(g_idx);
                back.reverse();
                // both trees end at the same state
                path.extend(back.into_iter().skip(1));
                let cost = path_length(&path);
                let trace = vec![(clock.elapsed().as_secs_f64(), cost)];
                return Ok(PlannerResult::from_trace(trace, path, checker.counters, digest.value()));
            }
        }
        a = 1 - a;
    }
    Ok(PlannerResult::failure(checker.counters, digest.value()))
}

fn extend(tree: &mut Tree, x: &State, step: f64, checker: &mut Checker) -> Option<usize> {
    let near = tree.nearest(x);
    let from = tree.states[near].clone();
    let to = steer(&from, x, step);
    if to.dist(&from) == 0.0 || !state_valid(&to, &checker.problem.world) || !checker.motion(&from, &to) {
        return None;
    }
    let cost = tree.cost[near] + from.dist(&to);
    Some(tree.push(to, Some(near), cost))
}

/// Extends repeatedly towards `x`; returns the vertex equal to `x` if reached.
fn connect(tree: &mut Tree, x: &State, step: f64, checker: &mut Checker) -> Option<usize> {
    loop {
        let idx = extend(tree, x, step, checker)?;
        if tree.states[idx] == *x {
            return Some(idx);
        }
    }
}

/// Informed RRT*, advanced one iteration at a time.
#[derive(Debug)]
pub struct InformedRrtStar {
    problem: Problem,
    config: RrtConfig,
    rng: ChaCha8Rng,
    resolution: f64,
    tree: Tree,
    goal_vertices: Vec<Option<usize>>,
    c_best: f64,
    best_path: Vec<State>,
    trace: Vec<(f64, f64)>,
    counters: Counters,
    digest: SampleDigest,
    clock: Instant,
    iteration: u64,
    last_sample: Option<State>,
}

impl InformedRrtStar {
    pub fn new(problem: Problem, config: RrtConfig, seed: u64) -> Result<Self> {
        problem.validate()?;
        config.validate()?;
        let resolution = config.check_resolution(&problem);
        let tree = Tree::with_roots(std::slice::from_ref(&problem.start));
        let goal_vertices = vec![None; problem.goals.len()];
        Ok(InformedRrtStar {
            rng: ChaCha8Rng::seed_from_u64(seed),
            resolution,
            tree,
            goal_vertices,
            c_best: f64::INFINITY,
            best_path: Vec::new(),
            trace: Vec::new(),
            counters: Counters::default(),
            digest: SampleDigest::default(),
            clock: Instant::now(),
            iteration: 0,
            last_sample: None,
            problem,
            config,
        })
    }

    pub fn tree(&self) -> &Tree {
        &self.tree
    }

    pub fn c_best(&self) -> f64 {
        self.c_best
    }

    /// The state drawn in the last iteration (before steering).
    pub fn last_sample(&self) -> Option<&State> {
        self.last_sample.as_ref()
    }

    fn motion(&mut self, a: &State, b: &State) -> bool {
        let m = motion_valid(a, b, &self.problem.world, self.resolution);
        self.counters.dense_checks += m.checks as u64;
        m.valid
    }

    fn informed(&self) -> Option<InformedSet> {
        if self.c_best.is_finite() {
            InformedSet::new(&self.problem.start, &self.problem.goals, self.c_best).ok()
        } else {
            None
        }
    }

    fn draw(&mut self) -> Result<State> {
        if self.rng.random::<f64>() < self.config.goal_bias {
            let g = self.rng.random_range(0..self.problem.goals.len());
            return Ok(self.problem.goals[g].clone());
        }
        match self.informed() {
            Some(set) => set.sample(&self.problem.world.bounds, &mut self.rng, self.config.rejection_budget),
            None => Ok(sample_uniform(&self.problem.world.bounds, &mut self.rng)),
        }
    }

    fn radius(&self) -> f64 {
        let step = self.config.edge_length(self.problem.dim());
        let space = self.problem.world.bounds.measure();
        let measure = self.informed().map_or(space, |s| s.measure().min(space));
        let q = self.tree.len();
        if q < 2 || measure <= 0.0 {
            return step;
        }
        rgg_radius(q, measure, self.problem.dim(), self.config.eta)
            .map(|r| r.min(step))
            .unwrap_or(step)
    }

    /// One sample-steer-connect-rewire iteration.
    pub fn step(&mut self) -> Result<()> {
        self.iteration += 1;
        let x = self.draw()?;
        self.digest.add(&x);
        self.counters.samples += 1;
        self.last_sample = Some(x.clone());

        let nearest = self.tree.nearest(&x);
        let from = self.tree.states[nearest].clone();
        let new = steer(&from, &x, self.config.edge_length(self.problem.dim()));
        if new.dist(&from) == 0.0 || !state_valid(&new, &self.problem.world) {
            return Ok(());
        }
        let goal_slot = self.problem.goals.iter().position(|g| *g == new);
        let existing = goal_slot.and_then(|g| self.goal_vertices[g]);

        let r = self.radius();
        let mut near = self.tree.near(&new, r);
        if !near.contains(&nearest) {
            near.push(nearest);
        }
        if let Some(e) = existing {
            near.retain(|&i| i != e);
        }
        // cheapest valid parent
        near.sort_by(|&a, &b| {
            let ca = self.tree.cost[a] + self.tree.states[a].dist(&new);
            let cb = self.tree.cost[b] + self.tree.states[b].dist(&new);
            ca.total_cmp(&cb)
        });
        let mut parent = None;
        for &i in &near {
            let candidate = self.tree.states[i].clone();
            let c = self.tree.cost[i] + candidate.dist(&new);
            if let Some(e) = existing {
                if c >= self.tree.cost[e] {
                    break;
                }
                if self.is_ancestor(e, i) {
                    continue;
                }
            }
            if self.motion(&candidate, &new) {
                parent = Some((i, c));
                break;
            }
        }
        let Some((p, cost)) = parent else {
            return Ok(());
        };
        let idx = match existing {
            Some(e) => {
                self.tree.rewire(e, p, cost);
                e
            }
            None => {
                let idx = self.tree.push(new.clone(), Some(p), cost);
                if let Some(g) = goal_slot {
                    self.goal_vertices[g] = Some(idx);
                }
                idx
            }
        };

        // rewire neighbours through the new vertex
        for &i in &near {
            if i == p || self.tree.parent[idx] == Some(i) {
                continue;
            }
            let through = self.tree.cost[idx] + self.tree.states[i].dist(&new);
            if through < self.tree.cost[i] && !self.is_ancestor(i, idx) {
                let target = self.tree.states[i].clone();
                if self.motion(&new, &target) {
                    self.tree.rewire(i, idx, through);
                }
            }
        }
        self.update_best();
        Ok(())
    }

    fn is_ancestor(&self, a: usize, mut v: usize) -> bool {
        while let Some(p) = self.tree.parent[v] {
            if p == a {
                return true;
            }
            v = p;
        }
        false
    }

    fn update_best(&mut self) {
        let best = self
            .goal_vertices
            .iter()
            .flatten()
            .map(|&g| (self.tree.cost[g], g))
            .min_by(|a, b| a.0.total_cmp(&b.0));
        if let Some((cost, g)) = best {
            if cost < self.c_best {
                let path = self.tree.path_to(g);
                self.c_best = path_length(&path).min(cost);
                self.best_path = path;
                self.trace.push((self.clock.elapsed().as_secs_f64(), self.c_best));
            }
        }
    }

    pub fn solve(&mut self, budget: Budget) -> Result<PlannerResult> {
        self.clock = Instant::now();
        if budget.is_zero() {
            return Ok(self.result());
        }
        while !budget.iterations_exhausted(self.iteration) && !budget.time_exhausted(self.clock.elapsed()) {
            match self.step() {
                Ok(()) => {}
                Err(PlanError::SamplingStarved(_)) => break,
                Err(e) => return Err(e),
            }
        }
        Ok(self.result())
    }

    pub fn result(&self) -> PlannerResult {
        PlannerResult::from_trace(
            self.trace.clone(),
            self.best_path.clone(),
            self.counters,
            self.digest.value(),
        )
    }
}

pub fn informed_rrt_star_solve(problem: &Problem, config: &RrtConfig, budget: Budget, seed: u64) -> Result<PlannerResult> {
    InformedRrtStar::new(problem.clone(), config.clone(), seed)?.solve(budget)
}
