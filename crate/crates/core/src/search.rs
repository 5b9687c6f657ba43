//! Asymmetric bidirectional anytime search with adaptive batch sizes.
//!
//! Every batch adds states to the implicit graph and restarts two searches
//! over it:
//!
//! * a reverse search rooted at the goals, ordered by
//!   `(h(source) + |source - target| + |target - start|, effort)`. It only
//!   runs the cheap sparse collision check, so its cost-to-go values are
//!   admissible heuristics for the forward search. Effort is the cumulative
//!   number of interpolated sparse checks along the reverse branch.
//! * a forward search rooted at the start, ordered by
//!   `(g(source) + |source - target| + h(target), g(source) + |source - target|, g(source))`.
//!   Every edge it adds to its tree passes the sparse and the dense check.
//!
//! Edges found invalid by either search are remembered for the rest of the
//! run. When the forward search invalidates an edge of the reverse tree the
//! reverse search restarts, which can only raise the heuristic.
//!
//! A batch ends when no forward edge could improve the current solution;
//! the sample set is then pruned to the informed set and the batch
//! controller picks the size of the next batch.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashMap};
use std::hash::{BuildHasherDefault, Hasher};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::batch::{BatchController, DecayStrategy, DEFAULT_ITERATION_BUDGET};
use crate::error::{PlanError, Result};
use crate::geometry::{check_count, motion_valid, sample_uniform, state_valid, InformedSet, State, DEFAULT_REJECTION_BUDGET};
use crate::problem::{path_length, Budget, Counters, PlannerResult, Problem, SampleDigest};
use crate::rgg::{prune, rgg_radius, NeighborIndex, RggParams, SampleSet};

/// Attempts per batch sample before giving up on finding a valid state.
const VALID_SAMPLE_ATTEMPTS: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    pub strategy: DecayStrategy,
    pub eta: f64,
    /// Configured samples per batch; the adaptive range is `[1, 2 * batch_size - 1]`.
    pub batch_size: usize,
    pub dense_resolution: Option<f64>,
    pub sparse_resolution: Option<f64>,
    /// Weight on the heuristic in the forward ordering.
    pub inflation_factor: f64,
    /// A batch ends once `truncation_factor * best forward key >= solution cost`.
    pub truncation_factor: f64,
    pub count_informed_only: bool,
    pub iteration_budget: u64,
    pub rejection_budget: usize,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            strategy: DecayStrategy::SigmoidLog,
            eta: 1.1,
            batch_size: 100,
            dense_resolution: None,
            sparse_resolution: None,
            inflation_factor: 1.0,
            truncation_factor: 1.0,
            count_informed_only: true,
            iteration_budget: DEFAULT_ITERATION_BUDGET,
            rejection_budget: DEFAULT_REJECTION_BUDGET,
        }
    }
}

impl PlannerConfig {
    pub fn with_strategy(strategy: DecayStrategy) -> Self {
        PlannerConfig {
            strategy,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        RggParams {
            eta: self.eta,
            count_informed_only: self.count_informed_only,
        }
        .validate()?;
        if self.batch_size < 1 {
            return Err(PlanError::Config("batch size must be at least 1".into()));
        }
        for (name, r) in [("dense", self.dense_resolution), ("sparse", self.sparse_resolution)] {
            if let Some(r) = r {
                if !(r > 0.0) || !r.is_finite() {
                    return Err(PlanError::Config(format!("{name} resolution must be positive")));
                }
            }
        }
        if !(self.inflation_factor >= 1.0) || !(self.truncation_factor >= 1.0) {
            return Err(PlanError::Config(
                "inflation and truncation factors must be >= 1".into(),
            ));
        }
        if self.rejection_budget == 0 {
            return Err(PlanError::Config("rejection budget must be positive".into()));
        }
        Ok(())
    }

    /// Dense and sparse resolutions for a world, filling in defaults.
    pub fn resolutions(&self, problem: &Problem) -> (f64, f64) {
        let dense = self
            .dense_resolution
            .unwrap_or_else(|| problem.world.default_dense_resolution());
        let sparse = self.sparse_resolution.unwrap_or(10.0 * dense);
        (dense, sparse)
    }
}

/// Lexicographic queue key; compared with `total_cmp` component by component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Key<const K: usize>(pub [f64; K]);

impl<const K: usize> Eq for Key<K> {}

impl<const K: usize> PartialOrd for Key<K> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<const K: usize> Ord for Key<K> {
    fn cmp(&self, other: &Self) -> Ordering {
        for (a, b) in self.0.iter().zip(&other.0) {
            match a.total_cmp(b) {
                Ordering::Equal => continue,
                o => return o,
            }
        }
        Ordering::Equal
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeQueueEntry<const K: usize> {
    pub source: usize,
    pub target: usize,
    pub key: Key<K>,
}

impl<const K: usize> Ord for EdgeQueueEntry<K> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key
            .cmp(&other.key)
            .then(self.source.cmp(&other.source))
            .then(self.target.cmp(&other.target))
    }
}

impl<const K: usize> PartialOrd for EdgeQueueEntry<K> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Default, Clone, Copy)]
struct EdgeHasher(u64);

impl Hasher for EdgeHasher {
    fn finish(&self) -> u64 {
        self.0
    }
    fn write(&mut self, bytes: &[u8]) {
        for b in bytes {
            self.0 = (self.0 ^ *b as u64).wrapping_mul(0x0100_0000_01b3);
        }
    }
    fn write_u64(&mut self, n: u64) {
        // fibonacci hashing is enough for packed index pairs
        self.0 = (n ^ (n >> 29)).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    }
}

type EdgeMap<V> = HashMap<u64, V, BuildHasherDefault<EdgeHasher>>;

fn directed(source: usize, target: usize) -> u64 {
    ((source as u64) << 32) | target as u64
}

fn undirected(a: usize, b: usize) -> u64 {
    if a < b {
        directed(a, b)
    } else {
        directed(b, a)
    }
}

/// Min-priority edge queue holding at most one live entry per directed edge.
#[derive(Debug, Clone)]
pub struct EdgeQueue<const K: usize> {
    heap: BinaryHeap<Reverse<EdgeQueueEntry<K>>>,
    live: EdgeMap<Key<K>>,
}

impl<const K: usize> Default for EdgeQueue<K> {
    fn default() -> Self {
        EdgeQueue {
            heap: BinaryHeap::new(),
            live: EdgeMap::default(),
        }
    }
}

impl<const K: usize> EdgeQueue<K> {
    /// Inserts the edge, or lowers its key. Returns false when an entry with
    /// a key no larger is already queued.
    pub fn push(&mut self, entry: EdgeQueueEntry<K>) -> bool {
        let id = directed(entry.source, entry.target);
        if let Some(existing) = self.live.get(&id) {
            if *existing <= entry.key {
                return false;
            }
        }
        self.live.insert(id, entry.key);
        self.heap.push(Reverse(entry));
        true
    }

    fn drop_stale(&mut self) {
        while let Some(Reverse(top)) = self.heap.peek() {
            match self.live.get(&directed(top.source, top.target)) {
                Some(k) if *k == top.key => return,
                _ => {
                    self.heap.pop();
                }
            }
        }
    }

    pub fn peek(&mut self) -> Option<EdgeQueueEntry<K>> {
        self.drop_stale();
        self.heap.peek().map(|r| r.0)
    }

    pub fn pop(&mut self) -> Option<EdgeQueueEntry<K>> {
        self.drop_stale();
        let Reverse(top) = self.heap.pop()?;
        self.live.remove(&directed(top.source, top.target));
        Some(top)
    }

    pub fn contains(&self, source: usize, target: usize) -> bool {
        self.live.contains_key(&directed(source, target))
    }

    pub fn len(&self) -> usize {
        self.live.len()
    }

    pub fn is_empty(&self) -> bool {
        self.live.is_empty()
    }

    pub fn clear(&mut self) {
        self.heap.clear();
        self.live.clear();
    }
}

/// What is known about an edge's validity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeStatus {
    SparseValid,
    DenseValid,
    Invalid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreeRole {
    Forward,
    Reverse,
}

/// Parent pointers and costs-to-root of one search tree.
#[derive(Debug, Clone)]
pub struct SearchTree {
    pub role: TreeRole,
    pub parent: Vec<Option<usize>>,
    pub cost_to_root: Vec<f64>,
}

impl SearchTree {
    fn new(role: TreeRole) -> Self {
        SearchTree {
            role,
            parent: Vec::new(),
            cost_to_root: Vec::new(),
        }
    }

    fn reset(&mut self, len: usize) {
        self.parent.clear();
        self.parent.resize(len, None);
        self.cost_to_root.clear();
        self.cost_to_root.resize(len, f64::INFINITY);
    }

    pub fn cost(&self, idx: usize) -> f64 {
        self.cost_to_root.get(idx).copied().unwrap_or(f64::INFINITY)
    }
}

/// Outcome of one search iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SearchEvent {
    /// Reverse edge passed the sparse check and settled its target.
    ReverseRelaxed { source: usize, target: usize },
    /// Reverse edge failed the sparse check.
    ReverseBlocked { source: usize, target: usize },
    /// Reverse edge could not improve anything.
    ReverseSkipped,
    /// Forward edge passed its checks and entered the tree.
    ForwardAdded { source: usize, target: usize },
    /// Forward edge was already in the tree; its subtree was refreshed.
    ForwardRefreshed { source: usize, target: usize },
    /// Forward edge failed a collision check.
    ForwardBlocked { source: usize, target: usize },
    /// Forward edge was requeued with a larger key.
    ForwardRequeued,
    /// Forward edge could not improve the tree or the solution.
    ForwardSkipped,
    /// No queued edge can improve the solution.
    BatchExhausted,
}

/// The adaptive batch planner.
#[derive(Debug)]
pub struct FitPlanner {
    problem: Problem,
    config: PlannerConfig,
    rng: ChaCha8Rng,
    samples: SampleSet,
    dense_resolution: f64,
    sparse_resolution: f64,
    radius: f64,
    radius_override: Option<f64>,
    neighbor_index: Option<NeighborIndex>,
    neighbor_cache: Vec<Option<Vec<u32>>>,
    edges: EdgeMap<EdgeStatus>,
    start_dist: Vec<f64>,
    goal_dist: Vec<f64>,
    forward: SearchTree,
    forward_queue: EdgeQueue<3>,
    reverse: SearchTree,
    reverse_effort: Vec<f64>,
    reverse_closed: Vec<bool>,
    reverse_queue: EdgeQueue<2>,
    c_current: f64,
    best_path: Vec<State>,
    controller: BatchController,
    trace: Vec<(f64, f64)>,
    counters: Counters,
    digest: SampleDigest,
    clock: Instant,
    reverse_restarts: u64,
}

impl FitPlanner {
    pub fn new(problem: Problem, config: PlannerConfig, seed: u64) -> Result<Self> {
        problem.validate()?;
        config.validate()?;
        let (dense_resolution, sparse_resolution) = config.resolutions(&problem);
        let controller = BatchController::new(config.strategy, config.batch_size, problem.dim())?
            .with_iteration_budget(config.iteration_budget);
        let samples = SampleSet::new(problem.start.clone(), problem.goals.clone());
        let mut planner = FitPlanner {
            rng: ChaCha8Rng::seed_from_u64(seed),
            samples,
            dense_resolution,
            sparse_resolution,
            radius: f64::INFINITY,
            radius_override: None,
            neighbor_index: None,
            neighbor_cache: Vec::new(),
            edges: EdgeMap::default(),
            start_dist: Vec::new(),
            goal_dist: Vec::new(),
            forward: SearchTree::new(TreeRole::Forward),
            forward_queue: EdgeQueue::default(),
            reverse: SearchTree::new(TreeRole::Reverse),
            reverse_effort: Vec::new(),
            reverse_closed: Vec::new(),
            reverse_queue: EdgeQueue::default(),
            c_current: f64::INFINITY,
            best_path: Vec::new(),
            controller,
            trace: Vec::new(),
            counters: Counters::default(),
            digest: SampleDigest::default(),
            clock: Instant::now(),
            reverse_restarts: 0,
            problem,
            config,
        };
        for i in 0..planner.samples.len() {
            planner.cache_distances(i);
        }
        Ok(planner)
    }

    fn cache_distances(&mut self, idx: usize) {
        let x = self.samples.state(idx);
        self.start_dist.push(x.dist(&self.problem.start));
        let g = self
            .problem
            .goals
            .iter()
            .map(|g| x.dist(g))
            .fold(f64::INFINITY, f64::min);
        self.goal_dist.push(g);
    }

    pub fn problem(&self) -> &Problem {
        &self.problem
    }

    pub fn config(&self) -> &PlannerConfig {
        &self.config
    }

    pub fn samples(&self) -> &SampleSet {
        &self.samples
    }

    pub fn controller(&self) -> &BatchController {
        &self.controller
    }

    pub fn counters(&self) -> Counters {
        self.counters
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn resolutions(&self) -> (f64, f64) {
        (self.dense_resolution, self.sparse_resolution)
    }

    pub fn c_current(&self) -> f64 {
        self.c_current
    }

    pub fn best_path(&self) -> &[State] {
        &self.best_path
    }

    pub fn trace(&self) -> &[(f64, f64)] {
        &self.trace
    }

    pub fn forward_tree(&self) -> &SearchTree {
        &self.forward
    }

    pub fn reverse_tree(&self) -> &SearchTree {
        &self.reverse
    }

    pub fn reverse_restarts(&self) -> u64 {
        self.reverse_restarts
    }

    pub fn is_reverse_closed(&self, idx: usize) -> bool {
        self.reverse_closed.get(idx).copied().unwrap_or(false)
    }

    pub fn forward_queue_len(&self) -> usize {
        self.forward_queue.len()
    }

    pub fn reverse_queue_len(&self) -> usize {
        self.reverse_queue.len()
    }

    pub fn edge_status(&self, a: usize, b: usize) -> Option<EdgeStatus> {
        self.edges.get(&undirected(a, b)).copied()
    }

    pub fn sample_digest(&self) -> u64 {
        self.digest.value()
    }

    /// Uses a fixed connection radius instead of the shrinking one.
    pub fn set_radius_override(&mut self, r: Option<f64>) {
        self.radius_override = r;
    }

    /// Adds states to the graph without drawing them. Invalid states are rejected.
    pub fn add_samples<I: IntoIterator<Item = State>>(&mut self, states: I) -> Result<usize> {
        let mut added = 0;
        for x in states {
            if x.dim() != self.problem.dim() {
                return Err(PlanError::DimensionMismatch {
                    expected: self.problem.dim(),
                    got: x.dim(),
                });
            }
            if !state_valid(&x, &self.problem.world) {
                continue;
            }
            self.push_sample(x);
            added += 1;
        }
        Ok(added)
    }

    fn push_sample(&mut self, x: State) {
        self.digest.add(&x);
        self.samples.push(x);
        self.counters.samples += 1;
        let idx = self.samples.len() - 1;
        self.cache_distances(idx);
    }

    fn informed_set(&self) -> Option<InformedSet> {
        if self.c_current.is_finite() {
            InformedSet::new(&self.problem.start, &self.problem.goals, self.c_current).ok()
        } else {
            None
        }
    }

    /// Measure of the region new samples are drawn from.
    fn informed_measure(&self) -> f64 {
        let space = self.problem.world.bounds.measure();
        match self.informed_set() {
            Some(set) => set.measure().min(space),
            None => space,
        }
    }

    /// True once the solution cost equals the straight-line lower bound.
    pub fn is_optimal(&self) -> bool {
        self.c_current.is_finite() && self.informed_measure() <= 0.0
    }

    /// Draws `count` valid states, informed once a solution exists.
    pub fn sample_batch(&mut self, count: usize) -> Result<usize> {
        let informed = self.informed_set();
        let bounds = self.problem.world.bounds.clone();
        let mut added = 0;
        for _ in 0..count {
            let mut found = None;
            for _ in 0..VALID_SAMPLE_ATTEMPTS {
                let x = match &informed {
                    Some(set) => set.sample(&bounds, &mut self.rng, self.config.rejection_budget)?,
                    None => sample_uniform(&bounds, &mut self.rng),
                };
                if state_valid(&x, &self.problem.world) {
                    found = Some(x);
                    break;
                }
            }
            match found {
                Some(x) => {
                    self.push_sample(x);
                    added += 1;
                }
                None => return Err(PlanError::SamplingStarved(VALID_SAMPLE_ATTEMPTS)),
            }
        }
        Ok(added)
    }

    fn update_radius(&mut self) -> Result<()> {
        if let Some(r) = self.radius_override {
            self.radius = r;
            return Ok(());
        }
        let q = if self.config.count_informed_only {
            self.samples.count_in_informed()
        } else {
            self.samples.len()
        };
        let measure = self.informed_measure();
        self.radius = if measure > 0.0 {
            rgg_radius(q, measure, self.problem.dim(), self.config.eta)?
        } else {
            0.0
        };
        Ok(())
    }

    fn neighbors_of(&mut self, idx: usize) -> Vec<u32> {
        if let Some(Some(cached)) = self.neighbor_cache.get(idx) {
            return cached.clone();
        }
        let index = self
            .neighbor_index
            .get_or_insert_with(|| NeighborIndex::build(&self.samples, self.radius));
        let found: Vec<u32> = index
            .query(&self.samples, idx)
            .into_iter()
            .map(|j| j as u32)
            .collect();
        if self.neighbor_cache.len() < self.samples.len() {
            self.neighbor_cache.resize(self.samples.len(), None);
        }
        self.neighbor_cache[idx] = Some(found.clone());
        found
    }

    fn edge_cost(&self, a: usize, b: usize) -> f64 {
        self.samples.state(a).dist(self.samples.state(b))
    }

    fn edge_effort(&self, a: usize, b: usize) -> f64 {
        check_count(self.edge_cost(a, b), self.sparse_resolution) as f64
    }

    /// Interpolated check count of a sparse check of this edge.
    pub fn sparse_effort(&self, a: usize, b: usize) -> f64 {
        self.edge_effort(a, b)
    }

    /// Admissible cost-to-go: exact once settled by the reverse search,
    /// infinite if the reverse search finished without reaching it, and the
    /// straight-line distance to the nearest goal otherwise.
    pub fn heuristic(&self, idx: usize) -> f64 {
        if self.is_reverse_closed(idx) {
            self.reverse.cost(idx)
        } else if self.reverse_queue.is_empty() {
            f64::INFINITY
        } else {
            self.goal_dist[idx]
        }
    }

    fn forward_key(&self, source: usize, target: usize) -> Key<3> {
        let g = self.forward.cost(source);
        let through = g + self.edge_cost(source, target);
        Key([
            through + self.config.inflation_factor * self.heuristic(target),
            through,
            g,
        ])
    }

    /// Forward queue entries for the outgoing edges of `idx`, sorted by key.
    ///
    /// Edges known to be invalid, edges back to the start, edges that cannot
    /// lower the target's cost and edges that cannot beat the current
    /// solution are left out.
    pub fn expand_forward(&mut self, idx: usize) -> Vec<EdgeQueueEntry<3>> {
        let g = self.forward.cost(idx);
        let parent = self.forward.parent[idx];
        let mut out = Vec::new();
        for j in self.neighbors_of(idx) {
            let j = j as usize;
            if j == self.samples.start_index() || Some(j) == parent {
                continue;
            }
            if self.edge_status(idx, j) == Some(EdgeStatus::Invalid) {
                continue;
            }
            let through = g + self.edge_cost(idx, j);
            if through >= self.forward.cost(j) {
                continue;
            }
            if through + self.heuristic(j) >= self.c_current {
                continue;
            }
            out.push(EdgeQueueEntry {
                source: idx,
                target: j,
                key: self.forward_key(idx, j),
            });
        }
        out.sort();
        out
    }

    /// Reverse queue entries for the outgoing edges of `idx`, sorted by key.
    pub fn expand_reverse(&mut self, idx: usize) -> Vec<EdgeQueueEntry<2>> {
        let h = self.reverse.cost(idx);
        let effort = self.reverse_effort[idx];
        let mut out = Vec::new();
        for j in self.neighbors_of(idx) {
            let j = j as usize;
            if self.reverse_closed[j] || self.edge_status(idx, j) == Some(EdgeStatus::Invalid) {
                continue;
            }
            out.push(EdgeQueueEntry {
                source: idx,
                target: j,
                key: Key([
                    h + self.edge_cost(idx, j) + self.start_dist[j],
                    effort + self.edge_effort(idx, j),
                ]),
            });
        }
        out.sort();
        out
    }

    fn push_forward_edges(&mut self, idx: usize) {
        for e in self.expand_forward(idx) {
            self.forward_queue.push(e);
        }
    }

    fn push_reverse_edges(&mut self, idx: usize) {
        for e in self.expand_reverse(idx) {
            self.reverse_queue.push(e);
        }
    }

    fn reset_reverse(&mut self) {
        let len = self.samples.len();
        self.reverse.reset(len);
        self.reverse_effort.clear();
        self.reverse_effort.resize(len, f64::INFINITY);
        self.reverse_closed.clear();
        self.reverse_closed.resize(len, false);
        self.reverse_queue.clear();
        let goals: Vec<usize> = self.samples.goal_indices().collect();
        for &g in &goals {
            self.reverse.cost_to_root[g] = 0.0;
            self.reverse_effort[g] = 0.0;
            self.reverse_closed[g] = true;
        }
        for g in goals {
            self.push_reverse_edges(g);
        }
    }

    fn restart_reverse(&mut self) {
        self.reverse_restarts += 1;
        self.reset_reverse();
    }

    /// Rebuilds the neighbor structure and restarts both searches on the
    /// current sample set.
    pub fn start_batch(&mut self) -> Result<()> {
        self.update_radius()?;
        self.neighbor_index = None;
        self.neighbor_cache.clear();
        self.neighbor_cache.resize(self.samples.len(), None);
        let len = self.samples.len();
        self.forward.reset(len);
        self.forward_queue.clear();
        self.reset_reverse();
        let start = self.samples.start_index();
        self.forward.cost_to_root[start] = 0.0;
        self.push_forward_edges(start);
        Ok(())
    }

    fn sparse_check(&mut self, a: usize, b: usize) -> bool {
        let check = motion_valid(
            self.samples.state(a),
            self.samples.state(b),
            &self.problem.world,
            self.sparse_resolution,
        );
        self.counters.sparse_checks += check.checks as u64;
        let status = if check.valid {
            EdgeStatus::SparseValid
        } else {
            EdgeStatus::Invalid
        };
        self.edges.insert(undirected(a, b), status);
        check.valid
    }

    /// Sparse check, then dense check; the edge is valid only if both pass.
    fn dense_check(&mut self, a: usize, b: usize) -> bool {
        match self.edge_status(a, b) {
            Some(EdgeStatus::DenseValid) => return true,
            Some(EdgeStatus::Invalid) => return false,
            Some(EdgeStatus::SparseValid) => {}
            None => {
                if !self.sparse_check(a, b) {
                    return false;
                }
            }
        }
        let check = motion_valid(
            self.samples.state(a),
            self.samples.state(b),
            &self.problem.world,
            self.dense_resolution,
        );
        self.counters.dense_checks += check.checks as u64;
        let status = if check.valid {
            EdgeStatus::DenseValid
        } else {
            EdgeStatus::Invalid
        };
        self.edges.insert(undirected(a, b), status);
        check.valid
    }

    fn volume_for(&self, cost: f64) -> f64 {
        InformedSet::new(&self.problem.start, &self.problem.goals, cost)
            .map(|s| s.measure())
            .unwrap_or(0.0)
    }

    fn update_batch_size(&mut self) -> Result<()> {
        let cost = self.c_current;
        let start = self.problem.start.clone();
        let goals = self.problem.goals.clone();
        self.controller.on_cost_update(cost, |c| {
            InformedSet::new(&start, &goals, c)
                .map(|s| s.measure())
                .unwrap_or(0.0)
        })?;
        Ok(())
    }

    /// Pops the best reverse edge and processes it.
    pub fn reverse_iteration(&mut self) -> Result<SearchEvent> {
        let Some(edge) = self.reverse_queue.pop() else {
            return Err(PlanError::Contract("reverse queue is empty".into()));
        };
        let (s, t) = (edge.source, edge.target);
        self.reverse_closed[s] = true;
        if self.reverse_closed[t] {
            return Ok(SearchEvent::ReverseSkipped);
        }
        let through = self.reverse.cost(s) + self.edge_cost(s, t);
        if through >= self.reverse.cost(t) {
            return Ok(SearchEvent::ReverseSkipped);
        }
        let passes = match self.edge_status(s, t) {
            Some(EdgeStatus::Invalid) => return Ok(SearchEvent::ReverseSkipped),
            Some(_) => true,
            None => self.sparse_check(s, t),
        };
        if !passes {
            return Ok(SearchEvent::ReverseBlocked { source: s, target: t });
        }
        self.reverse.cost_to_root[t] = through;
        self.reverse.parent[t] = Some(s);
        self.reverse_effort[t] = self.reverse_effort[s] + self.edge_effort(s, t);
        self.reverse_closed[t] = true;
        self.push_reverse_edges(t);
        self.update_batch_size()?;
        Ok(SearchEvent::ReverseRelaxed { source: s, target: t })
    }

    /// Pops the best forward edge and processes it.
    pub fn forward_iteration(&mut self) -> Result<SearchEvent> {
        let Some(edge) = self.forward_queue.pop() else {
            return Err(PlanError::Contract("forward queue is empty".into()));
        };
        let (s, t) = (edge.source, edge.target);
        let current = self.forward_key(s, t);
        if current > edge.key {
            self.forward_queue.push(EdgeQueueEntry {
                key: current,
                ..edge
            });
            return Ok(SearchEvent::ForwardRequeued);
        }
        let through = self.forward.cost(s) + self.edge_cost(s, t);
        if through + self.heuristic(t) >= self.c_current {
            return Ok(SearchEvent::ForwardSkipped);
        }
        if self.forward.parent[t] == Some(s) {
            if through < self.forward.cost(t) {
                self.forward.cost_to_root[t] = through;
            }
            self.push_forward_edges(t);
            return Ok(SearchEvent::ForwardRefreshed { source: s, target: t });
        }
        if through >= self.forward.cost(t) {
            return Ok(SearchEvent::ForwardSkipped);
        }
        if !self.dense_check(s, t) {
            let in_reverse_tree =
                self.reverse.parent[s] == Some(t) || self.reverse.parent[t] == Some(s);
            if in_reverse_tree {
                self.restart_reverse();
            }
            return Ok(SearchEvent::ForwardBlocked { source: s, target: t });
        }
        self.forward.cost_to_root[t] = through;
        self.forward.parent[t] = Some(s);
        if self.samples.is_goal(t) {
            self.record_solution(t);
        }
        self.push_forward_edges(t);
        Ok(SearchEvent::ForwardAdded { source: s, target: t })
    }

    fn forward_path_to(&self, idx: usize) -> Vec<usize> {
        let mut path = vec![idx];
        let mut cur = idx;
        while let Some(p) = self.forward.parent[cur] {
            path.push(p);
            cur = p;
            debug_assert!(path.len() <= self.samples.len(), "cycle in forward tree");
        }
        path.reverse();
        path
    }

    fn record_solution(&mut self, goal: usize) {
        let states: Vec<State> = self
            .forward_path_to(goal)
            .into_iter()
            .map(|i| self.samples.state(i).clone())
            .collect();
        let cost = path_length(&states);
        if cost < self.c_current {
            self.c_current = cost;
            self.best_path = states;
            self.trace.push((self.clock.elapsed().as_secs_f64(), cost));
        }
    }

    /// One interleaved step: the reverse search runs while its best key is no
    /// worse than the forward one or the forward target is not yet settled.
    pub fn step(&mut self) -> Result<SearchEvent> {
        let Some(f_top) = self.forward_queue.peek() else {
            return Ok(SearchEvent::BatchExhausted);
        };
        if self.config.truncation_factor * f_top.key.0[0] >= self.c_current {
            return Ok(SearchEvent::BatchExhausted);
        }
        let reverse_first = match self.reverse_queue.peek() {
            Some(r_top) => r_top.key.0[0] <= f_top.key.0[0] || !self.reverse_closed[f_top.target],
            None => false,
        };
        if reverse_first {
            self.reverse_iteration()
        } else {
            self.forward_iteration()
        }
    }

    /// Runs the current batch to exhaustion.
    pub fn run_batch(&mut self) -> Result<()> {
        while self.step()? != SearchEvent::BatchExhausted {}
        Ok(())
    }

    /// Prunes states outside the informed set and updates the batch size.
    pub fn finish_batch(&mut self) -> Result<usize> {
        let pruned = match self.informed_set() {
            Some(set) => prune(&mut self.samples, &set),
            None => 0,
        };
        self.update_batch_size()?;
        Ok(pruned)
    }

    /// Runs batches until the budget runs out or the solution is provably optimal.
    pub fn solve(&mut self, budget: Budget) -> Result<PlannerResult> {
        self.clock = Instant::now();
        if budget.is_zero() {
            return Ok(self.result());
        }
        'batches: loop {
            if budget.iterations_exhausted(self.counters.batches) || budget.time_exhausted(self.clock.elapsed()) {
                break;
            }
            if self.is_optimal() {
                break;
            }
            self.controller.begin_batch()?;
            let size = self.controller.current_batch;
            match self.sample_batch(size) {
                Ok(_) => {}
                Err(PlanError::SamplingStarved(_)) => break,
                Err(e) => return Err(e),
            }
            self.counters.batches += 1;
            self.start_batch()?;
            let mut steps = 0u64;
            loop {
                if self.step()? == SearchEvent::BatchExhausted {
                    break;
                }
                steps += 1;
                if steps.is_multiple_of(32) && budget.time_exhausted(self.clock.elapsed()) {
                    break 'batches;
                }
            }
            self.finish_batch()?;
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

    #[doc(hidden)]
    pub fn informed_volume(&self, cost: f64) -> f64 {
        self.volume_for(cost)
    }

    #[doc(hidden)]
    pub fn rng_mut(&mut self) -> &mut impl Rng {
        &mut self.rng
    }
}

/// Convenience wrapper: build a planner and solve.
pub fn solve(problem: &Problem, config: &PlannerConfig, budget: Budget, seed: u64) -> Result<PlannerResult> {
    FitPlanner::new(problem.clone(), config.clone(), seed)?.solve(budget)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{AxisAlignedBox, Bounds, World};

    fn s(v: &[f64]) -> State {
        State(v.to_vec())
    }

    fn empty_problem() -> Problem {
        Problem::new(World::empty(2), s(&[0.2, 0.5]), vec![s(&[0.8, 0.5])]).unwrap()
    }

    fn wall_problem() -> Problem {
        let world = World::new(
            Bounds::unit_cube(2),
            vec![
                AxisAlignedBox::new(s(&[0.4, 0.0]), s(&[0.6, 0.58])).unwrap(),
                AxisAlignedBox::new(s(&[0.4, 0.62]), s(&[0.6, 1.0])).unwrap(),
            ],
        )
        .unwrap();
        Problem::new(world, s(&[0.2, 0.5]), vec![s(&[0.8, 0.5])]).unwrap()
    }

    #[test]
    fn key_ordering_is_lexicographic() {
        assert!(Key([1.0, 5.0]) < Key([2.0, 0.0]));
        assert!(Key([1.0, 1.0]) < Key([1.0, 2.0]));
        assert_eq!(Key([1.0, 1.0]).cmp(&Key([1.0, 1.0])), Ordering::Equal);
    }

    #[test]
    fn edge_queue_has_set_semantics() {
        let mut q: EdgeQueue<1> = EdgeQueue::default();
        let e = |s, t, k| EdgeQueueEntry { source: s, target: t, key: Key([k]) };
        assert!(q.push(e(0, 1, 3.0)));
        assert!(!q.push(e(0, 1, 4.0)));
        assert!(q.push(e(0, 1, 2.0)));
        assert!(q.push(e(0, 2, 2.5)));
        assert_eq!(q.len(), 2);
        assert_eq!(q.pop().unwrap(), e(0, 1, 2.0));
        assert_eq!(q.pop().unwrap(), e(0, 2, 2.5));
        assert!(q.pop().is_none());
    }

    #[test]
    fn isolated_start_expands_to_nothing() {
        let mut p = FitPlanner::new(empty_problem(), PlannerConfig::default(), 0).unwrap();
        p.set_radius_override(Some(0.1));
        p.start_batch().unwrap();
        assert!(p.expand_forward(0).is_empty());
        assert_eq!(p.step().unwrap(), SearchEvent::BatchExhausted);
    }

    #[test]
    fn start_with_three_neighbors() {
        let mut p = FitPlanner::new(empty_problem(), PlannerConfig::default(), 0).unwrap();
        // (0.7, 0.5) gives the reverse search an edge, so the heuristic stays finite
        p.add_samples([s(&[0.3, 0.5]), s(&[0.2, 0.65]), s(&[0.25, 0.4]), s(&[0.7, 0.5])]).unwrap();
        p.set_radius_override(Some(0.2));
        p.start_batch().unwrap();
        let entries = p.expand_forward(0);
        assert_eq!(entries.len(), 3);
        // keys: g = 0, c = edge length, h = straight-line distance to the goal
        let hand = |x: &[f64]| {
            let c = ((x[0] - 0.2f64).powi(2) + (x[1] - 0.5f64).powi(2)).sqrt();
            let h = ((x[0] - 0.8f64).powi(2) + (x[1] - 0.5f64).powi(2)).sqrt();
            c + h
        };
        let want = [hand(&[0.3, 0.5]), hand(&[0.25, 0.4]), hand(&[0.2, 0.65])];
        let got: Vec<f64> = entries.iter().map(|e| e.key.0[0]).collect();
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() < 1e-12);
        }
        assert!(entries.windows(2).all(|w| w[0].key <= w[1].key));
        // re-expansion never duplicates a queued edge
        let before = p.forward_queue_len();
        for e in p.expand_forward(0) {
            assert!(!p.forward_queue.push(e));
        }
        assert_eq!(p.forward_queue_len(), before);
    }

    #[test]
    fn direct_edge_gives_straight_line_solution() {
        let mut p = FitPlanner::new(empty_problem(), PlannerConfig::default(), 0).unwrap();
        p.set_radius_override(Some(1.0));
        p.start_batch().unwrap();
        p.run_batch().unwrap();
        assert!((p.c_current() - 0.6).abs() < 1e-12);
        assert_eq!(p.best_path().len(), 2);
    }

    #[test]
    fn reverse_search_blocks_wall_edges() {
        let mut p = FitPlanner::new(
            wall_problem(),
            PlannerConfig {
                sparse_resolution: Some(0.1),
                ..Default::default()
            },
            0,
        )
        .unwrap();
        p.set_radius_override(Some(1.0));
        p.start_batch().unwrap();
        // the only reverse edge is goal -> start, straight through the wall
        assert!(matches!(p.reverse_iteration().unwrap(), SearchEvent::ReverseBlocked { .. }));
        assert_eq!(p.edge_status(0, 1), Some(EdgeStatus::Invalid));
        assert!(p.reverse_queue_len() == 0);
        p.run_batch().unwrap();
        assert!(p.c_current().is_infinite());
    }

    #[test]
    fn reverse_effort_counts_sparse_checks() {
        let mut p = FitPlanner::new(
            empty_problem(),
            PlannerConfig {
                sparse_resolution: Some(0.05),
                ..Default::default()
            },
            0,
        )
        .unwrap();
        p.add_samples([s(&[0.5, 0.55])]).unwrap();
        p.set_radius_override(Some(0.35));
        p.start_batch().unwrap();
        while p.reverse_queue_len() > 0 {
            p.reverse_iteration().unwrap();
        }
        let len = (0.3f64 * 0.3 + 0.05 * 0.05).sqrt();
        assert_eq!(p.reverse_effort[2], ((len / 0.05).ceil() + 1.0));
        assert!((p.reverse_tree().cost(2) - len).abs() < 1e-12);
        assert!((p.reverse_tree().cost(0) - 2.0 * len).abs() < 1e-12);
    }

    #[test]
    fn empty_world_converges_to_straight_line() {
        let r = solve(&empty_problem(), &PlannerConfig::default(), Budget::iterations(20), 1).unwrap();
        assert!(r.success);
        assert!(r.final_cost <= 0.6 * 1.01, "{}", r.final_cost);
        assert!(r.trace_is_monotone());
    }

    #[test]
    fn wall_gap_is_solved_and_paths_replay() {
        let problem = wall_problem();
        for seed in 0..5 {
            let mut p = FitPlanner::new(problem.clone(), PlannerConfig::default(), seed).unwrap();
            let r = p.solve(Budget::iterations(20)).unwrap();
            assert!(r.success, "seed {seed}");
            assert!(r.trace_is_monotone());
            let (dense, sparse) = p.resolutions();
            for w in r.path.windows(2) {
                assert!(motion_valid(&w[0], &w[1], &problem.world, dense).valid);
                assert!(motion_valid(&w[0], &w[1], &problem.world, sparse).valid);
            }
            assert!((r.path_cost() - r.final_cost).abs() < 1e-9);
        }
    }

    #[test]
    fn empty_world_keeps_improving_with_more_batches() {
        // the RGG path only approaches the straight line slowly (about 0.3% after 300 batches)
        let short = solve(&empty_problem(), &PlannerConfig::default(), Budget::iterations(20), 2).unwrap();
        let long = solve(&empty_problem(), &PlannerConfig::default(), Budget::iterations(60), 2).unwrap();
        assert!(long.final_cost < short.final_cost);
        assert!(long.final_cost <= 0.6 * 1.005, "{}", long.final_cost);
    }

    #[test]
    fn zero_budget_returns_empty_result() {
        let r = solve(&empty_problem(), &PlannerConfig::default(), Budget::seconds(0.0), 1).unwrap();
        assert!(!r.success);
        assert!(r.final_cost.is_infinite());
        assert_eq!(r.counters, Counters::default());
    }

    #[test]
    fn iteration_budget_is_deterministic() {
        let problem = wall_problem();
        let a = solve(&problem, &PlannerConfig::default(), Budget::iterations(30), 42).unwrap();
        let b = solve(&problem, &PlannerConfig::default(), Budget::iterations(30), 42).unwrap();
        assert_eq!(a.counters, b.counters);
        assert_eq!(a.sample_digest, b.sample_digest);
        let costs = |r: &PlannerResult| r.trace.iter().map(|e| e.1).collect::<Vec<_>>();
        assert_eq!(costs(&a), costs(&b));
        assert_eq!(a.counters.batches, 30);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        for cfg in [
            PlannerConfig { eta: 0.9, ..Default::default() },
            PlannerConfig { batch_size: 0, ..Default::default() },
            PlannerConfig { dense_resolution: Some(0.0), ..Default::default() },
        ] {
            assert!(matches!(
                FitPlanner::new(empty_problem(), cfg, 0),
                Err(PlanError::Config(_))
            ));
        }
    }
}

