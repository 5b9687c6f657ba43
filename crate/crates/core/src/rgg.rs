//! Implicit random geometric graph over the sampled states.
//!
//! Edges are never stored: two alive states are connected when they lie
//! within the current connection radius of each other.

use std::collections::HashMap;

use crate::error::{PlanError, Result};
use crate::geometry::{unit_ball_measure, InformedSet, State};

/// Above this many alive states neighbor queries go through a uniform grid.
pub const BRUTE_FORCE_LIMIT: usize = 2_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RggParams {
    /// Connection-radius multiplier, must exceed 1.
    pub eta: f64,
    /// Count only states inside the informed set toward `q` (otherwise all alive states).
    pub count_informed_only: bool,
}

impl Default for RggParams {
    fn default() -> Self {
        RggParams {
            eta: 1.1,
            count_informed_only: true,
        }
    }
}

impl RggParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 1.0) || !self.eta.is_finite() {
            return Err(PlanError::Config(format!(
                "eta must exceed 1, got {}",
                self.eta
            )));
        }
        Ok(())
    }
}

/// Connection radius `eta * (2 (1 + 1/n) (measure / zeta_n) (ln q / q))^(1/n)`.
pub fn rgg_radius(q: usize, informed_measure: f64, n: usize, eta: f64) -> Result<f64> {
    if q < 2 {
        return Err(PlanError::RadiusUndefined(q));
    }
    if !(informed_measure > 0.0) || n < 2 || !(eta > 1.0) {
        return Err(PlanError::Contract(format!(
            "rgg_radius needs measure > 0, n >= 2, eta > 1 (got {informed_measure}, {n}, {eta})"
        )));
    }
    let nf = n as f64;
    let zeta = unit_ball_measure(n as i64)?;
    let qf = q as f64;
    let inner = 2.0 * (1.0 + 1.0 / nf) * (informed_measure / zeta) * (qf.ln() / qf);
    Ok(eta * inner.powf(1.0 / nf))
}

/// Sampled states with lazy (flag-based) pruning.
///
/// Index 0 is the start, indices `1..=goal_count` the goals. Indices are
/// stable for the life of the set.
#[derive(Debug, Clone)]
pub struct SampleSet {
    states: Vec<State>,
    alive: Vec<bool>,
    goal_count: usize,
    alive_count: usize,
    count_in_informed: usize,
}

impl SampleSet {
    pub fn new(start: State, goals: Vec<State>) -> Self {
        let goal_count = goals.len();
        let mut states = Vec::with_capacity(1 + goal_count);
        states.push(start);
        states.extend(goals);
        let n = states.len();
        SampleSet {
            states,
            alive: vec![true; n],
            goal_count,
            alive_count: n,
            count_in_informed: n,
        }
    }

    pub fn push(&mut self, x: State) -> usize {
        self.states.push(x);
        self.alive.push(true);
        self.alive_count += 1;
        // new samples are drawn from the informed set
        self.count_in_informed += 1;
        self.states.len() - 1
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state(&self, idx: usize) -> &State {
        &self.states[idx]
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn is_alive(&self, idx: usize) -> bool {
        self.alive[idx]
    }

    pub fn alive_count(&self) -> usize {
        self.alive_count
    }

    /// `q`: alive states inside the informed set.
    pub fn count_in_informed(&self) -> usize {
        self.count_in_informed
    }

    pub fn start_index(&self) -> usize {
        0
    }

    pub fn goal_indices(&self) -> std::ops::RangeInclusive<usize> {
        1..=self.goal_count
    }

    pub fn is_goal(&self, idx: usize) -> bool {
        idx >= 1 && idx <= self.goal_count
    }

    pub fn is_terminal(&self, idx: usize) -> bool {
        idx <= self.goal_count
    }

    pub fn alive_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.states.len()).filter(|&i| self.alive[i])
    }

    /// Recounts `q` against a solution cost (`inf` counts every alive state).
    pub fn recount_informed(&mut self, informed: Option<&InformedSet>) {
        self.count_in_informed = match informed {
            None => self.alive_count,
            Some(set) => self
                .alive_indices()
                .filter(|&i| self.is_terminal(i) || set.contains(&self.states[i]))
                .count(),
        };
    }
}

/// Closed-ball radius query by linear scan.
pub fn neighbors(idx: usize, set: &SampleSet, r: f64) -> Vec<usize> {
    if set.alive_count() > BRUTE_FORCE_LIMIT {
        return NeighborIndex::build(set, r).query(set, idx);
    }
    brute_force_neighbors(idx, set, r)
}

fn brute_force_neighbors(idx: usize, set: &SampleSet, r: f64) -> Vec<usize> {
    let x = set.state(idx);
    set.alive_indices()
        .filter(|&j| j != idx && x.dist(set.state(j)) <= r)
        .collect()
}

/// Radius-query structure for one (sample set, radius) pair.
#[derive(Debug)]
pub enum NeighborIndex {
    BruteForce(AliveSnapshot),
    Grid(UniformGrid),
}

impl NeighborIndex {
    pub fn build(set: &SampleSet, r: f64) -> Self {
        if set.alive_count() > BRUTE_FORCE_LIMIT {
            NeighborIndex::Grid(UniformGrid::build(set, r))
        } else {
            NeighborIndex::BruteForce(AliveSnapshot::build(set, r))
        }
    }

    /// Alive neighbors of `idx` in increasing index order.
    pub fn query(&self, set: &SampleSet, idx: usize) -> Vec<usize> {
        match self {
            NeighborIndex::BruteForce(s) => s.query(set.state(idx), idx),
            NeighborIndex::Grid(g) => g.query(set, idx),
        }
    }
}

/// Alive states copied into one flat buffer for linear scans.
#[derive(Debug)]
pub struct AliveSnapshot {
    r: f64,
    dim: usize,
    indices: Vec<usize>,
    coords: Vec<f64>,
}

impl AliveSnapshot {
    pub fn build(set: &SampleSet, r: f64) -> Self {
        let dim = set.state(0).dim();
        let indices: Vec<usize> = set.alive_indices().collect();
        let mut coords = Vec::with_capacity(indices.len() * dim);
        for &i in &indices {
            coords.extend_from_slice(set.state(i).coords());
        }
        AliveSnapshot { r, dim, indices, coords }
    }

    pub fn query(&self, x: &State, idx: usize) -> Vec<usize> {
        let x = x.coords();
        let mut out = Vec::new();
        let loose = (self.r * (1.0 + 1e-9)).powi(2);
        for (k, y) in self.coords.chunks_exact(self.dim).enumerate() {
            // same arithmetic as State::dist, so the boundary is identical
            let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
            if d2 <= loose && d2.sqrt() <= self.r && self.indices[k] != idx {
                out.push(self.indices[k]);
            }
        }
        out
    }
}

/// Hash grid with cell width equal to the query radius.
#[derive(Debug)]
pub struct UniformGrid {
    r: f64,
    origin: Vec<f64>,
    cells: HashMap<Vec<i64>, Vec<usize>>,
}

impl UniformGrid {
    pub fn build(set: &SampleSet, r: f64) -> Self {
        let dim = set.state(0).dim();
        let mut origin = vec![f64::INFINITY; dim];
        for i in set.alive_indices() {
            for (o, c) in origin.iter_mut().zip(set.state(i).coords()) {
                *o = o.min(*c);
            }
        }
        let mut grid = UniformGrid {
            r,
            origin,
            cells: HashMap::new(),
        };
        for i in set.alive_indices() {
            let key = grid.cell_of(set.state(i));
            grid.cells.entry(key).or_default().push(i);
        }
        grid
    }

    fn cell_of(&self, x: &State) -> Vec<i64> {
        x.coords()
            .iter()
            .zip(&self.origin)
            .map(|(c, o)| ((c - o) / self.r).floor() as i64)
            .collect()
    }

    pub fn query(&self, set: &SampleSet, idx: usize) -> Vec<usize> {
        let x = set.state(idx);
        let home = self.cell_of(x);
        let dim = home.len();
        let mut out = Vec::new();
        let mut visit = |members: &Vec<usize>| {
            for &j in members {
                if j != idx && x.dist(set.state(j)) <= self.r {
                    out.push(j);
                }
            }
        };
        let stencil = 3f64.powi(dim as i32);
        if stencil <= self.cells.len() as f64 {
            let mut offset = vec![-1i64; dim];
            loop {
                let key: Vec<i64> = home.iter().zip(&offset).map(|(h, o)| h + o).collect();
                if let Some(members) = self.cells.get(&key) {
                    visit(members);
                }
                // odometer over {-1, 0, 1}^dim
                let mut k = 0;
                while k < dim {
                    offset[k] += 1;
                    if offset[k] <= 1 {
                        break;
                    }
                    offset[k] = -1;
                    k += 1;
                }
                if k == dim {
                    break;
                }
            }
        } else {
            for (key, members) in &self.cells {
                if key.iter().zip(&home).all(|(a, b)| (a - b).abs() <= 1) {
                    visit(members);
                }
            }
        }
        out.sort_unstable();
        out
    }
}

/// Marks dead every non-terminal state outside the informed set.
pub fn prune(set: &mut SampleSet, informed: &InformedSet) -> usize {
    let mut pruned = 0;
    for i in 0..set.len() {
        if set.alive[i] && !set.is_terminal(i) && !informed.contains(&set.states[i]) {
            set.alive[i] = false;
            set.alive_count -= 1;
            pruned += 1;
        }
    }
    set.recount_informed(Some(informed));
    pruned
}
