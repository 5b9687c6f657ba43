//! Planning problems, budgets and results shared by every planner.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{PlanError, Result};
use crate::geometry::{state_valid, State, World};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    pub world: World,
    pub start: State,
    pub goals: Vec<State>,
}

impl Problem {
    pub fn new(world: World, start: State, goals: Vec<State>) -> Result<Self> {
        let p = Problem { world, start, goals };
        p.validate()?;
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.world.dim()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.world.dim();
        if self.goals.is_empty() {
            return Err(PlanError::InvalidProblem("no goal states".into()));
        }
        for (name, x) in std::iter::once(("start", &self.start)).chain(self.goals.iter().map(|g| ("goal", g))) {
            if x.dim() != n {
                return Err(PlanError::DimensionMismatch {
                    expected: n,
                    got: x.dim(),
                });
            }
            if !x.is_finite() {
                return Err(PlanError::InvalidProblem(format!("{name} is not finite")));
            }
            if !state_valid(x, &self.world) {
                return Err(PlanError::InvalidProblem(format!(
                    "{name} {:?} is not in free space",
                    x.coords()
                )));
            }
        }
        if self.goals.iter().any(|g| g.dist(&self.start) == 0.0) {
            return Err(PlanError::InvalidProblem("start coincides with a goal".into()));
        }
        Ok(())
    }

    /// Straight-line distance to the nearest goal, a lower bound on any solution.
    pub fn lower_bound(&self) -> f64 {
        self.goals
            .iter()
            .map(|g| g.dist(&self.start))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Stop condition: wall-clock seconds, iterations (batches for the batch
/// planners, tree extensions for the RRT family), or both.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Budget {
    pub time_s: Option<f64>,
    pub iterations: Option<u64>,
}

impl Budget {
    pub fn seconds(s: f64) -> Self {
        Budget {
            time_s: Some(s),
            iterations: None,
        }
    }

    pub fn iterations(n: u64) -> Self {
        Budget {
            time_s: None,
            iterations: Some(n),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.time_s.is_some_and(|t| t <= 0.0) || self.iterations == Some(0)
    }

    pub fn is_unbounded(&self) -> bool {
        self.time_s.is_none() && self.iterations.is_none()
    }

    pub fn time_exhausted(&self, elapsed: Duration) -> bool {
        self.time_s.is_some_and(|t| elapsed.as_secs_f64() >= t)
    }

    pub fn iterations_exhausted(&self, done: u64) -> bool {
        self.iterations.is_some_and(|n| done >= n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Counters {
    pub samples: u64,
    pub sparse_checks: u64,
    pub dense_checks: u64,
    pub batches: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerResult {
    pub success: bool,
    #[serde(with = "inf_as_null")]
    pub initial_time_s: f64,
    #[serde(with = "inf_as_null")]
    pub initial_cost: f64,
    #[serde(with = "inf_as_null")]
    pub final_cost: f64,
    /// `(seconds since start, cost)` at every improvement.
    pub trace: Vec<(f64, f64)>,
    pub counters: Counters,
    pub path: Vec<State>,
    /// Fingerprint of every state the planner sampled, in order.
    #[serde(skip)]
    pub sample_digest: u64,
}

impl PlannerResult {
    pub fn failure(counters: Counters, sample_digest: u64) -> Self {
        PlannerResult {
            success: false,
            initial_time_s: f64::INFINITY,
            initial_cost: f64::INFINITY,
            final_cost: f64::INFINITY,
            trace: Vec::new(),
            counters,
            path: Vec::new(),
            sample_digest,
        }
    }

    pub fn from_trace(trace: Vec<(f64, f64)>, path: Vec<State>, counters: Counters, sample_digest: u64) -> Self {
        match (trace.first(), trace.last()) {
            (Some(&(t0, c0)), Some(&(_, c1))) => PlannerResult {
                success: true,
                initial_time_s: t0,
                initial_cost: c0,
                final_cost: c1,
                trace,
                counters,
                path,
                sample_digest,
            },
            _ => PlannerResult::failure(counters, sample_digest),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("result serializes")
    }

    pub fn trace_is_monotone(&self) -> bool {
        self.trace.windows(2).all(|w| w[1].1 <= w[0].1 && w[1].0 >= w[0].0)
    }

    /// Sum of segment lengths along the reported path.
    pub fn path_cost(&self) -> f64 {
        path_length(&self.path)
    }
}

pub fn path_length(path: &[State]) -> f64 {
    path.windows(2).map(|w| w[0].dist(&w[1])).sum()
}

/// Order-dependent FNV-1a fingerprint of a stream of states.
#[derive(Debug, Clone, Copy)]
pub struct SampleDigest(u64);

impl Default for SampleDigest {
    fn default() -> Self {
        SampleDigest(0xcbf2_9ce4_8422_2325)
    }
}

impl SampleDigest {
    pub fn add(&mut self, x: &State) {
        for c in x.coords() {
            for b in c.to_bits().to_le_bytes() {
                self.0 ^= b as u64;
                self.0 = self.0.wrapping_mul(0x0100_0000_01b3);
            }
        }
    }

    pub fn value(&self) -> u64 {
        self.0
    }
}

/// Non-finite floats as JSON `null`; `null` reads back as `inf`.
pub mod inf_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}
